//! First-order stationarity diagnostics for box-constrained problems.
//!
//! The measure
//!
//! ```text
//! chi(x) = max { -g · w : x + w in box, |w| <= 1 }
//! ```
//!
//! is zero exactly at KKT points. It is computed here from a gradient `g`
//! supplied by the caller, typically from [`fd_gradient`]; the solver itself
//! never uses it.

use crate::problem::ProblemSpec;
use crate::{Bounds, Error, Result};

/// Bisection cap for the ball multiplier.
const MAX_BISECTIONS: usize = 200;
/// Coordinates of the box narrower than this are frozen at `w_i = 0`.
const THIN_BOX: f64 = 1e-12;

/// Central-difference gradient with step `1e-6 * max(1, |x_i|)`, falling
/// back to a one-sided difference on coordinates whose central stencil
/// leaves the box.
pub fn fd_gradient(problem: &ProblemSpec, x: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    if x.len() != bounds.dim() {
        return Err(Error::DimensionMismatch { expected: bounds.dim(), got: x.len() });
    }
    let f_at = |i: usize, v: f64| {
        let mut p = x.to_vec();
        p[i] = v;
        problem.value(&p)
    };
    let mut g = Vec::with_capacity(x.len());
    for (i, &xi) in x.iter().enumerate() {
        let h = 1e-6 * xi.abs().max(1.0);
        let fwd_ok = bounds.contains_coord(i, xi + h);
        let bwd_ok = bounds.contains_coord(i, xi - h);
        let gi = match (fwd_ok, bwd_ok) {
            (true, true) => (f_at(i, xi + h) - f_at(i, xi - h)) / (2.0 * h),
            (true, false) => (f_at(i, xi + h) - problem.value(x)) / h,
            (false, true) => (problem.value(x) - f_at(i, xi - h)) / h,
            (false, false) => return Err(Error::StencilOutsideBox(i)),
        };
        g.push(gi);
    }
    Ok(g)
}

/// Generators of the cone `K(x, eps)` spanned by the outward normals of the
/// bounds within `eps` of `x`. An empty set encodes `K = {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeGenerators {
    /// `plus[i]` ⇔ `+e_i ∈ K` (upper bound `i` within `eps`).
    pub plus: Vec<bool>,
    /// `minus[i]` ⇔ `-e_i ∈ K` (lower bound `i` within `eps`).
    pub minus: Vec<bool>,
    pub epsilon: f64,
}

impl ConeGenerators {
    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    pub fn is_trivial(&self) -> bool {
        !self.plus.iter().chain(&self.minus).any(|&b| b)
    }

    /// Signed 1-based indices: `+i` for `+e_i`, `-i` for `-e_i`.
    pub fn signed_indices(&self) -> Vec<i64> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            if self.minus[i] {
                out.push(-(i as i64 + 1));
            }
            if self.plus[i] {
                out.push(i as i64 + 1);
            }
        }
        out
    }

    /// Coordinate directions generating the polar cone `K°`, in poll order.
    pub fn polar_generators(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            if !self.plus[i] {
                out.push((i, 1.0));
            }
            if !self.minus[i] {
                out.push((i, -1.0));
            }
        }
        out
    }
}

pub fn k_generators(x: &[f64], bounds: &Bounds, eps: f64) -> ConeGenerators {
    let plus = x.iter().zip(bounds.upper()).map(|(&xi, &u)| u - xi <= eps).collect();
    let minus = x.iter().zip(bounds.lower()).map(|(&xi, &l)| xi - l <= eps).collect();
    ConeGenerators { plus, minus, epsilon: eps }
}

/// Moreau decomposition `v = v_K + v_K°` for the axis-aligned cone `K`.
pub fn project_cone(v: &[f64], cone: &ConeGenerators) -> (Vec<f64>, Vec<f64>) {
    let v_k: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(i, &vi)| match (cone.plus[i], cone.minus[i]) {
            (true, true) => vi,
            (true, false) => vi.max(0.0),
            (false, true) => vi.min(0.0),
            (false, false) => 0.0,
        })
        .collect();
    let v_polar = v.iter().zip(&v_k).map(|(a, b)| a - b).collect();
    (v_k, v_polar)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiResult {
    pub value: f64,
    /// Maximizing step: `x + omega` is feasible and `|omega| <= 1`.
    pub omega: Vec<f64>,
    /// Multiplier of the ball constraint (0 when it is inactive).
    pub multiplier: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stationarity measure at `x` for gradient `g`.
///
/// With `c = -g` and the step box `lo = l - x`, `hi = u - x`, the maximizer is
/// `w_i(mu) = clamp(c_i / (2 mu), lo_i, hi_i)`. If the ball is inactive
/// (`mu -> 0` gives a finite point of norm at most one) that point is
/// returned; otherwise `mu` is bisected until `|w(mu)| = 1`.
pub fn chi(g: &[f64], x: &[f64], bounds: &Bounds) -> Result<ChiResult> {
    let n = bounds.dim();
    if g.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.len().min(x.len()) });
    }
    let c: Vec<f64> = g.iter().map(|v| -v).collect();
    let lo: Vec<f64> = bounds.lower().iter().zip(x).map(|(l, xi)| (l - xi).min(0.0)).collect();
    let hi: Vec<f64> = bounds.upper().iter().zip(x).map(|(u, xi)| (u - xi).max(0.0)).collect();
    let thin: Vec<bool> = bounds.lower().iter().zip(bounds.upper()).map(|(l, u)| u - l < THIN_BOX).collect();

    let step_at = |mu: f64| -> Vec<f64> {
        (0..n).map(|i| if thin[i] { 0.0 } else { (c[i] / (2.0 * mu)).clamp(lo[i], hi[i]) }).collect()
    };

    if c.iter().all(|&ci| ci == 0.0) {
        return Ok(ChiResult { value: 0.0, omega: vec![0.0; n], multiplier: 0.0 });
    }

    // mu -> 0: every coordinate with c_i != 0 runs to its bound.
    let corner: Vec<f64> = (0..n)
        .map(|i| {
            if thin[i] || c[i] == 0.0 {
                0.0
            } else if c[i] > 0.0 {
                hi[i]
            } else {
                lo[i]
            }
        })
        .collect();
    let corner_norm = norm(&corner);
    if corner_norm.is_finite() && corner_norm <= 1.0 {
        return Ok(ChiResult { value: dot(&c, &corner).max(0.0), omega: corner, multiplier: 0.0 });
    }

    let c_max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut mu_lo = 1e-12;
    let mut mu_hi = c_max * (n as f64).sqrt() + 1.0;
    if norm(&step_at(mu_lo)) <= 1.0 {
        // Ball barely active; the lower end already satisfies it.
        mu_hi = mu_lo;
    } else {
        for _ in 0..MAX_BISECTIONS {
            if mu_hi - mu_lo < 1e-14 * mu_hi.max(1e-300) {
                break;
            }
            let mid = 0.5 * (mu_lo + mu_hi);
            if norm(&step_at(mid)) > 1.0 {
                mu_lo = mid;
            } else {
                mu_hi = mid;
            }
        }
    }
    let omega = step_at(mu_hi);
    Ok(ChiResult { value: dot(&c, &omega).max(0.0), omega, multiplier: mu_hi })
}

/// Grid-search lower bound for [`chi`], independent of the multiplier method.
///
/// Every face of the step box (each coordinate free, at its lower end or at
/// its upper end) is scanned: on a face with free coordinates, all but one
/// free coordinate run over a grid with `resolution` points per axis and the
/// last one is placed on the unit sphere (both signs) and clipped into the
/// box. Faces without free coordinates are single vertices. Intended for
/// `dim <= 3`.
pub fn chi_bruteforce(g: &[f64], x: &[f64], bounds: &Bounds, resolution: usize) -> f64 {
    let n = bounds.dim();
    let c: Vec<f64> = g.iter().map(|v| -v).collect();
    let lo: Vec<f64> = bounds.lower().iter().zip(x).map(|(l, xi)| (l - xi).clamp(-1.0, 0.0)).collect();
    let hi: Vec<f64> = bounds.upper().iter().zip(x).map(|(u, xi)| (u - xi).clamp(0.0, 1.0)).collect();
    let res = resolution.max(2);
    let axis =
        |i: usize| -> Vec<f64> { (0..res).map(|j| lo[i] + (hi[i] - lo[i]) * j as f64 / (res - 1) as f64).collect() };

    let mut best = 0.0f64;
    let mut consider = |w: &[f64]| {
        if norm(w) <= 1.0 + 1e-12 {
            best = best.max(dot(&c, w));
        }
    };

    // state[i]: 0 free, 1 at lower end, 2 at upper end.
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = Vec::with_capacity(n);
        let mut rem = code;
        for _ in 0..n {
            state.push(rem % 3);
            rem /= 3;
        }
        let mut base = vec![0.0; n];
        let mut free = Vec::new();
        for i in 0..n {
            match state[i] {
                1 => base[i] = lo[i],
                2 => base[i] = hi[i],
                _ => free.push(i),
            }
        }
        if free.is_empty() {
            consider(&base);
            continue;
        }
        for (pos, &solved) in free.iter().enumerate() {
            let gridded: Vec<usize> = free.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, &i)| i).collect();
            let axes: Vec<Vec<f64>> = gridded.iter().map(|&i| axis(i)).collect();
            let total = res.pow(gridded.len() as u32);
            let mut w = base.clone();
            for idx in 0..total {
                let mut r = idx;
                for (a, &i) in gridded.iter().enumerate() {
                    w[i] = axes[a][r % res];
                    r /= res;
                }
                let used: f64 = (0..n).filter(|&i| i != solved).map(|i| w[i] * w[i]).sum();
                let rest = (1.0 - used).max(0.0).sqrt();
                for s in [rest, -rest] {
                    w[solved] = s.clamp(lo[solved], hi[solved]);
                    consider(&w);
                }
            }
        }
    }
    best
}

/// `sqrt(n) (L + gamma) delta`.
pub fn theorem_bound(lipschitz: f64, grad_bound: f64, n: usize, delta: f64) -> f64 {
    (n as f64).sqrt() * (lipschitz + grad_bound) * delta
}

/// Header of the stationarity report.
pub const CHI_REPORT_HEADER: &str = "problem,x,chi,delta,bound_rhs";

/// One stationarity report row `problem,x,chi,delta,bound_rhs` for the point
/// `x` reached with step `delta`; coordinates of `x` are `;`-separated and
/// `bound_rhs = sqrt(n) (L + gamma) delta`.
pub fn chi_report_row(problem: &ProblemSpec, x: &[f64], delta: f64, lipschitz: f64, grad_bound: f64) -> Result<String> {
    let g = fd_gradient(problem, x, &problem.bounds)?;
    let value = chi(&g, x, &problem.bounds)?.value;
    let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    let rhs = theorem_bound(lipschitz, grad_bound, x.len(), delta);
    Ok(format!("{},{},{},{},{}", problem.name, coords.join(";"), value, delta, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fd_gradient_sphere_interior() {
        let p = problem::sphere(vec![0.0, 0.0], -5.0, 5.0).unwrap();
        let g = fd_gradient(&p, &[1.0, -2.0], &p.bounds).unwrap();
        assert!(close(g[0], 2.0, 1e-6) && close(g[1], -4.0, 1e-6), "{g:?}");
    }

    #[test]
    fn fd_gradient_linear_exact() {
        let b = Bounds::uniform(3, -10.0, 10.0).unwrap();
        let p = ProblemSpec::new("lin", b.clone(), vec![0.0; 3], |x| 3.0 * x[0] - 2.0 * x[1] + 0.5 * x[2]).unwrap();
        let g = fd_gradient(&p, &[0.3, -1.7, 2.2], &b).unwrap();
        for (gi, want) in g.iter().zip([3.0, -2.0, 0.5]) {
            assert!(close(*gi, want, 1e-8), "{g:?}");
        }
    }

    #[test]
    fn fd_gradient_one_sided_at_bound() {
        let p = problem::sphere(vec![0.0, 0.0], 0.0, 5.0).unwrap();
        let g = fd_gradient(&p, &[0.0, 2.0], &p.bounds).unwrap();
        // Forward difference of x^2 at 0 is h = 1e-6.
        assert!(close(g[0], 0.0, 2e-6) && close(g[1], 4.0, 1e-6), "{g:?}");
    }

    #[test]
    fn fd_gradient_thin_box_errors() {
        let b = Bounds::new(vec![0.0], vec![1e-7]).unwrap();
        let p = ProblemSpec::new("thin", b.clone(), vec![0.0], |x| x[0]).unwrap();
        assert!(matches!(fd_gradient(&p, &[5e-8], &b), Err(Error::StencilOutsideBox(0))));
    }

    #[test]
    fn cone_generators() {
        let b = Bounds::uniform(2, 0.0, 1.0).unwrap();
        assert_eq!(k_generators(&[0.0, 0.5], &b, 0.1).signed_indices(), vec![-1]);
        assert!(k_generators(&[0.5, 0.5], &b, 0.1).is_trivial());
        assert_eq!(k_generators(&[0.0, 1.0], &b, 0.1).signed_indices(), vec![-1, 2]);
        let unbounded = Bounds::unbounded(2).unwrap();
        assert!(k_generators(&[0.0, 0.0], &unbounded, 1e300).is_trivial());
    }

    #[test]
    fn cone_projection() {
        let k = ConeGenerators { plus: vec![true, false], minus: vec![false, false], epsilon: 0.1 };
        assert_eq!(project_cone(&[2.0, -3.0], &k), (vec![2.0, 0.0], vec![0.0, -3.0]));
        let trivial = ConeGenerators { plus: vec![false; 2], minus: vec![false; 2], epsilon: 0.1 };
        assert_eq!(project_cone(&[2.0, -3.0], &trivial), (vec![0.0, 0.0], vec![2.0, -3.0]));
        let both = ConeGenerators { plus: vec![true, false], minus: vec![true, true], epsilon: 0.1 };
        let v = [-1.5, 4.0];
        let (vk, vp) = project_cone(&v, &both);
        assert_eq!(dot(&vk, &vp), 0.0);
        assert_eq!([vk[0] + vp[0], vk[1] + vp[1]], v);
    }

    #[test]
    fn chi_interior_is_gradient_norm() {
        let b = Bounds::uniform(2, -100.0, 100.0).unwrap();
        let r = chi(&[-3.0, -4.0], &[0.0, 0.0], &b).unwrap();
        assert!(close(r.value, 5.0, 1e-9));
        assert!(close(r.omega[0], 0.6, 1e-9) && close(r.omega[1], 0.8, 1e-9));
        assert!(r.multiplier > 0.0);
    }

    #[test]
    fn chi_zero_when_descent_leaves_box() {
        let b = Bounds::uniform(1, 0.0, 1.0).unwrap();
        assert_eq!(chi(&[2.0], &[0.0], &b).unwrap().value, 0.0);
    }

    #[test]
    fn chi_corner_case() {
        let b = Bounds::uniform(2, 0.0, 10.0).unwrap();
        let r = chi(&[-3.0, 4.0], &[0.0, 0.0], &b).unwrap();
        assert!(close(r.value, 3.0, 1e-9), "{r:?}");
        assert!(close(r.omega[0], 1.0, 1e-9) && r.omega[1] == 0.0);
        assert!(close(chi_bruteforce(&[-3.0, 4.0], &[0.0, 0.0], &b, 400), 3.0, 1e-3));
    }

    #[test]
    fn chi_zero_gradient() {
        let b = Bounds::uniform(3, -1.0, 1.0).unwrap();
        let r = chi(&[0.0; 3], &[0.2, 0.0, -0.5], &b).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.omega, vec![0.0; 3]);
        assert_eq!(chi_bruteforce(&[0.0; 3], &[0.2, 0.0, -0.5], &b, 100), 0.0);
    }

    #[test]
    fn chi_small_box_inactive_ball() {
        let b = Bounds::uniform(2, -0.1, 0.1).unwrap();
        let r = chi(&[1.0, -2.0], &[0.0, 0.0], &b).unwrap();
        assert_eq!(r.multiplier, 0.0);
        assert!(close(r.value, 0.3, 1e-15));
    }

    #[test]
    fn bruteforce_interior() {
        let b = Bounds::uniform(2, -100.0, 100.0).unwrap();
        assert!(close(chi_bruteforce(&[-3.0, -4.0], &[0.0, 0.0], &b, 400), 5.0, 1e-3));
    }

    #[test]
    fn chi_vanishes_at_hs4_minimizer() {
        let p = problem::registry_get("hs4").unwrap();
        let x = [1.0, 0.0];
        let g = fd_gradient(&p, &x, &p.bounds).unwrap();
        assert!(chi(&g, &x, &p.bounds).unwrap().value <= 1e-6);
    }

    #[test]
    fn report_row_format() {
        let p = problem::sphere(vec![0.5, 0.0], -1.0, 1.0).unwrap();
        let row = chi_report_row(&p, &[0.0, 0.0], 0.5, 2.0, 1.0).unwrap();
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 5);
        assert_eq!(f[1], "0;0");
        assert!(f[2].parse::<f64>().unwrap() < 1e-9);
        assert!((f[4].parse::<f64>().unwrap() - 2f64.sqrt() * 1.5).abs() < 1e-12);
    }

    #[test]
    fn chi_scales_with_gradient() {
        let b = Bounds::new(vec![-0.3, -2.0, 0.0], vec![0.5, 0.1, 3.0]).unwrap();
        let x = [0.0, -0.5, 0.2];
        let g = [1.5, -0.7, -2.0];
        let base = chi(&g, &x, &b).unwrap();
        for t in [0.01, 3.0, 1e4] {
            let scaled: Vec<f64> = g.iter().map(|v| v * t).collect();
            let r = chi(&scaled, &x, &b).unwrap();
            assert!(close(r.value, t * base.value, 1e-9 * t.max(1.0)));
            for (a, b) in r.omega.iter().zip(&base.omega) {
                assert!(close(*a, *b, 1e-9));
            }
        }
    }
}
