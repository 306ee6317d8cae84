//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails. Run with `cargo test -p nmps-cli --test acceptance`.

use std::process::Command;
use std::time::Instant;

use nmps_core::audit;
use nmps_core::bench::{self, DEFAULT_TAUS};
use nmps_core::linesearch::{StrategyKind, StrategyParams};
use nmps_core::problem::{self, Bounds};
use nmps_core::solver::{solve, SolverConfig, StopReason, TraceEvent};
use nmps_core::stationarity::{self, chi, chi_bruteforce, k_generators, project_cone};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn all_strategies() -> Vec<StrategyParams> {
    StrategyKind::ALL.iter().map(|&k| StrategyParams::new(k)).collect()
}

fn full_matrix() -> bench::Matrix {
    let problems = problem::registry();
    bench::run_matrix(&problems, &all_strategies(), &SolverConfig::default(), &DEFAULT_TAUS, 0, true).unwrap()
}

fn stop_reasons() -> Outcome {
    let expected = [
        ("hs1", StopReason::Tol),
        ("hs2", StopReason::Tol),
        ("hs3", StopReason::Tol),
        ("hs4", StopReason::Tol),
        ("hs5", StopReason::Tol),
        ("hs25", StopReason::MaxFe),
        ("hs38", StopReason::MaxFe),
        ("hs45", StopReason::Tol),
        ("hs110", StopReason::MaxFe),
    ];
    let start = Instant::now();
    let mut matched = 0;
    let mut misses = Vec::new();
    for (name, want) in expected {
        let r = solve(&problem::registry_get(name).unwrap(), &SolverConfig::default()).unwrap();
        if r.stop_reason == want {
            matched += 1;
        } else {
            misses.push(format!("{name}: got {} want {want}", r.stop_reason));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (matched >= 8 && secs < 10.0, format!("{matched}/9 match in {secs:.2}s; mismatches: {misses:?}"))
}

fn solution_quality() -> Outcome {
    let tau = 1e-3;
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, f_l) in [("hs3", 0.0), ("hs4", 8.0 / 3.0), ("hs45", 1.0)] {
        let r = solve(&problem::registry_get(name).unwrap(), &SolverConfig::default()).unwrap();
        let solved = bench::is_solved(r.f0, r.f_final, f_l, tau);
        ok &= solved;
        detail.push(format!("{name} f={:.6e}", r.f_final));
    }
    (ok, detail.join(", "))
}

fn acceptance_audit(matrix: &bench::Matrix) -> Outcome {
    let mut accepted = 0;
    let mut bad = 0;
    for rec in &matrix.records {
        let trace = rec.trace.as_ref().unwrap();
        accepted += trace.accepted().count();
        bad += audit::acceptance_violations(trace);
    }
    (
        bad == 0 && matrix.records.len() == 36,
        format!("{accepted} accepted steps over {} runs, {bad} violations", matrix.records.len()),
    )
}

fn block_audits(matrix: &bench::Matrix) -> Outcome {
    let config = SolverConfig::default();
    let memory = config.strategy.memory;
    let mut blocks = 0;
    let mut violations = 0;
    let mut sum_failures = Vec::new();
    for rec in &matrix.records {
        let trace = rec.trace.as_ref().unwrap();
        if rec.strategy == StrategyKind::MaxMemory.token() {
            let a = audit::block_decrease(trace, memory);
            blocks += a.blocks;
            violations += a.violations;
        }
        if !audit::step_sum_bound_holds(trace, memory, &config.eta) {
            sum_failures.push(format!("{}/{}", rec.problem, rec.strategy));
        }
    }
    (
        violations == 0 && sum_failures.is_empty(),
        format!("{blocks} blocks, {violations} block violations, step-sum failures {sum_failures:?}"),
    )
}

fn theorem_bound() -> Outcome {
    let delta_tol = 1e-4;
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, start) in [(2, vec![0.7, -0.3]), (5, vec![0.7, -0.3, 0.45, -0.9, 0.15])] {
        let p = problem::sphere(start, -1.0, 1.0).unwrap();
        let config = SolverConfig { delta_tol, ..SolverConfig::default() };
        let r = solve(&p, &config).unwrap();
        let g = stationarity::fd_gradient(&p, &r.x_final, &p.bounds).unwrap();
        let value = chi(&g, &r.x_final, &p.bounds).unwrap().value;
        let gamma = 2.0 * (n as f64).sqrt();
        let rhs = stationarity::theorem_bound(2.0, gamma, n, 2.0 * delta_tol) * 10.0;
        ok &= r.stop_reason == StopReason::Tol && value <= rhs;
        detail.push(format!("n={n} stop={} chi={value:.3e} <= {rhs:.3e}", r.stop_reason));
    }
    (ok, detail.join(", "))
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>, Bounds) {
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let l: f64 = rng.gen_range(-2.0..0.5);
        let u = l + rng.gen_range(0.05..3.0);
        // Place some coordinates exactly on a bound.
        let xi = match rng.gen_range(0..4) {
            0 => l,
            1 => u,
            _ => rng.gen_range(l..=u),
        };
        lo.push(l);
        hi.push(u);
        x.push(xi);
    }
    let g = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    (g, x, Bounds::new(lo, hi).unwrap())
}

fn chi_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut interior_worst: f64 = 0.0;
    for i in 0..100 {
        let n = 1 + i % 3;
        let (g, x, b) = random_instance(&mut rng, n);
        let fast = chi(&g, &x, &b).unwrap().value;
        let brute = chi_bruteforce(&g, &x, &b, 301);
        worst = worst.max((fast - brute).abs() / fast.max(1.0));
        // Interior instance: box far away from x.
        let wide = Bounds::uniform(n, -50.0, 50.0).unwrap();
        let inner: Vec<f64> = x.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        interior_worst = interior_worst.max((chi(&g, &inner, &wide).unwrap().value - norm(&g)).abs());
    }
    (
        worst <= 1e-3 && interior_worst <= 1e-9,
        format!("max rel diff {worst:.2e}, interior max diff {interior_worst:.2e}"),
    )
}

fn cone_checks() -> Outcome {
    let tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut prop3 = 0;
    let mut prop4 = 0;
    for i in 0..1000 {
        let n = 1 + i % 5;
        let (g, x, b) = random_instance(&mut rng, n);
        let minus_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let sqrt_n = (n as f64).sqrt();

        let eps = rng.gen_range(0.0..1.0);
        let cone = k_generators(&x, &b, eps);
        let (_, polar) = project_cone(&minus_g, &cone);
        let polar_norm = norm(&polar);
        if polar_norm > 0.0 {
            let best = cone.polar_generators().iter().map(|&(j, s)| minus_g[j] * s).fold(f64::NEG_INFINITY, f64::max);
            if polar_norm / sqrt_n > best + tol {
                prop3 += 1;
            }
        }

        let value = chi(&g, &x, &b).unwrap().value;
        for eps in [0.01, 0.1, 1.0] {
            let cone = k_generators(&x, &b, eps);
            let (in_k, polar) = project_cone(&minus_g, &cone);
            if value > norm(&polar) + sqrt_n * norm(&in_k) * eps + tol {
                prop4 += 1;
            }
        }
    }
    (prop3 == 0 && prop4 == 0, format!("descent-direction violations {prop3}/1000, chi-bound violations {prop4}/3000"))
}

fn strategy_coincidence() -> Outcome {
    let m1 = SolverConfig::default().with_strategy(StrategyParams::new(StrategyKind::MaxMemory).with_memory(1));
    let armijo = SolverConfig::default().with_strategy(StrategyParams::new(StrategyKind::Armijo));
    let mut differ = Vec::new();
    for p in problem::registry() {
        let a = solve(&p, &m1).unwrap();
        let b = solve(&p, &armijo).unwrap();
        let bits = |e: &[TraceEvent]| format!("{e:?}");
        if bits(&a.trace.events) != bits(&b.trace.events) || a.trace.to_csv() != b.trace.to_csv() {
            differ.push(p.name.clone());
        }
    }
    (differ.is_empty(), format!("differing problems: {differ:?}"))
}

fn profile_properties(matrix: &bench::Matrix) -> Outcome {
    let alphas = bench::default_alphas();
    let mut ok = true;
    let mut detail = Vec::new();
    for table in &matrix.tables {
        let ratios = bench::perf_ratios(table);
        let best_is_one = ratios.r.iter().all(|row| row.contains(&1.0));
        let curves = bench::profile(&ratios, &alphas);
        let shaped = curves.iter().all(|c| {
            c.points.iter().all(|&(_, rho)| (0.0..=1.0).contains(&rho)) && c.points.windows(2).all(|w| w[0].1 <= w[1].1)
        });
        ok &= best_is_one && shaped && curves.len() == 4;
        detail.push(format!("tau={:e}: {} kept, {} dropped", table.tau, ratios.problems.len(), ratios.dropped.len()));
    }
    (ok && matrix.tables.len() == 3, detail.join("; "))
}

fn bench_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (tag, threads) in [("seq-a", "0"), ("seq-b", "0"), ("par-a", "4"), ("par-b", "3")] {
        let out = dir.path().join(format!("{tag}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_nmps"))
            .args(["bench", "--out"])
            .arg(&out)
            .env("NMPS_THREADS", threads)
            .output()
            .unwrap();
        if !status.status.success() {
            return (false, format!("{tag}: exit {:?}", status.status.code()));
        }
        let results = std::fs::read(&out).unwrap();
        let history = std::fs::read(bench::history_path_for(&out)).unwrap();
        outputs.push((results, history));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    (same, format!("{} invocations, results {} bytes", outputs.len(), outputs[0].0.len()))
}

fn main() {
    let matrix = full_matrix();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 stop reasons on the registry", stop_reasons()),
        ("2 solution quality hs3/hs4/hs45", solution_quality()),
        ("3 sufficient-decrease audit, 9x4 matrix", acceptance_audit(&matrix)),
        ("4 block decrease and step-sum audits", block_audits(&matrix)),
        ("5 stationarity bound on the sphere", theorem_bound()),
        ("6 chi against brute force", chi_equivalence()),
        ("7 randomized cone checks", cone_checks()),
        ("8 M=1 equals armijo", strategy_coincidence()),
        ("9 profile properties", profile_properties(&matrix)),
        ("10 bench determinism", bench_determinism()),
    ];
    let mut failed = Vec::new();
    for (name, (ok, detail)) in &results {
        println!("{} criterion {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(*name);
        }
    }
    println!("{}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
