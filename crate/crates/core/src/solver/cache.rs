use std::collections::{HashMap, VecDeque};

/// Default number of points remembered by [`EvalCache`].
pub const DEFAULT_CACHE_CAPACITY: usize = 100_000;

/// Memory of evaluated points, keyed on the exact bit pattern of the
/// coordinates. When full, the oldest insertion is evicted first.
#[derive(Debug, Clone, Default)]
pub struct EvalCache {
    capacity: usize,
    values: HashMap<Vec<u64>, f64>,
    order: VecDeque<Vec<u64>>,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl EvalCache {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, values: HashMap::new(), order: VecDeque::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lookup(&self, x: &[f64]) -> Option<f64> {
        self.values.get(&key(x)).copied()
    }

    pub fn insert(&mut self, x: &[f64], f: f64) {
        if self.capacity == 0 {
            return;
        }
        let k = key(x);
        if let Some(slot) = self.values.get_mut(&k) {
            *slot = f;
            return;
        }
        if self.values.len() == self.capacity {
            if let Some(oldest) = self.order.pop_front() {
                self.values.remove(&oldest);
            }
        }
        self.order.push_back(k.clone());
        self.values.insert(k, f);
    }
}
