//! Deterministic parallel trial aggregation.
//!
//! Trials are split into fixed-size chunks; each chunk is folded
//! sequentially and chunk results are merged in index order, so the
//! floating-point result does not depend on the thread count.

use rayon::prelude::*;

const CHUNK: u64 = 1024;

/// An associative accumulator over trial outcomes.
pub trait Accumulator: Default + Send {
    fn merge(&mut self, other: Self);
}

/// Runs `trial(i, &mut acc)` for every `i < trials`.
pub fn fold_trials<A, F>(trials: u64, trial: F) -> A
where
    A: Accumulator,
    F: Fn(u64, &mut A) + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = A::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                trial(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = A::default();
    for p in parts {
        total.merge(p);
    }
    total
}

/// Running first and second moments of a scalar sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum / self.count as f64
    }

    /// Standard error of the sample mean.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

impl Accumulator for Moments {
    fn merge(&mut self, other: Self) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }
}

/// Success/failure counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub hits: u64,
}

impl Tally {
    pub fn record(&mut self, hit: bool) {
        self.trials += 1;
        self.hits += hit as u64;
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.hits as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Tally::rate`].
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

impl Accumulator for Tally {
    fn merge(&mut self, other: Self) {
        self.trials += other.trials;
        self.hits += other.hits;
    }
}

impl<A: Accumulator, B: Accumulator> Accumulator for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_matches_sequential_sum() {
        let m: Moments = fold_trials(5000, |i, acc: &mut Moments| acc.push(i as f64));
        assert_eq!(m.count, 5000);
        assert_eq!(m.sum, (0..5000).map(|i| i as f64).sum::<f64>());
    }

    #[test]
    fn fold_is_independent_of_pool_size() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    fold_trials(10_000, |i, acc: &mut Moments| acc.push((i as f64).sin()))
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn tally_rate_and_error() {
        let t: Tally = fold_trials(100, |i, acc: &mut Tally| acc.record(i % 4 == 0));
        assert_eq!(t.hits, 25);
        assert!((t.std_error() - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
