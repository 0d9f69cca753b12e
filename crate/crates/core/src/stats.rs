//! Summary statistics and deterministic parallel reduction for Monte Carlo
//! trials.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Mean with one standard error (sample standard deviation over `sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStat {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Mean and standard error of `values`, using the `n - 1` denominator.
pub fn summarize(values: &[f64]) -> Result<SummaryStat> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    let mut acc = RunningStat::default();
    for &v in values {
        acc.push(v);
    }
    Ok(acc.summary())
}

/// Welford accumulator; `merge` combines partial results exactly as if the
/// values had been pushed in sequence order (up to rounding).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStat {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStat) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (`n - 1` denominator); zero below two values.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn summary(&self) -> SummaryStat {
        let stderr = if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        };
        SummaryStat {
            mean: self.mean,
            stderr,
            count: self.n,
        }
    }
}

/// Standard error of a Bernoulli mean estimated from `n` trials.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n as f64).sqrt()
}

/// Empirical frequencies of symbol counts.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Trials per work unit in [`par_trials`]; fixed so results never depend on
/// the worker count.
pub const TRIAL_CHUNK: usize = 4096;

/// Runs `trials` independent trials on the rayon pool.
///
/// Trials are grouped into fixed chunks of [`TRIAL_CHUNK`]; each chunk folds
/// its trials in index order into a fresh accumulator, and chunk accumulators
/// are merged in chunk order. The result is therefore identical for any
/// thread count.
pub fn par_trials<A, I, F, M>(trials: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let start = c * TRIAL_CHUNK;
            let end = (start + TRIAL_CHUNK).min(trials);
            for t in start..end {
                fold(&mut acc, t);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Elementwise `a += b` for count vectors.
pub fn add_counts(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn summarize_examples() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.stderr, s.count), (1.0, 0.0, 3));
        let s = summarize(&[0.0, 2.0]).unwrap();
        assert_abs_diff_eq!(s.mean, 1.0);
        assert_abs_diff_eq!(s.stderr, 1.0, epsilon = 1e-15);
        // mean 4.65, sample std 0.274226, / sqrt(5)
        let s = summarize(&[4.75, 4.78, 4.78, 4.16, 4.78]).unwrap();
        assert_abs_diff_eq!(s.mean, 4.65, epsilon = 1e-12);
        assert_abs_diff_eq!(s.stderr, 0.122638, epsilon = 1e-6);
        assert_eq!(
            summarize(&[1.0]),
            Err(Error::TooFewValues { needed: 2, got: 1 })
        );
    }

    #[test]
    fn merge_matches_sequential() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut seq = RunningStat::default();
        values.iter().for_each(|&v| seq.push(v));
        let mut a = RunningStat::default();
        let mut b = RunningStat::default();
        values[..313].iter().for_each(|&v| a.push(v));
        values[313..].iter().for_each(|&v| b.push(v));
        a.merge(&b);
        assert_abs_diff_eq!(a.mean(), seq.mean(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.variance(), seq.variance(), epsilon = 1e-10);
        assert_eq!(a.count(), 1000);
    }

    #[test]
    fn stderr_shrinks_with_sqrt_n() {
        // Alternating +-1 has constant sample variance n/(n-1); stderr ~ 1/sqrt(n).
        let stat = |n: usize| {
            let v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            summarize(&v).unwrap().stderr
        };
        let (s100, s10k) = (stat(100), stat(10_000));
        assert_abs_diff_eq!(s100 / s10k, 10.0, epsilon = 0.06);
        assert_abs_diff_eq!(stat(1_000_000) * 1000.0, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn par_trials_is_ordered() {
        let n = 3 * TRIAL_CHUNK + 17;
        let got = par_trials(n, Vec::new, |acc: &mut Vec<usize>, t| acc.push(t), |a, b| a.extend(b));
        assert_eq!(got, (0..n).collect::<Vec<_>>());
    }
}
