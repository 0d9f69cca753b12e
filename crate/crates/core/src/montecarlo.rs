//! Monte Carlo estimators for coupled sampling over random distribution
//! pairs.

use crate::bounds::{lml_bound, maximal_coupling_prob, weak_coupling_bound};
use crate::coupling::{
    gls_accept_profile, independent_accept_profile, race_argmin, rejection_accept_profile,
    tv_distance_slices, Categorical, RaceMatrix,
};
use crate::error::{Error, Result};
use crate::rng::SeedContext;
use crate::stats::{add_counts, binomial_stderr, par_trials};

const PAIR_STREAM: u64 = 0;
const TRIAL_STREAM: u64 = 1;

const GLS_STREAM: u64 = 0;
const INDEPENDENT_STREAM: u64 = 1;
const REJECTION_STREAM: u64 = 2;

/// Proposal and target drawn from the flat Dirichlet on `n` symbols.
pub fn random_pair(seed: SeedContext, n: usize) -> (Categorical, Categorical) {
    (Categorical::random(seed.tag(0), n), Categorical::random(seed.tag(1), n))
}

/// Seed of pair `index` in a sweep with master context `seed`.
pub fn pair_seed(seed: SeedContext, index: usize) -> SeedContext {
    seed.tag(PAIR_STREAM).tag(index as u64)
}

/// Exact acceptance of `K` proposals drawn independently of the target:
/// `1 - sum_j q_j (1 - p_j)^K`.
pub fn independent_exact_accept(p: &Categorical, q: &Categorical, k: usize) -> f64 {
    1.0 - p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&pj, &qj)| qj * (1.0 - pj).powi(k as i32))
        .sum::<f64>()
}

/// Symbol and acceptance counts of GLS for one list size.
#[derive(Debug, Clone, PartialEq)]
pub struct GlsCounts {
    pub k: usize,
    pub trials: u64,
    pub y: Vec<u64>,
    /// One count vector per proposal row.
    pub x: Vec<Vec<u64>>,
    pub accepts: u64,
}

impl GlsCounts {
    fn new(k: usize, n: usize) -> Self {
        Self {
            k,
            trials: 0,
            y: vec![0; n],
            x: vec![vec![0; n]; k],
            accepts: 0,
        }
    }

    fn merge(&mut self, other: &GlsCounts) {
        self.trials += other.trials;
        add_counts(&mut self.y, &other.y);
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            add_counts(a, b);
        }
        self.accepts += other.accepts;
    }

    pub fn accept_rate(&self) -> f64 {
        self.accepts as f64 / self.trials as f64
    }

    pub fn accept_stderr(&self) -> f64 {
        binomial_stderr(self.accept_rate(), self.trials as usize)
    }

    /// Total variation between the empirical law of `Y` and `q`.
    pub fn y_tv(&self, q: &Categorical) -> f64 {
        tv_distance_slices(&self.frequencies(&self.y), q.probs())
    }

    /// Largest total variation between a proposal row's empirical law and `p`.
    pub fn max_x_tv(&self, p: &Categorical) -> f64 {
        self.x
            .iter()
            .map(|c| tv_distance_slices(&self.frequencies(c), p.probs()))
            .fold(0.0, f64::max)
    }

    fn frequencies(&self, counts: &[u64]) -> Vec<f64> {
        counts.iter().map(|&c| c as f64 / self.trials as f64).collect()
    }
}

/// GLS counts for every list size in `k_list`. Trial `t` draws one race
/// matrix with `max(k_list)` rows from `seed.tag(t)`; the size-K draw uses
/// its first K rows.
pub fn gls_counts(
    p: &Categorical,
    q: &Categorical,
    k_list: &[usize],
    trials: usize,
    seed: SeedContext,
) -> Result<Vec<GlsCounts>> {
    if k_list.is_empty() || trials == 0 {
        return Err(Error::EmptyInput);
    }
    if k_list.contains(&0) {
        return Err(Error::InvalidParameter("list size K must be >= 1".into()));
    }
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let n = q.len();
    let k_max = *k_list.iter().max().unwrap_or(&1);
    let init = || {
        (
            k_list.iter().map(|&k| GlsCounts::new(k, n)).collect::<Vec<_>>(),
            RaceMatrix::zeros(k_max, n),
            vec![0.0; n],
            vec![0usize; k_max],
        )
    };
    let (counts, ..) = par_trials(
        trials,
        init,
        |(counts, races, mins, xs), t| {
            races.fill(seed.tag(t as u64));
            for (r, x) in xs.iter_mut().enumerate() {
                *x = race_argmin(races.row(r), p.probs()).expect("proposal has support");
            }
            mins.iter_mut().for_each(|m| *m = f64::INFINITY);
            let mut filled = 0;
            let mut order: Vec<usize> = (0..k_list.len()).collect();
            order.sort_by_key(|&i| k_list[i]);
            for i in order {
                let k = k_list[i];
                for r in filled..k {
                    for (m, &s) in mins.iter_mut().zip(races.row(r)) {
                        if s < *m {
                            *m = s;
                        }
                    }
                }
                filled = filled.max(k);
                let y = race_argmin(mins, q.probs()).expect("target has support");
                let c = &mut counts[i];
                c.trials += 1;
                c.y[y] += 1;
                for (row, &x) in c.x.iter_mut().zip(xs.iter()) {
                    row[x] += 1;
                }
                c.accepts += xs[..k].contains(&y) as u64;
            }
        },
        |total, part| {
            for (a, b) in total.0.iter_mut().zip(&part.0) {
                a.merge(b);
            }
        },
    );
    Ok(counts)
}

/// Acceptance counts for `K = 1..=k_max` of GLS, independent proposals and
/// recursive rejection; entry `K - 1` of each vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptProfiles {
    pub trials: u64,
    pub gls: Vec<u64>,
    pub independent: Vec<u64>,
    pub rejection: Vec<u64>,
    /// `gls_up[K - 1]`: trials accepted at `K + 1` but not at `K`;
    /// `gls_down[K - 1]`: the reverse. Used for paired differences.
    pub gls_up: Vec<u64>,
    pub gls_down: Vec<u64>,
}

impl AcceptProfiles {
    fn new(k_max: usize) -> Self {
        Self {
            trials: 0,
            gls: vec![0; k_max],
            independent: vec![0; k_max],
            rejection: vec![0; k_max],
            gls_up: vec![0; k_max.saturating_sub(1)],
            gls_down: vec![0; k_max.saturating_sub(1)],
        }
    }

    fn merge(&mut self, other: &AcceptProfiles) {
        self.trials += other.trials;
        add_counts(&mut self.gls, &other.gls);
        add_counts(&mut self.independent, &other.independent);
        add_counts(&mut self.rejection, &other.rejection);
        add_counts(&mut self.gls_up, &other.gls_up);
        add_counts(&mut self.gls_down, &other.gls_down);
    }

    pub fn rate(&self, counts: &[u64], k: usize) -> f64 {
        counts[k - 1] as f64 / self.trials as f64
    }

    /// Mean and standard error of `accept(K + 1) - accept(K)` over paired
    /// trials.
    pub fn gls_step(&self, k: usize) -> (f64, f64) {
        let t = self.trials as f64;
        let up = self.gls_up[k - 1] as f64 / t;
        let down = self.gls_down[k - 1] as f64 / t;
        let mean = up - down;
        let var = (up + down - mean * mean) * t / (t - 1.0);
        (mean, (var.max(0.0) / t).sqrt())
    }
}

pub fn accept_profiles(
    p: &Categorical,
    q: &Categorical,
    k_max: usize,
    trials: usize,
    seed: SeedContext,
) -> Result<AcceptProfiles> {
    if k_max == 0 || trials < 2 {
        return Err(Error::InvalidParameter("need K >= 1 and at least 2 trials".into()));
    }
    let n = q.len();
    let (profiles, _, err) = par_trials(
        trials,
        || (AcceptProfiles::new(k_max), RaceMatrix::zeros(k_max, n), None),
        |(acc, races, err): &mut (AcceptProfiles, RaceMatrix, Option<Error>), t| {
            if err.is_some() {
                return;
            }
            let s = seed.tag(t as u64);
            races.fill(s.tag(GLS_STREAM));
            let run = || -> Result<_> {
                Ok((
                    gls_accept_profile(p, q, races)?,
                    independent_accept_profile(p, q, k_max, s.tag(INDEPENDENT_STREAM))?,
                    rejection_accept_profile(p, q, k_max, s.tag(REJECTION_STREAM))?,
                ))
            };
            match run() {
                Ok((g, i, r)) => {
                    acc.trials += 1;
                    for k in 0..k_max {
                        acc.gls[k] += g[k] as u64;
                        acc.independent[k] += i[k] as u64;
                        acc.rejection[k] += r[k] as u64;
                        if k + 1 < k_max {
                            acc.gls_up[k] += (!g[k] && g[k + 1]) as u64;
                            acc.gls_down[k] += (g[k] && !g[k + 1]) as u64;
                        }
                    }
                }
                Err(e) => *err = Some(e),
            }
        },
        |total, part| {
            if total.2.is_none() {
                total.2 = part.2.clone();
            }
            total.0.merge(&part.0);
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(profiles),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToySweepConfig {
    pub pairs: usize,
    pub n: usize,
    pub k_max: usize,
    pub trials: usize,
}

/// One `(pair, K)` cell of the toy sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySweepRow {
    pub pair: usize,
    pub k: usize,
    pub trials: u64,
    pub gls: f64,
    pub gls_stderr: f64,
    /// Paired change `gls(K) - gls(K - 1)` and its standard error; zero at K = 1.
    pub gls_step: f64,
    pub gls_step_stderr: f64,
    pub independent: f64,
    pub independent_stderr: f64,
    pub rejection: f64,
    pub rejection_stderr: f64,
    pub lml: f64,
    pub independent_exact: f64,
    pub maximal: f64,
    pub weak: f64,
}

/// Random pairs `random_pair(pair_seed(seed, i), n)` with acceptance
/// profiles from `seed.tag(1).tag(i)`.
pub fn run_toy_sweep(cfg: &ToySweepConfig, seed: SeedContext) -> Result<Vec<ToySweepRow>> {
    if cfg.pairs == 0 || cfg.n == 0 || cfg.k_max == 0 || cfg.trials < 2 {
        return Err(Error::InvalidParameter(
            "pairs, n and k_max must be >= 1 and trials >= 2".into(),
        ));
    }
    let mut rows = Vec::with_capacity(cfg.pairs * cfg.k_max);
    for pair in 0..cfg.pairs {
        let (p, q) = random_pair(pair_seed(seed, pair), cfg.n);
        let prof = accept_profiles(
            &p,
            &q,
            cfg.k_max,
            cfg.trials,
            seed.tag(TRIAL_STREAM).tag(pair as u64),
        )?;
        let maximal = maximal_coupling_prob(&p, &q)?;
        let weak = weak_coupling_bound(&p, &q)?;
        let t = prof.trials as usize;
        for k in 1..=cfg.k_max {
            let (gls, ind, rej) = (
                prof.rate(&prof.gls, k),
                prof.rate(&prof.independent, k),
                prof.rate(&prof.rejection, k),
            );
            let (step, step_se) = if k > 1 { prof.gls_step(k - 1) } else { (0.0, 0.0) };
            rows.push(ToySweepRow {
                pair,
                k,
                trials: prof.trials,
                gls,
                gls_stderr: binomial_stderr(gls, t),
                gls_step: step,
                gls_step_stderr: step_se,
                independent: ind,
                independent_stderr: binomial_stderr(ind, t),
                rejection: rej,
                rejection_stderr: binomial_stderr(rej, t),
                lml: lml_bound(&p, &q, k)?,
                independent_exact: independent_exact_accept(&p, &q, k),
                maximal,
                weak,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_races, gls_sample};
    use approx::assert_abs_diff_eq;

    #[test]
    fn independent_exact_examples() {
        let u = Categorical::uniform(2);
        // 1 - 0.5^K for uniform pairs on two symbols
        assert_abs_diff_eq!(independent_exact_accept(&u, &u, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(independent_exact_accept(&u, &u, 3), 0.875, epsilon = 1e-15);
        let p = Categorical::new(vec![0.2, 0.8]).unwrap();
        let q = Categorical::new(vec![0.6, 0.4]).unwrap();
        assert_abs_diff_eq!(
            independent_exact_accept(&p, &q, 2),
            1.0 - (0.6 * 0.64 + 0.4 * 0.04),
            epsilon = 1e-15
        );
    }

    #[test]
    fn gls_counts_match_direct_sampling() {
        let (p, q) = random_pair(SeedContext::new(1), 5);
        let seed = SeedContext::new(2);
        let counts = gls_counts(&p, &q, &[3, 1], 50, seed).unwrap();
        let mut y3 = vec![0u64; 5];
        let mut acc1 = 0;
        for t in 0..50u64 {
            let races = build_races(seed.tag(t), 3, 5);
            let o3 = gls_sample(&p, &q, &races).unwrap();
            y3[o3.y] += 1;
            acc1 += gls_sample(&p, &q, &races.truncated(1)).unwrap().accepted as u64;
        }
        assert_eq!(counts[0].y, y3);
        assert_eq!(counts[0].k, 3);
        assert_eq!(counts[1].accepts, acc1);
        assert_eq!(counts[1].x.len(), 1);
    }

    #[test]
    fn gls_marginals_are_exact() {
        let (p, q) = random_pair(SeedContext::new(3), 6);
        for c in gls_counts(&p, &q, &[1, 4], 200_000, SeedContext::new(4)).unwrap() {
            assert!(c.y_tv(&q) < 0.006);
            assert!(c.max_x_tv(&p) < 0.006);
        }
    }

    #[test]
    fn profile_rates_match_expectations() {
        let (p, q) = random_pair(SeedContext::new(5), 6);
        let prof = accept_profiles(&p, &q, 4, 100_000, SeedContext::new(6)).unwrap();
        for k in 1..=4 {
            let ind = prof.rate(&prof.independent, k);
            let exact = independent_exact_accept(&p, &q, k);
            assert!((ind - exact).abs() < 4.0 * binomial_stderr(exact, 100_000));
            let g = prof.rate(&prof.gls, k);
            let b = lml_bound(&p, &q, k).unwrap();
            assert!(g >= b - 3.0 * binomial_stderr(b, 100_000));
        }
        let rej1 = prof.rate(&prof.rejection, 1);
        let maxc = maximal_coupling_prob(&p, &q).unwrap();
        assert!((rej1 - maxc).abs() < 4.0 * binomial_stderr(maxc, 100_000));
        let (step, se) = prof.gls_step(1);
        assert_abs_diff_eq!(step, prof.rate(&prof.gls, 2) - prof.rate(&prof.gls, 1), epsilon = 1e-12);
        assert!(se > 0.0);
    }

    #[test]
    fn toy_sweep_layout_and_determinism() {
        let cfg = ToySweepConfig {
            pairs: 3,
            n: 4,
            k_max: 5,
            trials: 500,
        };
        let a = run_toy_sweep(&cfg, SeedContext::new(7)).unwrap();
        assert_eq!(a, run_toy_sweep(&cfg, SeedContext::new(7)).unwrap());
        assert_eq!(a.len(), 15);
        assert_eq!((a[6].pair, a[6].k), (1, 2));
        assert!(a.iter().all(|r| r.weak <= r.maximal));
    }
}
