//! Rate-distortion sweep for the Gaussian scheme.
//!
//! For every `(scheme, K, l_max)` cell the encoder variance `var_w_given_a`
//! is first chosen from a candidate list on a selection run, then the cell is
//! re-evaluated with that variance on fresh trials. Trials share all
//! randomness across cells: a trial with index `t` in a cell gives exactly
//! the outcome of [`run_continuous_trial`](super::run_continuous_trial) with
//! the cell's configuration and seed `seed.tag(phase).tag(t)`.
//!
//! Distortion is reported two ways: the mean over trials of the per-trial
//! best squared error in dB, and the dB value of the mean squared error.

use super::gaussian::{
    draw_source, gaussian_p_w_given_t, label_of, log_race_rows, log_ratio, mmse_reconstruct,
    GaussianWzConfig, LogNormalPdf, LABEL_STREAM, MIN_SQUARED_ERROR, PRIOR_STREAM, RACE_STREAM,
};
use super::Scheme;
use crate::error::{Error, Result};
use crate::rng::{derive_uniform, standard_normal, SeedContext};
use crate::stats::{par_trials, RunningStat, SummaryStat};

const SELECT_PHASE: u64 = 0;
const EVAL_PHASE: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RdSweepConfig {
    pub var_t_given_a: f64,
    pub samples: usize,
    pub l_max_list: Vec<usize>,
    pub decoders_list: Vec<usize>,
    pub var_w_candidates: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub selection_trials: usize,
    pub eval_trials: usize,
}

impl RdSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_max_list.is_empty()
            || self.decoders_list.is_empty()
            || self.var_w_candidates.is_empty()
            || self.schemes.is_empty()
        {
            return Err(Error::EmptyInput);
        }
        if self.selection_trials < 2 || self.eval_trials < 2 {
            return Err(Error::InvalidParameter("sweeps need at least 2 trials per phase".into()));
        }
        for &v in &self.var_w_candidates {
            self.cell_config(v, 1, 1).validate()?;
        }
        for &l in &self.l_max_list {
            self.cell_config(1.0, 1, l).validate()?;
        }
        for &k in &self.decoders_list {
            self.cell_config(1.0, k, 1).validate()?;
        }
        Ok(())
    }

    fn max_decoders(&self) -> usize {
        self.decoders_list.iter().copied().max().unwrap_or(1)
    }

    /// Single-trial configuration of one cell.
    pub fn cell_config(&self, var_w_given_a: f64, decoders: usize, l_max: usize) -> GaussianWzConfig {
        GaussianWzConfig {
            var_t_given_a: self.var_t_given_a,
            var_w_given_a,
            samples: self.samples,
            l_max,
            decoders,
            trials: 1,
        }
    }
}

/// Evaluated cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCell {
    pub scheme: Scheme,
    pub decoders: usize,
    pub l_max: usize,
    pub rate_bits: f64,
    pub var_w_given_a: f64,
    /// Mean over trials of `10 log10` of the best squared error.
    pub distortion_db: SummaryStat,
    /// Mean of the best squared error.
    pub mse: SummaryStat,
    /// `10 log10` of `mse.mean`.
    pub mse_db: f64,
    pub match_rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdSweepResult {
    pub cells: Vec<RdCell>,
}

impl RdSweepResult {
    pub fn cell(&self, scheme: Scheme, decoders: usize, l_max: usize) -> Option<&RdCell> {
        self.cells
            .iter()
            .find(|c| c.scheme == scheme && c.decoders == decoders && c.l_max == l_max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CellAcc {
    db: RunningStat,
    mse: RunningStat,
    matches: u64,
}

impl CellAcc {
    fn push(&mut self, sq_err: f64, matched: bool) {
        self.db.push(10.0 * sq_err.max(MIN_SQUARED_ERROR).log10());
        self.mse.push(sq_err);
        self.matches += matched as u64;
    }

    fn merge(&mut self, other: &CellAcc) {
        self.db.merge(&other.db);
        self.mse.merge(&other.mse);
        self.matches += other.matches;
    }
}

/// Cell index layout: `((scheme * nk + k) * nl + l) * nv + v`.
struct Layout {
    nk: usize,
    nl: usize,
    nv: usize,
}

impl Layout {
    fn index(&self, s: usize, k: usize, l: usize, v: usize) -> usize {
        ((s * self.nk + k) * self.nl + l) * self.nv + v
    }

    fn len(&self, ns: usize) -> usize {
        ns * self.nk * self.nl * self.nv
    }
}

/// Randomness of one trial shared by all cells.
struct SharedTrial {
    a: f64,
    t: Vec<f64>,
    z: Vec<f64>,
    label_u: Vec<f64>,
    log_races: Vec<Vec<f64>>,
    /// `prefix_min[k][i] = min_{r <= k} log_races[r][i]`.
    prefix_min: Vec<Vec<f64>>,
}

impl SharedTrial {
    fn draw(cfg: &RdSweepConfig, seed: SeedContext) -> Self {
        let k_max = cfg.max_decoders();
        let n = cfg.samples;
        let (a, t) = draw_source(seed, cfg.var_t_given_a, k_max);
        let z = (0..n as u64)
            .map(|i| standard_normal(seed.tag(PRIOR_STREAM).tag(i)))
            .collect();
        let label_u = (0..n as u64)
            .map(|i| derive_uniform(seed.tag(LABEL_STREAM).tag(i)))
            .collect();
        let log_races = log_race_rows(seed.tag(RACE_STREAM), k_max, n);
        let mut prefix_min = Vec::with_capacity(k_max);
        let mut running = log_races[0].clone();
        prefix_min.push(running.clone());
        for row in &log_races[1..] {
            for (m, &s) in running.iter_mut().zip(row) {
                if s < *m {
                    *m = s;
                }
            }
            prefix_min.push(running.clone());
        }
        Self {
            a,
            t,
            z,
            label_u,
            log_races,
            prefix_min,
        }
    }
}

/// Runs the selection and evaluation phases and returns one cell per
/// `(scheme, K, l_max)`, ordered by scheme, then K, then `l_max`.
pub fn run_rd_sweep(cfg: &RdSweepConfig, seed: SeedContext) -> Result<RdSweepResult> {
    cfg.validate()?;
    let layout = Layout {
        nk: cfg.decoders_list.len(),
        nl: cfg.l_max_list.len(),
        nv: cfg.var_w_candidates.len(),
    };
    let ns = cfg.schemes.len();
    let all = vec![true; layout.len(ns)];
    let selection = run_phase(cfg, &layout, &all, seed.tag(SELECT_PHASE), cfg.selection_trials);

    let mut wanted = vec![false; layout.len(ns)];
    let mut chosen = Vec::new();
    for s in 0..ns {
        for k in 0..layout.nk {
            for l in 0..layout.nl {
                let v = (0..layout.nv)
                    .min_by(|&x, &y| {
                        let dx = selection[layout.index(s, k, l, x)].db.mean();
                        let dy = selection[layout.index(s, k, l, y)].db.mean();
                        dx.total_cmp(&dy)
                    })
                    .unwrap_or(0);
                wanted[layout.index(s, k, l, v)] = true;
                chosen.push((s, k, l, v));
            }
        }
    }

    let eval = run_phase(cfg, &layout, &wanted, seed.tag(EVAL_PHASE), cfg.eval_trials);
    let cells = chosen
        .into_iter()
        .map(|(s, k, l, v)| {
            let acc = &eval[layout.index(s, k, l, v)];
            let mse = acc.mse.summary();
            RdCell {
                scheme: cfg.schemes[s],
                decoders: cfg.decoders_list[k],
                l_max: cfg.l_max_list[l],
                rate_bits: (cfg.l_max_list[l] as f64).log2(),
                var_w_given_a: cfg.var_w_candidates[v],
                distortion_db: acc.db.summary(),
                mse,
                mse_db: 10.0 * mse.mean.max(MIN_SQUARED_ERROR).log10(),
                match_rate: acc.matches as f64 / cfg.eval_trials as f64,
                trials: cfg.eval_trials,
            }
        })
        .collect();
    Ok(RdSweepResult { cells })
}

fn run_phase(
    cfg: &RdSweepConfig,
    layout: &Layout,
    wanted: &[bool],
    seed: SeedContext,
    trials: usize,
) -> Vec<CellAcc> {
    let len = wanted.len();
    par_trials(
        trials,
        || vec![CellAcc::default(); len],
        |acc, t| run_shared_trial(cfg, layout, wanted, seed.tag(t as u64), acc),
        |total, part| {
            for (x, y) in total.iter_mut().zip(&part) {
                x.merge(y);
            }
        },
    )
}

/// Decoder queries memoized within one `(variance, l_max)` pair, keyed by
/// `(decoder, row, message)`.
type Memo = Vec<((usize, usize, usize), Option<usize>)>;

fn run_shared_trial(
    cfg: &RdSweepConfig,
    layout: &Layout,
    wanted: &[bool],
    seed: SeedContext,
    acc: &mut [CellAcc],
) {
    let shared = SharedTrial::draw(cfg, seed);
    let n = cfg.samples;
    let k_max = cfg.max_decoders();
    let ns = cfg.schemes.len();

    // Buckets of sample indices per label, for every l_max.
    let buckets: Vec<Vec<Vec<u32>>> = cfg
        .l_max_list
        .iter()
        .map(|&l| {
            let mut b = vec![Vec::new(); l];
            for (i, &u) in shared.label_u.iter().enumerate() {
                b[label_of(u, l)].push(i as u32);
            }
            b
        })
        .collect();

    for (vi, &var_w_given_a) in cfg.var_w_candidates.iter().enumerate() {
        let needed = (0..ns).any(|s| {
            (0..layout.nk).any(|k| (0..layout.nl).any(|l| wanted[layout.index(s, k, l, vi)]))
        });
        if !needed {
            continue;
        }
        let base_cfg = cfg.cell_config(var_w_given_a, k_max, 1);
        let var_w = base_cfg.var_w();
        let sd = var_w.sqrt();
        let samples: Vec<f64> = shared.z.iter().map(|&z| sd * z).collect();
        let prior = LogNormalPdf::new(0.0, var_w);
        let enc_pdf = LogNormalPdf::new(shared.a, var_w_given_a);
        let enc_log: Vec<f64> = samples.iter().map(|&u| log_ratio(&enc_pdf, &prior, u)).collect();
        let dec_log: Vec<Vec<f64>> = shared
            .t
            .iter()
            .map(|&tk| {
                let (mean, var) = gaussian_p_w_given_t(&base_cfg, tk);
                let pdf = LogNormalPdf::new(mean, var);
                samples.iter().map(|&u| log_ratio(&pdf, &prior, u)).collect()
            })
            .collect();

        // Encoder winner for each K (rows 0..K); independent of l_max.
        let enc_winner: Vec<usize> = (0..k_max)
            .map(|k| {
                let mut best = 0;
                let mut best_score = f64::INFINITY;
                for i in 0..n {
                    let score = shared.prefix_min[k][i] - enc_log[i];
                    if i == 0 || score < best_score {
                        best = i;
                        best_score = score;
                    }
                }
                best
            })
            .collect();

        for (li, &l_max) in cfg.l_max_list.iter().enumerate() {
            let ln_l = (l_max as f64).ln();
            let mut memo: Memo = Vec::new();
            let mut query = |k: usize, row: usize, m: usize| -> Option<usize> {
                if let Some(&(_, r)) = memo.iter().find(|(key, _)| *key == (k, row, m)) {
                    return r;
                }
                let mut best = None;
                let mut best_score = f64::INFINITY;
                for &i in &buckets[li][m] {
                    let i = i as usize;
                    let w = dec_log[k][i] + ln_l;
                    let score = shared.log_races[row][i] - w;
                    if best.is_none() || score < best_score {
                        best = Some(i);
                        best_score = score;
                    }
                }
                memo.push(((k, row, m), best));
                best
            };
            for (si, &scheme) in cfg.schemes.iter().enumerate() {
                for (ki, &decoders) in cfg.decoders_list.iter().enumerate() {
                    let idx = layout.index(si, ki, li, vi);
                    if !wanted[idx] {
                        continue;
                    }
                    let y = match scheme {
                        Scheme::Gls => enc_winner[decoders - 1],
                        Scheme::SharedRow => enc_winner[0],
                    };
                    let m = label_of(shared.label_u[y], l_max);
                    let mut best = f64::INFINITY;
                    let mut matched = false;
                    for k in 0..decoders {
                        let row = match scheme {
                            Scheme::Gls => k,
                            Scheme::SharedRow => 0,
                        };
                        let x = query(k, row, m);
                        matched |= x == Some(y);
                        let w = x.map_or(0.0, |i| samples[i]);
                        let recon = mmse_reconstruct(&base_cfg, w, shared.t[k]);
                        let err = recon - shared.a;
                        best = best.min(err * err);
                    }
                    acc[idx].push(best, matched);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wz::run_continuous_trial;

    fn small() -> RdSweepConfig {
        RdSweepConfig {
            var_t_given_a: 0.5,
            samples: 256,
            l_max_list: vec![2, 8],
            decoders_list: vec![1, 3],
            var_w_candidates: vec![0.05, 0.2],
            schemes: vec![Scheme::Gls, Scheme::SharedRow],
            selection_trials: 40,
            eval_trials: 30,
        }
    }

    #[test]
    fn sweep_cells_match_single_trials() {
        let cfg = small();
        let seed = SeedContext::new(77);
        let layout = Layout {
            nk: 2,
            nl: 2,
            nv: 2,
        };
        let all = vec![true; layout.len(2)];
        for t in 0..6u64 {
            let trial_seed = seed.tag(t);
            let mut acc = vec![CellAcc::default(); all.len()];
            run_shared_trial(&cfg, &layout, &all, trial_seed, &mut acc);
            for (si, &scheme) in cfg.schemes.iter().enumerate() {
                for (ki, &k) in cfg.decoders_list.iter().enumerate() {
                    for (li, &l) in cfg.l_max_list.iter().enumerate() {
                        for (vi, &v) in cfg.var_w_candidates.iter().enumerate() {
                            let single =
                                run_continuous_trial(&cfg.cell_config(v, k, l), scheme, trial_seed).unwrap();
                            let cell = &acc[layout.index(si, ki, li, vi)];
                            assert_eq!(cell.mse.mean(), single.best_distortion);
                            assert_eq!(cell.matches, single.matched as u64);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cfg = small();
        let a = run_rd_sweep(&cfg, SeedContext::new(5)).unwrap();
        let b = run_rd_sweep(&cfg, SeedContext::new(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 8);
        assert_eq!(a.cells[0].scheme, Scheme::Gls);
        assert_eq!((a.cells[0].decoders, a.cells[0].l_max), (1, 2));
        assert_eq!(a.cells[1].l_max, 8);
        assert_eq!(a.cells[1].rate_bits, 3.0);
        for c in &a.cells {
            assert_eq!(c.trials, 30);
            assert!(cfg.var_w_candidates.contains(&c.var_w_given_a));
            assert!(c.mse_db >= c.distortion_db.mean - 1e-9);
        }
        // one decoder: the two schemes are the same code
        let g = a.cell(Scheme::Gls, 1, 8).unwrap();
        let s = a.cell(Scheme::SharedRow, 1, 8).unwrap();
        assert_eq!(g.distortion_db, s.distortion_db);
    }

    #[test]
    fn rejects_empty_lists() {
        let mut cfg = small();
        cfg.l_max_list.clear();
        assert_eq!(run_rd_sweep(&cfg, SeedContext::new(0)), Err(Error::EmptyInput));
    }
}
