//! Gaussian source with Gaussian side information, coded through importance
//! sampling over a shared list of prior samples.
//!
//! Source `A ~ N(0, 1)`, side information `T_k = A + zeta_k` with
//! `zeta_k ~ N(0, var_t_given_a)`, and encoder target
//! `p(w|a) = N(a, var_w_given_a)`. The shared randomness is a list of `N`
//! samples from the representation marginal `p_W = N(0, 1 + var_w_given_a)`,
//! one uniform label per sample and the K x N race matrix. Races compare in
//! the log domain: `ln S_i - ln w_i`, which has the same argmin as
//! `S_i / w_i` for any positive rescaling of the weights.

use super::Scheme;
use crate::error::{Error, Result};
use crate::rng::{derive_uniform, exp_variate, standard_normal, SeedContext};

pub(crate) const PRIOR_STREAM: u64 = 0;
pub(crate) const LABEL_STREAM: u64 = 1;
pub(crate) const RACE_STREAM: u64 = 2;
pub(crate) const SOURCE_STREAM: u64 = 3;
pub(crate) const SIDE_STREAM: u64 = 4;

/// Smallest squared error fed to the dB conversion.
pub const MIN_SQUARED_ERROR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWzConfig {
    pub var_t_given_a: f64,
    pub var_w_given_a: f64,
    /// Number of shared prior samples `N`.
    pub samples: usize,
    pub l_max: usize,
    pub decoders: usize,
    pub trials: usize,
}

impl GaussianWzConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("var_t_given_a", self.var_t_given_a),
            ("var_w_given_a", self.var_w_given_a),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.samples == 0 || self.l_max == 0 || self.decoders == 0 || self.trials == 0 {
            return Err(Error::InvalidParameter(
                "samples, l_max, decoders and trials must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// `sigma_T^2 = 1 + var_t_given_a`.
    pub fn var_t(&self) -> f64 {
        1.0 + self.var_t_given_a
    }

    /// `sigma_W^2 = 1 + var_w_given_a`.
    pub fn var_w(&self) -> f64 {
        1.0 + self.var_w_given_a
    }
}

/// Log-density of `N(mean, var)` with the normalizer hoisted out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalPdf {
    mean: f64,
    half_inv_var: f64,
    log_norm: f64,
}

impl LogNormalPdf {
    pub fn new(mean: f64, var: f64) -> Self {
        Self {
            mean,
            half_inv_var: 0.5 / var,
            log_norm: -0.5 * (std::f64::consts::TAU * var).ln(),
        }
    }

    #[inline(always)]
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.mean;
        self.log_norm - d * d * self.half_inv_var
    }
}

/// Decoder target `p(w|t) = N(t / sigma_T^2, sigma_W^2 - 1 / sigma_T^2)`.
pub fn gaussian_p_w_given_t(cfg: &GaussianWzConfig, t: f64) -> (f64, f64) {
    let var_t = cfg.var_t();
    (t / var_t, cfg.var_w() - 1.0 / var_t)
}

/// MMSE estimate of `A` from `W = A + eta` and `T = A + zeta`.
pub fn mmse_reconstruct(cfg: &GaussianWzConfig, w: f64, t: f64) -> f64 {
    let eta = cfg.var_w_given_a;
    let zeta = cfg.var_t_given_a;
    (zeta * w + eta * t) / (eta + zeta + eta * zeta)
}

/// Shared prior samples and their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceList {
    pub samples: Vec<f64>,
    pub labels: Vec<usize>,
    pub l_max: usize,
    pub prior_var: f64,
}

impl ImportanceList {
    /// `N` samples from `N(0, prior_var)` and labels uniform on `0..l_max`.
    pub fn draw(seed: SeedContext, n: usize, l_max: usize, prior_var: f64) -> Self {
        let sd = prior_var.sqrt();
        let samples = (0..n as u64)
            .map(|i| sd * standard_normal(seed.tag(PRIOR_STREAM).tag(i)))
            .collect();
        let labels = (0..n as u64)
            .map(|i| label_of(derive_uniform(seed.tag(LABEL_STREAM).tag(i)), l_max))
            .collect();
        Self {
            samples,
            labels,
            l_max,
            prior_var,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Label in `0..l_max` from a uniform variate; the same uniform yields
/// nested labels across different `l_max`.
#[inline(always)]
pub(crate) fn label_of(u: f64, l_max: usize) -> usize {
    ((u * l_max as f64) as usize).min(l_max - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSide {
    Encoder { a: f64 },
    Decoder { t: f64, message: usize },
}

/// Unnormalized log-weights (`-inf` for excluded samples) and normalized
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    pub log_unnormalized: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl ImportanceWeights {
    pub fn unnormalized(&self, i: usize) -> f64 {
        self.log_unnormalized[i].exp()
    }

    /// Normalizes log-weights after subtracting their maximum.
    pub fn from_log(log_unnormalized: Vec<f64>) -> Result<Self> {
        let max = log_unnormalized
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::AllZeroWeights);
        }
        let shifted: Vec<f64> = log_unnormalized.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = shifted.iter().sum();
        let normalized = shifted.into_iter().map(|w| w / total).collect();
        Ok(Self {
            log_unnormalized,
            normalized,
        })
    }
}

/// Log density ratio `ln target(x) - ln prior(x)`.
#[inline(always)]
pub(crate) fn log_ratio(target: &LogNormalPdf, prior: &LogNormalPdf, x: f64) -> f64 {
    target.eval(x) - prior.eval(x)
}

/// Importance weights of the encoder (`p(w|a) / p_W`) or of a decoder
/// (`p(w|t) 1{label = m} / (p_W / l_max)`) over the shared list.
pub fn importance_weights(
    cfg: &GaussianWzConfig,
    side: WeightSide,
    list: &ImportanceList,
) -> Result<ImportanceWeights> {
    let prior = LogNormalPdf::new(0.0, list.prior_var);
    let logs = match side {
        WeightSide::Encoder { a } => {
            let target = LogNormalPdf::new(a, cfg.var_w_given_a);
            list.samples.iter().map(|&u| log_ratio(&target, &prior, u)).collect()
        }
        WeightSide::Decoder { t, message } => {
            let (mean, var) = gaussian_p_w_given_t(cfg, t);
            let target = LogNormalPdf::new(mean, var);
            let ln_l = (list.l_max as f64).ln();
            list.samples
                .iter()
                .zip(&list.labels)
                .map(|(&u, &label)| {
                    if label == message {
                        log_ratio(&target, &prior, u) + ln_l
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        }
    };
    ImportanceWeights::from_log(logs)
}

/// `argmin_i log_race[i] - log_weight[i]` over finite weights; ties go to
/// the lowest index.
#[inline]
pub fn log_race_argmin(log_race: &[f64], log_weight: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_score = f64::INFINITY;
    for (i, (&s, &w)) in log_race.iter().zip(log_weight).enumerate() {
        if w == f64::NEG_INFINITY {
            continue;
        }
        let score = s - w;
        if best.is_none() || score < best_score {
            best = Some(i);
            best_score = score;
        }
    }
    best
}

/// `ln S` for `rows` race rows of width `n`; row `k`, column `i` uses the
/// stream `seed.tag(k).tag(i)`.
pub(crate) fn log_race_rows(seed: SeedContext, rows: usize, n: usize) -> Vec<Vec<f64>> {
    (0..rows as u64)
        .map(|k| {
            let ctx = seed.tag(k);
            (0..n as u64).map(|i| exp_variate(ctx.tag(i)).ln()).collect()
        })
        .collect()
}

/// Source value and i.i.d. side information for `decoders` decoders.
pub fn draw_source(seed: SeedContext, var_t_given_a: f64, decoders: usize) -> (f64, Vec<f64>) {
    let a = standard_normal(seed.tag(SOURCE_STREAM));
    let sd = var_t_given_a.sqrt();
    let t = (0..decoders as u64)
        .map(|k| a + sd * standard_normal(seed.tag(SIDE_STREAM).tag(k)))
        .collect();
    (a, t)
}

/// Result of one continuous coding trial.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingOutcome {
    /// Encoder index into the shared list.
    pub y: usize,
    /// Transmitted label of `y`.
    pub message: usize,
    /// Decoder indices; `None` when no sample carries the message.
    pub x: Vec<Option<usize>>,
    pub reconstructions: Vec<f64>,
    pub matched: bool,
    /// Smallest squared reconstruction error among the decoders.
    pub best_distortion: f64,
}

impl CodingOutcome {
    /// `10 log10` of the best squared error.
    pub fn best_distortion_db(&self) -> f64 {
        10.0 * self.best_distortion.max(MIN_SQUARED_ERROR).log10()
    }
}

/// Full pipeline for given source value `a` and side information `t`
/// (one entry per decoder). All shared randomness comes from `seed`.
pub fn encode_decode_continuous(
    cfg: &GaussianWzConfig,
    a: f64,
    t: &[f64],
    scheme: Scheme,
    seed: SeedContext,
) -> Result<CodingOutcome> {
    cfg.validate()?;
    if t.len() != cfg.decoders {
        return Err(Error::ShapeMismatch(format!(
            "{} side observations for {} decoders",
            t.len(),
            cfg.decoders
        )));
    }
    let list = ImportanceList::draw(seed, cfg.samples, cfg.l_max, cfg.var_w());
    let race_rows = match scheme {
        Scheme::Gls => cfg.decoders,
        Scheme::SharedRow => 1,
    };
    let log_races = log_race_rows(seed.tag(RACE_STREAM), race_rows, cfg.samples);
    let enc = importance_weights(cfg, WeightSide::Encoder { a }, &list)?;
    let mut min_race = log_races[0].clone();
    for row in &log_races[1..] {
        for (m, &s) in min_race.iter_mut().zip(row) {
            if s < *m {
                *m = s;
            }
        }
    }
    let y = log_race_argmin(&min_race, &enc.log_unnormalized).ok_or(Error::EmptySupport)?;
    let message = list.labels[y];
    let mut x = Vec::with_capacity(t.len());
    let mut reconstructions = Vec::with_capacity(t.len());
    let mut best = f64::INFINITY;
    for (k, &tk) in t.iter().enumerate() {
        let row = match scheme {
            Scheme::Gls => k,
            Scheme::SharedRow => 0,
        };
        let xk = match importance_weights(cfg, WeightSide::Decoder { t: tk, message }, &list) {
            Ok(w) => log_race_argmin(&log_races[row], &w.log_unnormalized),
            Err(Error::AllZeroWeights) => None,
            Err(e) => return Err(e),
        };
        // decoding failure: fall back to the prior mean of W
        let w = xk.map_or(0.0, |i| list.samples[i]);
        let recon = mmse_reconstruct(cfg, w, tk);
        best = best.min((recon - a) * (recon - a));
        x.push(xk);
        reconstructions.push(recon);
    }
    Ok(CodingOutcome {
        y,
        message,
        matched: x.contains(&Some(y)),
        x,
        reconstructions,
        best_distortion: best,
    })
}

/// Draws `A` and the side information from `seed` and runs one trial.
pub fn run_continuous_trial(
    cfg: &GaussianWzConfig,
    scheme: Scheme,
    seed: SeedContext,
) -> Result<CodingOutcome> {
    let (a, t) = draw_source(seed, cfg.var_t_given_a, cfg.decoders);
    encode_decode_continuous(cfg, a, &t, scheme, seed)
}
