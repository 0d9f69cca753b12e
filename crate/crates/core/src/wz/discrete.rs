//! One encoder, K decoders with side information, over finite alphabets.
//!
//! Shared randomness is a K x N race matrix plus one uniform label in
//! `0..l_max` per representation symbol. The encoder races on every row
//! against `p(w|a)` and transmits only the label of its winner; decoder `k`
//! races on row `k` against `p(w|t_k)` restricted to symbols carrying that
//! label.

use super::Scheme;
use crate::coupling::{build_races, race_argmin, target_argmin, Categorical, RaceMatrix};
use crate::error::{Error, Result};
use crate::rng::{uniform_index, SeedContext};
use crate::stats::par_trials;

const CONSISTENCY_TOL: f64 = 1e-9;

const RACE_STREAM: u64 = 0;
const LABEL_STREAM: u64 = 1;
const SOURCE_STREAM: u64 = 2;
const SIDE_STREAM: u64 = 3;

/// Joint law of source `A`, side information `T` and representation `W`,
/// with `T` and `W` conditionally independent given `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWzModel {
    p_a: Categorical,
    t_given_a: Vec<Categorical>,
    w_given_a: Vec<Categorical>,
    p_t: Vec<f64>,
    a_given_t: Vec<Categorical>,
    w_given_t: Vec<Categorical>,
}

impl DiscreteWzModel {
    pub fn new(
        p_a: Categorical,
        t_given_a: Vec<Categorical>,
        w_given_a: Vec<Categorical>,
    ) -> Result<Self> {
        let n_a = p_a.len();
        if t_given_a.len() != n_a || w_given_a.len() != n_a {
            return Err(Error::ShapeMismatch(format!(
                "source alphabet {n_a}, {} side rows, {} representation rows",
                t_given_a.len(),
                w_given_a.len()
            )));
        }
        for rows in [&t_given_a, &w_given_a] {
            for r in rows.iter() {
                rows[0].check_same_alphabet(r)?;
            }
        }
        let n_t = t_given_a[0].len();
        let p_t: Vec<f64> = (0..n_t)
            .map(|t| (0..n_a).map(|a| p_a.prob(a) * t_given_a[a].prob(t)).sum())
            .collect();
        let a_given_t = (0..n_t)
            .map(|t| {
                if p_t[t] > 0.0 {
                    Categorical::new((0..n_a).map(|a| p_a.prob(a) * t_given_a[a].prob(t)).collect())
                } else {
                    // unreachable side symbol: fall back to the prior
                    Ok(p_a.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let w_given_t = mix_rows(&a_given_t, &w_given_a)?;
        Ok(Self {
            p_a,
            t_given_a,
            w_given_a,
            p_t,
            a_given_t,
            w_given_t,
        })
    }

    /// Replaces the decoder table with a caller-supplied one after checking
    /// that it marginalizes correctly.
    pub fn with_w_given_t(mut self, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != self.side_size() {
            return Err(Error::InconsistentModel(format!(
                "{} rows for side alphabet {}",
                rows.len(),
                self.side_size()
            )));
        }
        let rows = rows
            .into_iter()
            .map(|r| {
                if r.len() != self.repr_size() {
                    return Err(Error::InconsistentModel("row width mismatch".into()));
                }
                let sum: f64 = r.iter().sum();
                if (sum - 1.0).abs() > CONSISTENCY_TOL {
                    return Err(Error::InconsistentModel(format!("row sums to {sum}")));
                }
                Categorical::new(r).map_err(|e| Error::InconsistentModel(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.w_given_t = rows;
        self.check_consistent()?;
        Ok(self)
    }

    /// Checks `p(w|t) = sum_a p(w|a) p(a|t)` within 1e-9 on reachable `t`.
    pub fn check_consistent(&self) -> Result<()> {
        let expected = derive_p_w_given_t(self)?;
        for t in 0..self.side_size() {
            if self.p_t[t] <= 0.0 {
                continue;
            }
            for w in 0..self.repr_size() {
                let diff = (expected[t].prob(w) - self.w_given_t[t].prob(w)).abs();
                if diff > CONSISTENCY_TOL {
                    return Err(Error::InconsistentModel(format!(
                        "p(w={w}|t={t}) off by {diff:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn source_size(&self) -> usize {
        self.p_a.len()
    }

    pub fn side_size(&self) -> usize {
        self.p_t.len()
    }

    pub fn repr_size(&self) -> usize {
        self.w_given_a[0].len()
    }

    pub fn p_a(&self) -> &Categorical {
        &self.p_a
    }

    pub fn p_t(&self) -> &[f64] {
        &self.p_t
    }

    pub fn t_given_a(&self, a: usize) -> &Categorical {
        &self.t_given_a[a]
    }

    pub fn w_given_a(&self, a: usize) -> &Categorical {
        &self.w_given_a[a]
    }

    pub fn a_given_t(&self, t: usize) -> &Categorical {
        &self.a_given_t[t]
    }

    pub fn w_given_t(&self, t: usize) -> &Categorical {
        &self.w_given_t[t]
    }

    /// `log2(p(w|a) / p(w|t))`.
    pub fn information_density(&self, w: usize, a: usize, t: usize) -> f64 {
        (self.w_given_a[a].prob(w) / self.w_given_t[t].prob(w)).log2()
    }
}

fn mix_rows(weights: &[Categorical], rows: &[Categorical]) -> Result<Vec<Categorical>> {
    let width = rows[0].len();
    weights
        .iter()
        .map(|wt| {
            let mixed = (0..width)
                .map(|w| {
                    wt.probs()
                        .iter()
                        .zip(rows)
                        .map(|(&pa, row)| pa * row.prob(w))
                        .sum()
                })
                .collect();
            Categorical::new(mixed)
        })
        .collect()
}

/// `p(w|t) = sum_a p(w|a) p(a|t)`, recomputed from the base tables.
pub fn derive_p_w_given_t(model: &DiscreteWzModel) -> Result<Vec<Categorical>> {
    mix_rows(&model.a_given_t, &model.w_given_a)
}

/// Code parameters: decoder count and message alphabet size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WzCode {
    pub decoders: usize,
    pub l_max: usize,
}

impl WzCode {
    pub fn new(decoders: usize, l_max: usize) -> Result<Self> {
        if decoders == 0 || l_max == 0 {
            return Err(Error::InvalidParameter(
                "decoder count and l_max must be >= 1".into(),
            ));
        }
        Ok(Self { decoders, l_max })
    }

    /// Rate in bits.
    pub fn rate_bits(&self) -> f64 {
        (self.l_max as f64).log2()
    }
}

/// Label of every symbol, uniform on `0..l_max`.
pub fn draw_labels(seed: SeedContext, n: usize, l_max: usize) -> Vec<usize> {
    (0..n as u64).map(|i| uniform_index(seed.tag(i), l_max)).collect()
}

/// Encoder: `Y = argmin_i min_k S_i^(k) / p(i|a)`; returns `(Y, label of Y)`.
pub fn encode_index_discrete(
    model: &DiscreteWzModel,
    a: usize,
    races: &RaceMatrix,
    labels: &[usize],
) -> Result<(usize, usize)> {
    encode_rows(model, a, races, labels, races.rows())
}

fn encode_rows(
    model: &DiscreteWzModel,
    a: usize,
    races: &RaceMatrix,
    labels: &[usize],
    rows: usize,
) -> Result<(usize, usize)> {
    check_shared(model, races, labels)?;
    let y = target_argmin(model.w_given_a(a).probs(), races, 0..rows).ok_or(Error::EmptySupport)?;
    Ok((y, labels[y]))
}

/// Decoder `k`: `argmin_i S_i^(k) / (p(i|t_k) 1{label_i = m})`.
pub fn decode_index_discrete(
    model: &DiscreteWzModel,
    t_k: usize,
    m: usize,
    k: usize,
    races: &RaceMatrix,
    labels: &[usize],
) -> Result<usize> {
    check_shared(model, races, labels)?;
    let row = races.row(k);
    let probs = model.w_given_t(t_k).probs();
    let mut best = None;
    let mut best_score = f64::INFINITY;
    for i in 0..probs.len() {
        if labels[i] != m || probs[i] <= 0.0 {
            continue;
        }
        let score = row[i] / probs[i];
        if best.is_none() || score < best_score {
            best = Some(i);
            best_score = score;
        }
    }
    best.ok_or(Error::NoCandidate)
}

/// Shared-randomness baseline encoder: races only on row 0.
pub fn baseline_encode_discrete(
    model: &DiscreteWzModel,
    a: usize,
    races: &RaceMatrix,
    labels: &[usize],
) -> Result<(usize, usize)> {
    encode_rows(model, a, races, labels, 1)
}

/// Shared-randomness baseline decoder: every decoder races on row 0 with
/// its own side information.
pub fn baseline_decode_discrete(
    model: &DiscreteWzModel,
    t_k: usize,
    m: usize,
    races: &RaceMatrix,
    labels: &[usize],
) -> Result<usize> {
    decode_index_discrete(model, t_k, m, 0, races, labels)
}

fn check_shared(model: &DiscreteWzModel, races: &RaceMatrix, labels: &[usize]) -> Result<()> {
    if races.cols() != model.repr_size() || labels.len() != model.repr_size() {
        return Err(Error::ShapeMismatch(format!(
            "representation alphabet {}, races {} columns, {} labels",
            model.repr_size(),
            races.cols(),
            labels.len()
        )));
    }
    Ok(())
}

/// One end-to-end discrete coding trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteTrial {
    pub a: usize,
    pub t: Vec<usize>,
    pub y: usize,
    pub message: usize,
    /// `None` when no symbol carries the message with positive decoder mass.
    pub x: Vec<Option<usize>>,
    pub matched: bool,
}

/// Draws `A`, i.i.d. `T_k`, the shared randomness, and runs one trial.
pub fn run_discrete_trial(
    model: &DiscreteWzModel,
    code: WzCode,
    scheme: Scheme,
    seed: SeedContext,
) -> Result<DiscreteTrial> {
    let n = model.repr_size();
    let a = model.p_a().sample(seed.tag(SOURCE_STREAM));
    let t: Vec<usize> = (0..code.decoders as u64)
        .map(|k| model.t_given_a(a).sample(seed.tag(SIDE_STREAM).tag(k)))
        .collect();
    let races = build_races(seed.tag(RACE_STREAM), code.decoders, n);
    let labels = draw_labels(seed.tag(LABEL_STREAM), n, code.l_max);
    let (y, message) = match scheme {
        Scheme::Gls => encode_index_discrete(model, a, &races, &labels)?,
        Scheme::SharedRow => baseline_encode_discrete(model, a, &races, &labels)?,
    };
    let x = t
        .iter()
        .enumerate()
        .map(|(k, &tk)| {
            let row = match scheme {
                Scheme::Gls => k,
                Scheme::SharedRow => 0,
            };
            match decode_index_discrete(model, tk, message, row, &races, &labels) {
                Ok(i) => Ok(Some(i)),
                Err(Error::NoCandidate) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let matched = x.contains(&Some(y));
    Ok(DiscreteTrial {
        a,
        t,
        y,
        message,
        x,
        matched,
    })
}

/// Mismatch count over `trials` trials seeded `seed.tag(t)`.
pub fn discrete_mismatches(
    model: &DiscreteWzModel,
    code: WzCode,
    scheme: Scheme,
    trials: usize,
    seed: SeedContext,
) -> Result<u64> {
    let (count, err) = par_trials(
        trials,
        || (0u64, None),
        |(count, err): &mut (u64, Option<Error>), t| {
            if err.is_some() {
                return;
            }
            match run_discrete_trial(model, code, scheme, seed.tag(t as u64)) {
                Ok(trial) => *count += !trial.matched as u64,
                Err(e) => *err = Some(e),
            }
        },
        |total, part| {
            total.0 += part.0;
            if total.1.is_none() {
                total.1 = part.1;
            }
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(count),
    }
}

/// Single-row Gumbel-max draw of `W` given `a`, used as a marginal reference.
pub fn plain_gumbel_draw(p: &Categorical, seed: SeedContext) -> usize {
    let races = build_races(seed, 1, p.len());
    race_argmin(races.row(0), p.probs()).expect("categorical has positive mass")
}
