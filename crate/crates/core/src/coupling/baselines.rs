//! Comparison couplers: fully independent sampling and recursive rejection.

use super::gls::race_argmin;
use super::{build_races, Categorical, CoupleOutcome};
use crate::error::{Error, Result};
use crate::rng::{derive_uniform, sample_weights, SeedContext};

const TARGET_STREAM: u64 = 0;
const DRAFT_STREAM: u64 = 1;
const ACCEPT_STREAM: u64 = 2;
const RESIDUAL_STREAM: u64 = 3;

/// Target and proposals drawn from disjoint race matrices.
pub fn independent_sample(
    p: &Categorical,
    q: &Categorical,
    k: usize,
    seed: SeedContext,
) -> Result<CoupleOutcome> {
    p.check_same_alphabet(q)?;
    let n = q.len();
    let target = build_races(seed.tag(TARGET_STREAM), 1, n);
    let drafts = build_races(seed.tag(DRAFT_STREAM), k, n);
    let y = race_argmin(target.row(0), q.probs()).ok_or(Error::EmptySupport)?;
    let x = (0..k)
        .map(|r| race_argmin(drafts.row(r), p.probs()).ok_or(Error::EmptySupport))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoupleOutcome::new(y, x))
}

/// Accept flags of [`independent_sample`] for `K = 1..=k_max` drawn with the
/// same seed (the size-K draw uses the first K proposal rows).
pub fn independent_accept_profile(
    p: &Categorical,
    q: &Categorical,
    k_max: usize,
    seed: SeedContext,
) -> Result<Vec<bool>> {
    p.check_same_alphabet(q)?;
    let n = q.len();
    let target = build_races(seed.tag(TARGET_STREAM), 1, n);
    let drafts = build_races(seed.tag(DRAFT_STREAM), k_max, n);
    let y = race_argmin(target.row(0), q.probs()).ok_or(Error::EmptySupport)?;
    let mut hit = false;
    let mut out = Vec::with_capacity(k_max);
    for r in 0..k_max {
        hit |= race_argmin(drafts.row(r), p.probs()) == Some(y);
        out.push(hit);
    }
    Ok(out)
}

/// Outcome of a recursive rejection pass, with the 1-based position of the
/// first accepted draft (if any).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectionTrace {
    pub outcome: CoupleOutcome,
    pub accepted_at: Option<usize>,
}

/// Residual `normalize(max(r - p, 0))`, or `None` when no mass remains.
pub fn rejection_residual(r: &[f64], p: &[f64]) -> Option<Vec<f64>> {
    let raw: Vec<f64> = r.iter().zip(p).map(|(a, b)| (a - b).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        Some(raw.into_iter().map(|v| v / total).collect())
    } else {
        None
    }
}

/// Multi-draft recursive rejection sampling.
///
/// Draft `k` is accepted with probability `min(1, r(x)/p_k(x))` against the
/// current residual `r` (initially `q`); on rejection the residual becomes
/// `normalize(max(r - p_k, 0))`. If every draft is rejected the target symbol
/// is drawn from the final residual. The target marginal is exactly `q`.
pub fn recursive_rejection_sample(
    p_list: &[Categorical],
    q: &Categorical,
    seed: SeedContext,
) -> Result<CoupleOutcome> {
    recursive_rejection_trace(p_list, q, seed).map(|t| t.outcome)
}

pub fn recursive_rejection_trace(
    p_list: &[Categorical],
    q: &Categorical,
    seed: SeedContext,
) -> Result<RejectionTrace> {
    if p_list.is_empty() {
        return Err(Error::EmptyInput);
    }
    for p in p_list {
        p.check_same_alphabet(q)?;
    }
    let x: Vec<usize> = p_list
        .iter()
        .enumerate()
        .map(|(k, p)| p.sample(seed.tag(DRAFT_STREAM).tag(k as u64)))
        .collect();
    let mut residual = q.probs().to_vec();
    for (k, (p, &xk)) in p_list.iter().zip(&x).enumerate() {
        let ratio = residual[xk] / p.prob(xk);
        let u = derive_uniform(seed.tag(ACCEPT_STREAM).tag(k as u64));
        if u < ratio.min(1.0) {
            return Ok(RejectionTrace {
                outcome: CoupleOutcome::new(xk, x),
                accepted_at: Some(k + 1),
            });
        }
        if let Some(next) = rejection_residual(&residual, p.probs()) {
            residual = next;
        }
    }
    let y = sample_weights(seed.tag(RESIDUAL_STREAM), &residual).ok_or(Error::EmptySupport)?;
    Ok(RejectionTrace {
        outcome: CoupleOutcome::new(y, x),
        accepted_at: None,
    })
}

/// Accept flags of recursive rejection for `K = 1..=k_max` identical
/// proposals under one seed: the size-K run examines the first K drafts, so
/// it accepts exactly when the first acceptance happens at position <= K.
pub fn rejection_accept_profile(
    p: &Categorical,
    q: &Categorical,
    k_max: usize,
    seed: SeedContext,
) -> Result<Vec<bool>> {
    let p_list = vec![p.clone(); k_max];
    let trace = recursive_rejection_trace(&p_list, q, seed)?;
    Ok((1..=k_max)
        .map(|k| trace.accepted_at.is_some_and(|a| a <= k))
        .collect())
}
