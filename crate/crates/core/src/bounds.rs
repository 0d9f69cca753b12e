//! Closed-form acceptance and error bounds.
//!
//! Terms whose index has zero mass under either distribution contribute
//! nothing to the list-matching sums (their denominators diverge).

use crate::coupling::{tv_distance, Categorical};
use crate::error::{Error, Result};
use crate::wz::DiscreteWzModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Lml,
    LmlConditional,
    LmlRelaxed,
    MaximalCoupling,
    WeakCoupling,
    ConditionalLml,
    WzError,
    StrongVariant,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lml => "lml",
            Self::LmlConditional => "lml_conditional",
            Self::LmlRelaxed => "lml_relaxed",
            Self::MaximalCoupling => "maximal_coupling",
            Self::WeakCoupling => "weak_coupling",
            Self::ConditionalLml => "conditional_lml",
            Self::WzError => "wz_error",
            Self::StrongVariant => "strong_variant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
}

impl BoundReport {
    pub fn new(kind: BoundKind, value: f64) -> Self {
        debug_assert!((-1e-12..=1.0 + 1e-12).contains(&value), "{kind:?} = {value}");
        Self {
            kind,
            value: value.clamp(0.0, 1.0),
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("list size K must be >= 1".into()));
    }
    Ok(())
}

/// Shared sum `sum_j active / sum_i [max(q_i/q_j, p_i/p_j) + (K-1) q_i/q_j]`.
fn list_matching_sum(p: &[f64], q: &[f64], k: usize, active: usize) -> f64 {
    let extra = (k - 1) as f64;
    let mut total = 0.0;
    for (&pj, &qj) in p.iter().zip(q) {
        if pj <= 0.0 || qj <= 0.0 {
            continue;
        }
        let denom: f64 = p
            .iter()
            .zip(q)
            .map(|(&pi, &qi)| (qi / qj).max(pi / pj) + extra * qi / qj)
            .sum();
        total += active as f64 / denom;
    }
    total
}

/// List matching lower bound on `Pr[Y in {X^(1..K)}]` for GLS.
pub fn lml_bound(p: &Categorical, q: &Categorical, k: usize) -> Result<f64> {
    p.check_same_alphabet(q)?;
    check_k(k)?;
    Ok(list_matching_sum(p.probs(), q.probs(), k, k))
}

/// Lower bound on the match probability conditioned on `Y = j`:
/// `(1 + q_j / (K p_j))^-1`.
pub fn lml_conditional_bound(p_j: f64, q_j: f64, k: usize) -> Result<f64> {
    check_k(k)?;
    if !(p_j > 0.0) {
        return Err(Error::DegenerateMass(p_j));
    }
    if !(q_j > 0.0) {
        return Err(Error::DegenerateMass(q_j));
    }
    Ok(1.0 / (1.0 + q_j / (k as f64 * p_j)))
}

/// `sum_j q_j (1 + q_j / (K p_j))^-1`, the bound obtained by averaging the
/// conditional bound over `Y ~ q`.
pub fn lml_relaxed_bound(p: &Categorical, q: &Categorical, k: usize) -> Result<f64> {
    p.check_same_alphabet(q)?;
    check_k(k)?;
    let kf = k as f64;
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .filter(|(&pj, &qj)| pj > 0.0 && qj > 0.0)
        .map(|(&pj, &qj)| qj / (1.0 + qj / (kf * pj)))
        .sum())
}

/// `1 - d_TV(p, q)`, the best single-draft match probability.
pub fn maximal_coupling_prob(p: &Categorical, q: &Categorical) -> Result<f64> {
    Ok(1.0 - tv_distance(p, q)?)
}

/// `(1 - d_TV) / (1 + d_TV)`, guaranteed by single-row Gumbel coupling.
pub fn weak_coupling_bound(p: &Categorical, q: &Categorical) -> Result<f64> {
    let tv = tv_distance(p, q)?;
    Ok((1.0 - tv) / (1.0 + tv))
}

/// Conditional list matching bound `sum_k (K + q_j(a) / p_j(z_k))^-1`.
pub fn conditional_lml_bound(q_j_a: f64, p_j_z: &[f64]) -> Result<f64> {
    if p_j_z.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(q_j_a > 0.0) {
        return Err(Error::DegenerateMass(q_j_a));
    }
    let k = p_j_z.len() as f64;
    p_j_z
        .iter()
        .map(|&p| {
            if p > 0.0 {
                Ok(1.0 / (k + q_j_a / p))
            } else {
                Err(Error::DegenerateMass(p))
            }
        })
        .sum()
}

/// Upper bound on the mismatch probability of the K-decoder side-information
/// code at `log2(l_max)` bits:
/// `1 - E[(1 + 2^{i(W;A|T)} / (K l_max))^-1]`, enumerated exactly.
pub fn wz_error_bound(model: &DiscreteWzModel, k: usize, l_max: usize) -> Result<f64> {
    check_k(k)?;
    if l_max == 0 {
        return Err(Error::InvalidParameter("l_max must be >= 1".into()));
    }
    model.check_consistent()?;
    let scale = (k * l_max) as f64;
    let mut expect = 0.0;
    for a in 0..model.source_size() {
        let pa = model.p_a().prob(a);
        if pa <= 0.0 {
            continue;
        }
        for t in 0..model.side_size() {
            let pt = model.t_given_a(a).prob(t);
            if pt <= 0.0 {
                continue;
            }
            for w in 0..model.repr_size() {
                let pw = model.w_given_a(a).prob(w);
                if pw <= 0.0 {
                    continue;
                }
                // 2^{i(w;a|t)} = p(w|a) / p(w|t)
                let density_ratio = pw / model.w_given_t(t).prob(w);
                expect += pa * pt * pw / (1.0 + density_ratio / scale);
            }
        }
    }
    Ok((1.0 - expect).clamp(0.0, 1.0))
}

/// Per-step acceptance bound for the strongly invariant decoder with `j`
/// of `k` drafts still active.
pub fn strong_variant_accept_bound(
    p: &Categorical,
    q: &Categorical,
    k: usize,
    j: usize,
) -> Result<f64> {
    p.check_same_alphabet(q)?;
    check_k(k)?;
    if j > k {
        return Err(Error::InvalidActiveCount {
            active: j,
            total: k,
        });
    }
    Ok(list_matching_sum(p.probs(), q.probs(), k, j))
}

/// Every pairwise bound for `(p, q, K)`.
pub fn pair_bounds(p: &Categorical, q: &Categorical, k: usize) -> Result<Vec<BoundReport>> {
    Ok(vec![
        BoundReport::new(BoundKind::Lml, lml_bound(p, q, k)?),
        BoundReport::new(BoundKind::LmlRelaxed, lml_relaxed_bound(p, q, k)?),
        BoundReport::new(BoundKind::MaximalCoupling, maximal_coupling_prob(p, q)?),
        BoundReport::new(BoundKind::WeakCoupling, weak_coupling_bound(p, q)?),
    ])
}
