//! Gumbel-max list sampling.
//!
//! The target takes the race minimum across all K rows, each proposal
//! races only on its own row. Scores `s / p` with `p == 0` never win;
//! exact ties go to the lowest index.

use super::{Categorical, RaceMatrix};
use crate::error::{Error, Result};

/// One coupled draw: target symbol `y`, one proposal symbol per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupleOutcome {
    pub y: usize,
    pub x: Vec<usize>,
    pub accepted: bool,
}

impl CoupleOutcome {
    pub fn new(y: usize, x: Vec<usize>) -> Self {
        let accepted = x.contains(&y);
        Self { y, x, accepted }
    }
}

/// `argmin_i race[i] / probs[i]` over the support of `probs`.
#[inline]
pub fn race_argmin(race: &[f64], probs: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_score = f64::INFINITY;
    for (i, (&s, &p)) in race.iter().zip(probs).enumerate() {
        if p > 0.0 {
            let score = s / p;
            if best.is_none() || score < best_score {
                best = Some(i);
                best_score = score;
            }
        }
    }
    best
}

/// Target selection `argmin_i min_{k in rows} s[k][i] / q_i`.
pub fn target_argmin<I>(q: &[f64], races: &RaceMatrix, rows: I) -> Option<usize>
where
    I: IntoIterator<Item = usize>,
{
    let mut mins = vec![f64::INFINITY; races.cols()];
    for k in rows {
        for (m, &s) in mins.iter_mut().zip(races.row(k)) {
            if s < *m {
                *m = s;
            }
        }
    }
    race_argmin(&mins, q)
}

fn check_shape(n: usize, races: &RaceMatrix) -> Result<()> {
    if races.cols() != n {
        return Err(Error::AlphabetMismatch {
            left: n,
            right: races.cols(),
        });
    }
    Ok(())
}

/// GLS with identical proposals: one draft per race row.
pub fn gls_sample(p: &Categorical, q: &Categorical, races: &RaceMatrix) -> Result<CoupleOutcome> {
    p.check_same_alphabet(q)?;
    check_shape(q.len(), races)?;
    let y = target_argmin(q.probs(), races, 0..races.rows()).ok_or(Error::EmptySupport)?;
    let x = (0..races.rows())
        .map(|k| race_argmin(races.row(k), p.probs()).ok_or(Error::EmptySupport))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoupleOutcome::new(y, x))
}

/// GLS where row `k` proposes from `p_list[k]`.
pub fn gls_sample_heterogeneous(
    p_list: &[Categorical],
    q: &Categorical,
    races: &RaceMatrix,
) -> Result<CoupleOutcome> {
    if p_list.len() != races.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} proposals for {} race rows",
            p_list.len(),
            races.rows()
        )));
    }
    check_shape(q.len(), races)?;
    for p in p_list {
        p.check_same_alphabet(q)?;
    }
    let y = target_argmin(q.probs(), races, 0..races.rows()).ok_or(Error::EmptySupport)?;
    let x = p_list
        .iter()
        .enumerate()
        .map(|(k, p)| race_argmin(races.row(k), p.probs()).ok_or(Error::EmptySupport))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoupleOutcome::new(y, x))
}

/// Acceptance of GLS for every list size `K = 1..=races.rows()`, where the
/// size-K draw uses the first K rows. Entry `K - 1` is the accept flag.
pub fn gls_accept_profile(p: &Categorical, q: &Categorical, races: &RaceMatrix) -> Result<Vec<bool>> {
    p.check_same_alphabet(q)?;
    check_shape(q.len(), races)?;
    let n = races.cols();
    let mut mins = vec![f64::INFINITY; n];
    let mut drafted = vec![false; n];
    let mut out = Vec::with_capacity(races.rows());
    for k in 0..races.rows() {
        let row = races.row(k);
        for (m, &s) in mins.iter_mut().zip(row) {
            if s < *m {
                *m = s;
            }
        }
        let x = race_argmin(row, p.probs()).ok_or(Error::EmptySupport)?;
        drafted[x] = true;
        let y = race_argmin(&mins, q.probs()).ok_or(Error::EmptySupport)?;
        out.push(drafted[y]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_races;
    use crate::rng::SeedContext;

    fn cat(v: &[f64]) -> Categorical {
        Categorical::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_trace() {
        let races = RaceMatrix::from_rows(vec![vec![0.2, 0.9]]).unwrap();
        let out = gls_sample(&cat(&[0.5, 0.5]), &cat(&[0.1, 0.9]), &races).unwrap();
        assert_eq!(out.x, vec![0]);
        assert_eq!(out.y, 1);
        assert!(!out.accepted);
    }

    #[test]
    fn identical_distributions_always_accept() {
        let p = Categorical::random(SeedContext::new(1), 7);
        for t in 0..2000 {
            let races = build_races(SeedContext::new(2).tag(t), 3, 7);
            assert!(gls_sample(&p, &p, &races).unwrap().accepted);
        }
    }

    #[test]
    fn zero_mass_never_wins() {
        let p = cat(&[0.0, 1.0, 0.0]);
        let q = cat(&[0.5, 0.0, 0.5]);
        for t in 0..500 {
            let races = build_races(SeedContext::new(3).tag(t), 2, 3);
            let out = gls_sample(&p, &q, &races).unwrap();
            assert_eq!(out.x, vec![1, 1]);
            assert_ne!(out.y, 1);
            assert!(!out.accepted);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let races = RaceMatrix::from_rows(vec![vec![1.0, 1.0, 1.0]]).unwrap();
        let u = Categorical::uniform(3);
        let out = gls_sample(&u, &u, &races).unwrap();
        assert_eq!((out.y, out.x[0]), (0, 0));
    }

    #[test]
    fn heterogeneous_reduces_to_homogeneous() {
        let p = Categorical::random(SeedContext::new(4), 6);
        let q = Categorical::random(SeedContext::new(5), 6);
        for t in 0..200 {
            let races = build_races(SeedContext::new(6).tag(t), 4, 6);
            let a = gls_sample(&p, &q, &races).unwrap();
            let b = gls_sample_heterogeneous(&vec![p.clone(); 4], &q, &races).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn degenerate_proposals_cover_alphabet() {
        let p_list = [cat(&[1.0, 0.0]), cat(&[0.0, 1.0])];
        let q = cat(&[0.3, 0.7]);
        for t in 0..200 {
            let races = build_races(SeedContext::new(7).tag(t), 2, 2);
            let out = gls_sample_heterogeneous(&p_list, &q, &races).unwrap();
            assert_eq!(out.x, vec![0, 1]);
            assert!(out.accepted);
        }
    }

    #[test]
    fn heterogeneous_shape_errors() {
        let races = build_races(SeedContext::new(0), 2, 2);
        let q = cat(&[0.5, 0.5]);
        assert!(matches!(
            gls_sample_heterogeneous(&[q.clone()], &q, &races),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            gls_sample_heterogeneous(&[q.clone(), Categorical::uniform(3)], &q, &races),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn profile_matches_truncated_draws() {
        let p = Categorical::random(SeedContext::new(8), 5);
        let q = Categorical::random(SeedContext::new(9), 5);
        for t in 0..300 {
            let races = build_races(SeedContext::new(10).tag(t), 6, 5);
            let profile = gls_accept_profile(&p, &q, &races).unwrap();
            for k in 1..=6 {
                let direct = gls_sample(&p, &q, &races.truncated(k)).unwrap();
                assert_eq!(profile[k - 1], direct.accepted);
            }
        }
    }
}
