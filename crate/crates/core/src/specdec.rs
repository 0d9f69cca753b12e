//! Multi-draft speculative decoding over exact tabular language models.
//!
//! K drafts of length L are generated autoregressively with exponential
//! races; the target then picks each token with a race over the rows of the
//! drafts that are still active, so the verifier consumes only draft tokens,
//! target conditionals and the shared races.

use std::collections::{BTreeMap, HashMap};

use crate::coupling::{build_races, race_argmin, target_argmin, Categorical, RaceMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_uniform, sample_weights, SeedContext};

const RACE_STREAM: u64 = 0;
const ACCEPT_STREAM: u64 = 1;
const RESIDUAL_STREAM: u64 = 2;

/// Largest number of sequences [`exact_sequence_law`] will enumerate.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Conditional next-token tables for every context of length at most `C`.
/// Longer histories are truncated to their last `C` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularLM {
    n: usize,
    c: usize,
    table: HashMap<Vec<usize>, Categorical>,
}

impl TabularLM {
    pub fn new(n: usize, c: usize, table: HashMap<Vec<usize>, Categorical>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        for (ctx, row) in &table {
            if ctx.len() > c || ctx.iter().any(|&t| t >= n) {
                return Err(Error::InconsistentModel(format!("invalid context key {ctx:?}")));
            }
            if row.len() != n {
                return Err(Error::AlphabetMismatch {
                    left: n,
                    right: row.len(),
                });
            }
        }
        Ok(Self { n, c, table })
    }

    /// Fills every context of length `0..=c` with `row(context)`.
    pub fn from_fn<F>(n: usize, c: usize, mut row: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Categorical,
    {
        let mut table = HashMap::new();
        for ctx in all_contexts(n, c) {
            let r = row(&ctx);
            table.insert(ctx, r);
        }
        Self::new(n, c, table)
    }

    /// Random rows: `Categorical::random_peaked` with the given sharpness
    /// (1 gives flat Dirichlet rows).
    pub fn random(seed: SeedContext, n: usize, c: usize, sharpness: f64) -> Result<Self> {
        Self::from_fn(n, c, |ctx| {
            let mut s = seed.tag(ctx.len() as u64);
            for &t in ctx {
                s = s.tag(t as u64);
            }
            Categorical::random_peaked(s, n, sharpness)
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn max_context(&self) -> usize {
        self.c
    }

    /// Next-token law after `history`.
    pub fn conditional(&self, history: &[usize]) -> Result<&Categorical> {
        let key = &history[history.len().saturating_sub(self.c)..];
        self.table
            .get(key)
            .ok_or_else(|| Error::MissingContextRow(key.to_vec()))
    }

    /// `M(seq | context)` as a product of conditionals.
    pub fn sequence_prob(&self, context: &[usize], seq: &[usize]) -> Result<f64> {
        let mut hist = context.to_vec();
        let mut prob = 1.0;
        for &t in seq {
            prob *= self.conditional(&hist)?.prob(t);
            hist.push(t);
        }
        Ok(prob)
    }
}

fn all_contexts(n: usize, c: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..c {
        let mut next = Vec::with_capacity(layer.len() * n);
        for ctx in &layer {
            for t in 0..n {
                let mut e = ctx.clone();
                e.push(t);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Target race over the active drafts only.
    Conditional,
    /// Target race over all K rows at every step.
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verifier {
    Gls,
    /// Multi-draft recursive rejection against the drafters' conditionals.
    RecursiveRejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeConfig {
    pub k: usize,
    pub l: usize,
    pub mode: DecodeMode,
    pub verifier: Verifier,
}

impl DecodeConfig {
    pub fn new(k: usize, l: usize, mode: DecodeMode) -> Self {
        Self {
            k,
            l,
            mode,
            verifier: Verifier::Gls,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidParameter("K and L must be >= 1".into()));
        }
        if self.verifier == Verifier::RecursiveRejection && self.mode == DecodeMode::Strong {
            return Err(Error::InvalidParameter(
                "strong mode is only defined for the GLS verifier".into(),
            ));
        }
        Ok(())
    }
}

/// One draft-and-verify round.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub context: Vec<usize>,
    /// K x L draft tokens.
    pub drafts: Vec<Vec<usize>>,
    pub output: Vec<usize>,
    /// Number of emitted tokens, accepted tokens plus one.
    pub tau: usize,
    /// `active_sets[j]` is the active set after `j` verification steps.
    pub active_sets: Vec<Vec<usize>>,
    /// Per verification step, whether some active draft matched.
    pub accepted: Vec<bool>,
}

impl DecodeTrace {
    pub fn accept_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }
}

/// Race tensor of one episode: `L + 1` steps of K x N races; entry
/// `(j, k, i)` comes from `seed.tag(0).tag(j).tag(k).tag(i)`.
pub fn episode_races(seed: SeedContext, l: usize, k: usize, n: usize) -> Vec<RaceMatrix> {
    (0..=l as u64)
        .map(|j| build_races(seed.tag(RACE_STREAM).tag(j), k, n))
        .collect()
}

fn drafter(drafters: &[TabularLM], k: usize) -> &TabularLM {
    if drafters.len() == 1 {
        &drafters[0]
    } else {
        &drafters[k]
    }
}

fn check_drafters(drafters: &[TabularLM], k: usize, n: usize) -> Result<()> {
    if drafters.is_empty() {
        return Err(Error::EmptyInput);
    }
    if drafters.len() != 1 && drafters.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "{} drafters for {} drafts",
            drafters.len(),
            k
        )));
    }
    for d in drafters {
        if d.alphabet_size() != n {
            return Err(Error::AlphabetMismatch {
                left: n,
                right: d.alphabet_size(),
            });
        }
    }
    Ok(())
}

fn check_races(races: &[RaceMatrix], steps: usize, k: usize, n: usize) -> Result<()> {
    if races.len() < steps || races.iter().any(|r| r.rows() != k || r.cols() != n) {
        return Err(Error::ShapeMismatch(format!(
            "race tensor must have {steps} steps of {k} x {n}"
        )));
    }
    Ok(())
}

/// Drafts `X[k][j] = argmin_i races[j][k][i] / p_k(i | context, X[k][..j])`.
/// `drafters` holds one model per draft or a single shared model.
pub fn draft_generate(
    drafters: &[TabularLM],
    k: usize,
    context: &[usize],
    l: usize,
    races: &[RaceMatrix],
) -> Result<Vec<Vec<usize>>> {
    let n = drafters.first().ok_or(Error::EmptyInput)?.alphabet_size();
    check_drafters(drafters, k, n)?;
    check_races(races, l, k, n)?;
    (0..k)
        .map(|row| {
            let lm = drafter(drafters, row);
            let mut hist = context.to_vec();
            for step in races.iter().take(l) {
                let p = lm.conditional(&hist)?;
                let x = race_argmin(step.row(row), p.probs()).ok_or(Error::EmptySupport)?;
                hist.push(x);
            }
            Ok(hist.split_off(context.len()))
        })
        .collect()
}

fn check_drafts(drafts: &[Vec<usize>], n: usize) -> Result<usize> {
    let l = drafts.first().ok_or(Error::EmptyInput)?.len();
    if l == 0 || drafts.iter().any(|d| d.len() != l || d.iter().any(|&t| t >= n)) {
        return Err(Error::ShapeMismatch("draft rows must share a positive length".into()));
    }
    Ok(l)
}

/// GLS verification of a K x L draft matrix.
pub fn verify_and_emit(
    target: &TabularLM,
    drafts: &[Vec<usize>],
    context: &[usize],
    races: &[RaceMatrix],
    mode: DecodeMode,
) -> Result<DecodeTrace> {
    let n = target.alphabet_size();
    let l = check_drafts(drafts, n)?;
    let k = drafts.len();
    check_races(races, l + 1, k, n)?;
    let mut hist = context.to_vec();
    let mut active: Vec<usize> = (0..k).collect();
    let mut active_sets = vec![active.clone()];
    let mut accepted = Vec::with_capacity(l);
    for (j, step) in races.iter().enumerate().take(l + 1) {
        let q = target.conditional(&hist)?;
        let y = match mode {
            DecodeMode::Conditional => target_argmin(q.probs(), step, active.iter().copied()),
            DecodeMode::Strong => target_argmin(q.probs(), step, 0..k),
        }
        .ok_or(Error::EmptySupport)?;
        hist.push(y);
        if j == l {
            break;
        }
        active.retain(|&r| drafts[r][j] == y);
        accepted.push(!active.is_empty());
        active_sets.push(active.clone());
        if active.is_empty() {
            break;
        }
    }
    let output = hist.split_off(context.len());
    Ok(DecodeTrace {
        context: context.to_vec(),
        drafts: drafts.to_vec(),
        tau: output.len(),
        output,
        active_sets,
        accepted,
    })
}

/// Token sequence `Y_1..Y_{L+1}` of the strong mode with every draft kept
/// active; strong-mode outputs are prefixes of it whatever the drafts are.
pub fn reference_sequence(
    target: &TabularLM,
    context: &[usize],
    races: &[RaceMatrix],
) -> Result<Vec<usize>> {
    let first = races.first().ok_or(Error::EmptyInput)?;
    check_races(races, races.len(), first.rows(), target.alphabet_size())?;
    let mut hist = context.to_vec();
    for step in races {
        let q = target.conditional(&hist)?;
        let y = target_argmin(q.probs(), step, 0..step.rows()).ok_or(Error::EmptySupport)?;
        hist.push(y);
    }
    Ok(hist.split_off(context.len()))
}

/// Recursive rejection verification: at each step the active drafts are
/// examined in order against the residual of the target conditional; the
/// first acceptance fixes the token and keeps every active draft that
/// proposed it. If all are rejected the token is drawn from the residual and
/// the round ends. A bonus token follows a fully accepted draft.
pub fn verify_rejection(
    target: &TabularLM,
    drafters: &[TabularLM],
    drafts: &[Vec<usize>],
    context: &[usize],
    seed: SeedContext,
) -> Result<DecodeTrace> {
    let n = target.alphabet_size();
    let l = check_drafts(drafts, n)?;
    let k = drafts.len();
    check_drafters(drafters, k, n)?;
    let mut hist = context.to_vec();
    let mut active: Vec<usize> = (0..k).collect();
    let mut active_sets = vec![active.clone()];
    let mut accepted = Vec::with_capacity(l);
    for j in 0..l {
        let q = target.conditional(&hist)?;
        let mut residual = q.probs().to_vec();
        let mut chosen = None;
        for &r in &active {
            let x = drafts[r][j];
            let p = drafter(drafters, r).conditional(&hist)?;
            let u = derive_uniform(seed.tag(ACCEPT_STREAM).tag(j as u64).tag(r as u64));
            if u < (residual[x] / p.prob(x)).min(1.0) {
                chosen = Some(x);
                break;
            }
            if let Some(next) = crate::coupling::rejection_residual(&residual, p.probs()) {
                residual = next;
            }
        }
        let y = match chosen {
            Some(x) => x,
            None => sample_weights(seed.tag(RESIDUAL_STREAM).tag(j as u64), &residual)
                .ok_or(Error::EmptySupport)?,
        };
        hist.push(y);
        if chosen.is_some() {
            active.retain(|&r| drafts[r][j] == y);
        } else {
            active.clear();
        }
        accepted.push(!active.is_empty());
        active_sets.push(active.clone());
        if active.is_empty() {
            break;
        }
    }
    if !active.is_empty() {
        let q = target.conditional(&hist)?;
        let y = sample_weights(seed.tag(RESIDUAL_STREAM).tag(l as u64), q.probs())
            .ok_or(Error::EmptySupport)?;
        hist.push(y);
    }
    let output = hist.split_off(context.len());
    Ok(DecodeTrace {
        context: context.to_vec(),
        drafts: drafts.to_vec(),
        tau: output.len(),
        output,
        active_sets,
        accepted,
    })
}

/// Draft generation and verification under one seed.
pub fn run_decode_episode(
    cfg: &DecodeConfig,
    target: &TabularLM,
    drafters: &[TabularLM],
    context: &[usize],
    seed: SeedContext,
) -> Result<DecodeTrace> {
    cfg.validate()?;
    let n = target.alphabet_size();
    let races = episode_races(seed, cfg.l, cfg.k, n);
    let drafts = draft_generate(drafters, cfg.k, context, cfg.l, &races)?;
    match cfg.verifier {
        Verifier::Gls => verify_and_emit(target, &drafts, context, &races, cfg.mode),
        Verifier::RecursiveRejection => verify_rejection(target, drafters, &drafts, context, seed),
    }
}

/// Tokens produced by repeated rounds until at least `length` are emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Exactly `length` tokens.
    pub tokens: Vec<usize>,
    /// Rounds (target-model calls) used.
    pub rounds: usize,
}

/// Runs rounds with seeds `seed.tag(r)`, each continuing from the context
/// extended by everything emitted so far.
pub fn generate(
    cfg: &DecodeConfig,
    target: &TabularLM,
    drafters: &[TabularLM],
    context: &[usize],
    length: usize,
    seed: SeedContext,
) -> Result<Generation> {
    let mut hist = context.to_vec();
    let mut rounds = 0;
    while hist.len() < context.len() + length {
        let trace = run_decode_episode(cfg, target, drafters, &hist, seed.tag(rounds as u64))?;
        hist.extend_from_slice(&trace.output);
        rounds += 1;
    }
    hist.truncate(context.len() + length);
    Ok(Generation {
        tokens: hist.split_off(context.len()),
        rounds,
    })
}

/// Mean of `tau` over traces.
pub fn block_efficiency(traces: &[DecodeTrace]) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(traces.iter().map(|t| t.tau as f64).sum::<f64>() / traces.len() as f64)
}

/// Probability of every sequence of `length` tokens after `context`.
pub fn exact_sequence_law(
    lm: &TabularLM,
    context: &[usize],
    length: usize,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    let count = (lm.alphabet_size() as u128)
        .checked_pow(length as u32)
        .unwrap_or(u128::MAX);
    if count > MAX_ENUMERATION {
        return Err(Error::TooLarge(count));
    }
    let mut law = BTreeMap::new();
    let mut frontier = vec![(Vec::new(), 1.0)];
    for _ in 0..length {
        let mut next = Vec::with_capacity(frontier.len() * lm.alphabet_size());
        for (seq, prob) in frontier {
            let mut hist = context.to_vec();
            hist.extend_from_slice(&seq);
            let row = lm.conditional(&hist)?;
            for (t, &pt) in row.probs().iter().enumerate() {
                let mut s = seq.clone();
                s.push(t);
                next.push((s, prob * pt));
            }
        }
        frontier = next;
    }
    law.extend(frontier);
    Ok(law)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvarianceVerdict {
    Holds,
    Violated,
    /// The property makes no claim for these inputs.
    NotApplicable,
}

/// Draft tokens together with the models claimed to have produced them.
#[derive(Debug, Clone, Copy)]
pub struct LabeledDrafts<'a> {
    pub tokens: &'a [Vec<usize>],
    pub drafters: &'a [TabularLM],
}

/// Checks drafter invariance for one seed.
///
/// Conditional mode: equal token matrices must give identical outputs
/// whatever drafters they are attributed to; unequal matrices are not
/// covered. Strong mode: both outputs must be prefixes of the reference
/// sequence of the seed.
pub fn invariance_check(
    target: &TabularLM,
    context: &[usize],
    seed: SeedContext,
    a: LabeledDrafts<'_>,
    b: LabeledDrafts<'_>,
    mode: DecodeMode,
    verifier: Verifier,
) -> Result<InvarianceVerdict> {
    let n = target.alphabet_size();
    let l = check_drafts(a.tokens, n)?;
    if check_drafts(b.tokens, n)? != l || a.tokens.len() != b.tokens.len() {
        return Err(Error::ShapeMismatch("draft matrices differ in shape".into()));
    }
    let k = a.tokens.len();
    let cfg = DecodeConfig {
        k,
        l,
        mode,
        verifier,
    };
    cfg.validate()?;
    let races = episode_races(seed, l, k, n);
    let verify = |d: LabeledDrafts<'_>| match verifier {
        Verifier::Gls => verify_and_emit(target, d.tokens, context, &races, mode),
        Verifier::RecursiveRejection => verify_rejection(target, d.drafters, d.tokens, context, seed),
    };
    match mode {
        DecodeMode::Conditional => {
            if a.tokens != b.tokens {
                return Ok(InvarianceVerdict::NotApplicable);
            }
            let (ya, yb) = (verify(a)?, verify(b)?);
            Ok(if ya.output == yb.output {
                InvarianceVerdict::Holds
            } else {
                InvarianceVerdict::Violated
            })
        }
        DecodeMode::Strong => {
            let reference = reference_sequence(target, context, &races)?;
            let (ya, yb) = (verify(a)?, verify(b)?);
            let ok = reference.starts_with(&ya.output) && reference.starts_with(&yb.output);
            Ok(if ok {
                InvarianceVerdict::Holds
            } else {
                InvarianceVerdict::Violated
            })
        }
    }
}
