//! Counter-based shared randomness.
//!
//! Every variate is a pure function of a master seed and a path of integer
//! tags (experiment, trial, step, row, symbol, ...). Two parties that agree on
//! the master seed and the tag layout derive bit-identical race variables
//! without ever exchanging them, and trials can run on any worker in any
//! order.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const TAG_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const FINAL_SALT: u64 = 0x8cb9_2ba7_2f3d_8dd7;

#[inline(always)]
fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A position in the tag tree below a master seed.
///
/// `SeedContext::new(seed).tag(a).tag(b)` names the stream `(a, b)`. The
/// struct is `Copy` and holds only the absorbed hash state, so deriving child
/// contexts in inner loops is free of allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedContext {
    master_seed: u64,
    state: u64,
    depth: u32,
}

impl SeedContext {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            state: fmix(fmix(master_seed ^ GOLDEN)),
            depth: 0,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Number of tags absorbed so far.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Child context for one more stream tag.
    #[inline(always)]
    #[must_use]
    pub fn tag(self, tag: u64) -> Self {
        let salted = fmix(tag.wrapping_add(TAG_SALT).wrapping_mul(GOLDEN));
        Self {
            master_seed: self.master_seed,
            state: fmix(self.state.rotate_left(17) ^ salted),
            depth: self.depth + 1,
        }
    }

    /// Child context for a sequence of tags.
    #[must_use]
    pub fn tags(self, tags: &[u64]) -> Self {
        tags.iter().fold(self, |ctx, &t| ctx.tag(t))
    }

    /// The raw 64-bit word for this context.
    #[inline(always)]
    pub fn word(&self) -> u64 {
        fmix(self.state ^ FINAL_SALT)
    }
}

/// Maps a 64-bit word into the open interval (0, 1).
///
/// Uses the top 52 bits as `(k + 1/2) / 2^52`, so the result lies in
/// `[2^-53, 1 - 2^-53]` and every value is exactly representable.
#[inline(always)]
pub fn word_to_open01(word: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
    ((word >> 12) as f64 + 0.5) * SCALE
}

/// Uniform variate in (0, 1) for `ctx`.
#[inline(always)]
pub fn derive_uniform(ctx: SeedContext) -> f64 {
    word_to_open01(ctx.word())
}

/// Exp(1) variate `-ln U` for `ctx`; always finite and strictly positive.
#[inline(always)]
pub fn exp_variate(ctx: SeedContext) -> f64 {
    -derive_uniform(ctx).ln()
}

/// Uniform integer in `0..n` (n >= 1).
#[inline]
pub fn uniform_index(ctx: SeedContext, n: usize) -> usize {
    debug_assert!(n >= 1);
    let idx = (derive_uniform(ctx) * n as f64) as usize;
    idx.min(n - 1)
}

/// Standard normal variate via Box-Muller on two child streams.
#[inline]
pub fn standard_normal(ctx: SeedContext) -> f64 {
    let u1 = derive_uniform(ctx.tag(0));
    let u2 = derive_uniform(ctx.tag(1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Draws an index from unnormalized nonnegative weights by inverse CDF.
///
/// Returns `None` when the weights have no positive mass.
pub fn sample_weights(ctx: SeedContext, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = derive_uniform(ctx) * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last_positive
}
