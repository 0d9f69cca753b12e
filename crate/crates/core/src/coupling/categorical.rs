use crate::error::{Error, Result};
use crate::rng::{exp_variate, sample_weights, SeedContext};

/// A probability vector over the alphabet `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    /// Normalizes nonnegative raw masses into a distribution.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        let mut total = 0.0;
        for (index, &value) in raw.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteMass { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
            total += value;
        }
        if !(total > 0.0) {
            return Err(Error::ZeroTotalMass);
        }
        let probs = raw.into_iter().map(|v| v / total).collect();
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "alphabet must be nonempty");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass outside alphabet");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    /// Flat-Dirichlet draw: normalized Exp(1) variates from `ctx`.
    pub fn random(ctx: SeedContext, n: usize) -> Self {
        let raw = (0..n as u64).map(|i| exp_variate(ctx.tag(i))).collect();
        Self::new(raw).expect("exponential variates are positive")
    }

    /// Dirichlet-like draw with mass concentrated on few symbols: each
    /// Exp(1) variate is raised to `sharpness` before normalizing.
    pub fn random_peaked(ctx: SeedContext, n: usize, sharpness: f64) -> Self {
        let raw = (0..n as u64)
            .map(|i| exp_variate(ctx.tag(i)).powf(sharpness))
            .collect();
        Self::new(raw).expect("exponential variates are positive")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Keeps the `m` most probable symbols (lowest index wins ties) and
    /// renormalizes.
    pub fn top_m(&self, m: usize) -> Self {
        if m >= self.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        let mut raw = vec![0.0; self.len()];
        for &i in order.iter().take(m.max(1)) {
            raw[i] = self.probs[i];
        }
        Self::new(raw).expect("top entries keep positive mass")
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, ctx: SeedContext) -> usize {
        sample_weights(ctx, &self.probs).expect("categorical has positive mass")
    }

    pub(crate) fn check_same_alphabet(&self, other: &Categorical) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::AlphabetMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }
}

/// Half the L1 distance between `p` and `q`.
pub fn tv_distance(p: &Categorical, q: &Categorical) -> Result<f64> {
    p.check_same_alphabet(q)?;
    Ok(tv_distance_slices(p.probs(), q.probs()))
}

pub(crate) fn tv_distance_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
