use crate::error::{Error, Result};
use crate::rng::{exp_variate, SeedContext};

/// K rows of N shared Exp(1) race variables; row `k`, column `i` holds
/// the variate of draft (or decoder) `k` for symbol `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceMatrix {
    rows: usize,
    cols: usize,
    s: Vec<f64>,
}

impl RaceMatrix {
    /// Builds a matrix from explicit rows; every entry must be finite and positive.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 {
            return Err(Error::ShapeMismatch("race matrix must be nonempty".into()));
        }
        let mut s = Vec::with_capacity(k * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::ShapeMismatch("ragged race rows".into()));
            }
            if let Some(bad) = row.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidParameter(format!("race entry {bad} not positive")));
            }
            s.extend(row);
        }
        Ok(Self { rows: k, cols: n, s })
    }

    /// Zero-initialized buffer, to be filled with [`RaceMatrix::fill`].
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "race matrix needs K >= 1 and N >= 1");
        Self {
            rows,
            cols,
            s: vec![0.0; rows * cols],
        }
    }

    /// Overwrites every entry with `exp_variate(seed.tag(k).tag(i))`.
    pub fn fill(&mut self, seed: SeedContext) {
        for (k, row) in self.s.chunks_exact_mut(self.cols).enumerate() {
            let row_ctx = seed.tag(k as u64);
            for (i, v) in row.iter_mut().enumerate() {
                *v = exp_variate(row_ctx.tag(i as u64));
            }
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.s[k * self.cols..(k + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.s[k * self.cols + i]
    }

    pub fn entries(&self) -> &[f64] {
        &self.s
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            s: self.s.iter().map(|v| v * c).collect(),
        }
    }

    /// Row `k` of the result is row `perm[k]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows);
        let mut s = Vec::with_capacity(self.s.len());
        for &src in perm {
            s.extend_from_slice(self.row(src));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            s,
        }
    }

    /// The first `k` rows.
    pub fn truncated(&self, k: usize) -> Self {
        assert!(k >= 1 && k <= self.rows);
        Self {
            rows: k,
            cols: self.cols,
            s: self.s[..k * self.cols].to_vec(),
        }
    }
}

/// Race matrix whose entry `(k, i)` is `exp_variate(seed.tag(k).tag(i))`.
///
/// # Panics
/// If `k == 0` or `n == 0`.
pub fn build_races(seed: SeedContext, k: usize, n: usize) -> RaceMatrix {
    let mut m = RaceMatrix::zeros(k, n);
    m.fill(seed);
    m
}
