//! Lossy compression with side information at one or more decoders.

pub mod discrete;
pub mod gaussian;
pub mod sweep;

pub use discrete::*;
pub use gaussian::{
    draw_source, encode_decode_continuous, gaussian_p_w_given_t, importance_weights,
    log_race_argmin, mmse_reconstruct, run_continuous_trial, CodingOutcome, GaussianWzConfig,
    ImportanceList, ImportanceWeights, LogNormalPdf, WeightSide, MIN_SQUARED_ERROR,
};
pub use sweep::{run_rd_sweep, RdCell, RdSweepConfig, RdSweepResult};

/// How the decoders share the race matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Encoder races on all K rows; decoder `k` races on row `k`.
    Gls,
    /// Encoder and every decoder race on a single shared row.
    SharedRow,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gls => "gls",
            Scheme::SharedRow => "shared_row",
        }
    }
}
