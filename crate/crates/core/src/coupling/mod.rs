//! Categorical distributions, shared race matrices and the coupling rules
//! built on them.

mod baselines;
mod categorical;
mod gls;
mod races;

pub use baselines::{
    independent_accept_profile, independent_sample, recursive_rejection_sample,
    recursive_rejection_trace, rejection_accept_profile, rejection_residual, RejectionTrace,
};
pub use categorical::{tv_distance, Categorical};
pub(crate) use categorical::tv_distance_slices;
pub use gls::{
    gls_accept_profile, gls_sample, gls_sample_heterogeneous, race_argmin, target_argmin,
    CoupleOutcome,
};
pub use races::{build_races, RaceMatrix};
