//! Fixed points and their stability, real-time and (ε, d) convergence checks,
//! and algebraicity probes.

mod algebraic;
mod fixed;
mod realtime;

pub use algebraic::{dense_encode, minpoly_probe, IntPoly};
pub use fixed::{
    certify_isolation, classify, find_fixed_points, fit_decay, newton, spectral_abscissa, DecayFit, FixedPointOptions,
    FixedPointReport, Isolation, Stability, FIXED_POINT_TOL, STABILITY_MARGIN,
};
pub use realtime::{
    check_epsd, check_realtime, check_unambiguous, universal_d, Assignment, EpsdVerdict, RealTimeVerdict,
    UnambiguousVerdict, REALTIME_T_MAX,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}
