//! The cohomological equation `v∘T − λv = u`: Neumann-series solver, the
//! depth ladder `𝓛ⁿuₙ = u₀`, and numerical checks of its structure.

mod checks;
mod ladder;
mod solver;
mod transport;

use thiserror::Error;

pub use checks::{alternating_coefficient_check, depth_bound, horseshoe_variation_check, uniqueness_check};
pub use ladder::{ladder, Depth, LadderConfig, LadderResult};
pub use solver::{apply_l, iterated_l_at, neumann_solve, SolveReport, SolverConfig, Verdict};
pub use transport::{transport_ladder, TransportedLadder};

use crate::basis::BasisError;
use crate::observables::ObservableError;
use crate::transfer_operator::TransferError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohomologyError {
    #[error("observable has hm-mean {mean:e}, so it cannot be a coboundary")]
    MeanNotZero { mean: f64 },
    #[error("Neumann tail {:e} still above tolerance after {} terms", .report.tail_norm, .report.terms_used)]
    NoConvergence { report: Box<SolveReport> },
    #[error("λ must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("observable is constant relative to the truncated basis")]
    NoObstruction,
    #[error("coefficient table needs level {needed}, has {available}")]
    InsufficientLevels { needed: usize, available: usize },
    #[error("map has no horseshoe witness")]
    MissingWitness,
    #[error("semiconjugacy fails at {failures} of {total} sample points")]
    ConjugacyViolation { failures: usize, total: usize },
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

impl CohomologyError {
    pub fn code(&self) -> &'static str {
        match self {
            CohomologyError::MeanNotZero { .. } => "cohomology::MeanNotZero",
            CohomologyError::NoConvergence { .. } => "cohomology::NoConvergence",
            CohomologyError::InvalidLambda(_) => "cohomology::InvalidLambda",
            CohomologyError::NoObstruction => "cohomology::NoObstruction",
            CohomologyError::InsufficientLevels { .. } => "cohomology::InsufficientLevels",
            CohomologyError::MissingWitness => "cohomology::MissingWitness",
            CohomologyError::ConjugacyViolation { .. } => "cohomology::ConjugacyViolation",
            CohomologyError::Transfer(e) => e.code(),
            CohomologyError::Observable(e) => e.code(),
            CohomologyError::Basis(e) => e.code(),
        }
    }
}
