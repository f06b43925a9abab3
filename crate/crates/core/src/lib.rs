//! Orthogonal function systems grown from a single seed function.
//!
//! Starting from a seed `f1` that does not vanish on a real interval, each new
//! function is obtained by prescribing the Wronskian of the extended family
//! (`W(f1..fn, f_{n+1}) = h_n W(f1..fn)`), solving the resulting linear ODE by
//! variation of parameters, and projecting out the components along the
//! earlier functions. Linear independence follows from the nonvanishing
//! Wronskian; orthogonality from the projection.
//!
//! Module map:
//! - [`expr`]: closed-form expressions with exact derivative jets
//! - [`jet`]: truncated Taylor arithmetic at a point
//! - [`wronskian`]: jet-valued Wronskians and variation-of-parameters integrands
//! - [`analysis`]: adaptive quadrature, weighted inner products, cumulative integrals
//! - [`orthogonalize`]: the construction itself plus the Gram-Schmidt baseline
//! - [`validate`]: independent checks of orthogonality, Wronskian identities and independence

pub mod analysis;
pub mod expr;
pub mod jet;
pub mod orthogonalize;
pub mod validate;
pub mod wronskian;

pub use analysis::{CumulativeIntegral, InnerProduct, QuadratureError};
pub use expr::{DomainError, Expression, ParseError};
pub use jet::{Jet, JetError};
pub use orthogonalize::{build_system, gram_schmidt, normalize_system, BuildConfig, OrthoSystem};
pub use validate::{validate_system, ValidationReport, Thresholds};
pub use wronskian::{MapKind, SmoothMap, WronskiFrame};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("Wronskian vanishes at x = {x}")]
    SingularWronskian { x: f64 },
    #[error("function has zero norm (squared norm {norm_sq:e})")]
    ZeroNorm { norm_sq: f64 },
    #[error("input {index} is numerically dependent on its predecessors")]
    DependentInput { index: usize },
    #[error("seed function is required to be nonzero on the interval, but vanishes near x = {x}")]
    SeedVanishes { x: f64 },
    #[error("weight h{index} is required to have no zeros on the interval, but vanishes near x = {x}")]
    WeightVanishes { index: usize, x: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: usize) -> Error {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
