//! Explicit steady compressible Euler flows on asymmetric toroidal domains.
//!
//! The flows are built from coordinate charts `x(Ψ, Θ, ζ)` whose induced
//! metric satisfies a pair of first-order identities; the velocity is then
//! `u = −∂x/∂Θ` and the pressure is the coordinate `Ψ` itself. This crate
//! provides the charts, exact second-order derivatives through jet
//! arithmetic, the Clebsch potentials, the thermodynamic bookkeeping and a
//! residual suite that turns each structural identity into a quantitative
//! pass/fail check.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod charts;
pub mod clebsch;
pub mod diffgeo;
pub mod jet;
pub mod physics;
pub mod quadrature;
pub mod sampling;
pub mod stats;
pub mod trig;
pub mod verify;

pub use charts::{ChartFamily, ChartKind, DomainReport, DomainSpec};
pub use diffgeo::{Coords, Jet2, MetricAtPoint};
pub use stats::ResidualReport;
pub use trig::{DzGPair, FSpec, TrigPoly};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid chart parameters: {0}")]
    InvalidChart(String),
    #[error("inverse map did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular metric: det g = {det:e}")]
    SingularMetric { det: f64 },
    #[error("singular Jacobian: det = {det:e}")]
    SingularJacobian { det: f64 },
    #[error("Θ-dependence violation in {what}: spread {spread:e}")]
    ThetaDependence { what: &'static str, spread: f64 },
    #[error("quadrature did not reach tolerance: estimated error {error:e}")]
    Quadrature { error: f64 },
    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),
    #[error("value {value:e} is outside the range of the enthalpy function")]
    Range { value: f64 },
    #[error("critical point of Ψ: min |∇Ψ| = {min_grad:e}")]
    CriticalPoint { min_grad: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
