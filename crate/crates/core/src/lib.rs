//! Numerical checks for geodesically equivalent pseudo-Riemannian metrics.
//!
//! Metrics are chart-local fields ([`metric::MetricField`]) that return
//! their components with analytic first and second derivatives. On top of
//! them the crate evaluates, point by point:
//!
//! - connection, curvature and covariant derivatives ([`geometry`]);
//! - the Sinjukov tensor `a`, `lambda`, the equivalence-equation residual,
//!   the adjugate family `S_t` and the integrals `I_t` ([`equivalence`]);
//! - geodesic flow and conservation of `I_t` ([`flow`]);
//! - the curvature integrability condition and related residuals
//!   ([`integrability`]);
//! - curvature as an operator on `so(g)` and the sectional-operator
//!   identities ([`lie`]).
//!
//! Every check returns a residual; deciding pass or fail is left to the
//! caller.

pub mod equivalence;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod integrability;
pub mod jet;
pub mod lie;
pub mod linalg;
pub mod metric;
pub mod tensor;

pub use equivalence::{EquivalencePair, SinjukovPoint};
pub use error::{Error, Result};
pub use flow::{PhaseState, Trajectory};
pub use geometry::{ConnectionPoint, CurvatureConvention, CurvaturePoint, PointGeometry};
pub use jet::{MatrixJet, ScalarJet};
pub use lie::{SectionalData, SectionalOperator, SkewSpace};
pub use linalg::Mat;
pub use metric::{MetricField, SharedMetric};
pub use tensor::{PointTensor, Variance};
