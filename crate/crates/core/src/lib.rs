//! Vector-valued Minkowski valuations on convex functions: density
//! transforms, Hessian and mixed Monge–Ampère integrals, Steiner
//! extraction, Kubota averages and verification suites.

// Quadrature tables carry more digits than f64 holds, and `!(x > 0.0)`
// deliberately rejects NaN alongside non-positive values.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod functions;
pub mod grassmann;
pub mod linalg;
pub mod measure_engine;
pub mod quad;
pub mod transforms;
pub mod verification;

pub use bodies::{b4_area_integral, EllipsoidBody};
pub use grassmann::{kubota_dual, kubota_vector, sample_rotation};
pub use functions::{ConvexFn, Regularity, ScalarPiece};
pub use linalg::SymMatrix;
pub use measure_engine::{
    b1_hessian_integral, b2_maj_integral, b2_vb_integral, dual_pushforward, steiner_extract, ws_semianalytic, Backend,
    MeasureError, MinkVector, QuadSpec,
};
pub use transforms::DensityFn;
pub use verification::{run_suite, SuiteReport, SUITES};
