//! Block-coordinate primal-dual gradient methods for single-ratio
//! fractional programs `min (f(x) + h(x)) / g(x)`.
//!
//! The solver works on the lifted function `Q(x, y) = (f(x) + h(x)) / (<x, y> - g*(y))`
//! and alternates a proximal step in the dual variable with proximal
//! gradient steps on primal blocks, accepted by a nonmonotone line search.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod criticality;
pub mod engine;
pub mod ext;
pub mod instance;
pub mod linalg;
pub mod models;
pub mod problem;
pub mod prox;

pub use criticality::{dist_subdiff_q, fixed_point_residual, rel_err, StoppingRule};
pub use engine::{solve, Schedule, SolveError, SolveReport, SolverConfig, Termination};
pub use ext::ExtReal;
pub use instance::{init_point, make_l1l2_instance, make_l1sk_instance, Instance, Model};
pub use problem::{BlockPartition, Denominator, FractionalProblem, SeparableTerm, SmoothTerm};
