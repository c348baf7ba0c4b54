//! Exact analysis of the nonsmooth landscape of `f(x, y) = ‖x yᵀ − M‖₁` for a
//! rank-one target `M = u vᵀ`.

pub mod classify;
pub mod criticality;
pub mod error;
pub mod instance;
pub mod landscape;
pub mod lp;
pub mod rational;
pub mod subdiff;

pub use error::{AnalysisError, CoreError, LpError, RationalError};
pub use instance::{eval_f, factor_rank_one, residual, Instance, InstanceFile, Matrix, Point};
pub use rational::Rational;
pub use classify::{classify_point, descent_direction, verify_descent, Classification, DescentPlan, PointKind};
pub use criticality::{is_critical_closed_form, is_critical_directional, is_critical_lp, CriticalityVerdict};
