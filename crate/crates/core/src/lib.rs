//! Three-valued interval constraint solving for robust reachability of
//! discrete-time systems, with cached approximations of function-inversion
//! subproblems.

pub mod approxset;
pub mod constraint;
pub mod expr;
pub mod interval;
pub mod solver;
pub mod system;

pub use approxset::ApproximateSet;
pub use constraint::{CacheId, Constraint, Truth};
pub use expr::{Expr, VecExpr};
pub use interval::{Interval, IntervalBox};
pub use solver::{Mode, Paving, SolveStats, Solver, SolverConfig};
pub use system::{demo_system, DiscreteSystem, Stages};
