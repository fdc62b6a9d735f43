mod build;
mod fractional;
mod linearize;
mod solve;
mod decomp;
mod driver;
mod lp;
mod program;

pub use build::{build_multilinear_program, flatten_objective, BuildOutput, FlattenedObjective, MlpError};
pub use driver::{join_ranges, rl_infer, ArRanges, RlOptions};
pub use fractional::{build_fractional_program, solve_fractional, FractionalProgram, FractionalReport};
pub use decomp::{DecompositionPlan, PlanFactor, PlanKind, PlanSource, PlanStep, RangeMap, StepEntry};
pub use linearize::{linearize, LinearRelaxation};
pub use solve::{rl_solve, BoundReport, SolveLimits};
pub use lp::{max_violation, solve_lp, LpProblem, LpRow, LpSolution, LpStatus, LP_TOL};
pub use program::{MpConstraint, MpVar, MultilinearProgram, PolyExpr, Sense, Term, VarKind};
