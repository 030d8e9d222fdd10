//! Model assembly, solvers and coordination strategies.

pub mod backend;
pub mod build;
pub mod config;
pub mod flows;
pub mod lp;
pub mod mip;
pub mod model;
pub mod mps;
pub mod solution;
pub mod strategy;
pub mod validate;

pub use backend::Backend;
pub use build::{build_model, queue_baseline_expr, BuildOptions, BuiltModel, RPolicy, VarLayout};
pub use config::{ModelConfig, QueueParameters, RegPrice, ShiftingMode, SignalModel, SignalModels, Strategy};
pub use model::{Constraint, Sense, StandardFormModel, Variable};
pub use solution::{CostBreakdown, Solution, SolveStatus};
pub use strategy::{run_strategy, SolveContext};
pub use validate::{validate_solution, ValidationReport, FEASIBILITY_TOL};
