//! QC, rotated QC and lifted rotated QC relaxations as solver-independent
//! conic models, with a Clarabel backend.

mod builder;
mod model;
mod solver;

pub use builder::{
    build_lrqc, build_qc, build_rqc, flow_coefficients, solve_relaxation, BranchVars, BuildOptions, FlowCoefficients,
    LiftedFrame, ModelIndex, RelaxModel, RelaxSolution, RelaxationKind, ThetaCoupling,
};
pub use model::{ConicModel, LinExpr, LinearConstraint, RowSense, SocConstraint, VarId, Variable};
pub use solver::{membership_feasibility, AdapterOutcome, ClarabelAdapter, SolveStatus, SolverAdapter};
