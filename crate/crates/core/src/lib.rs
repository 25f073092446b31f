//! Convex relaxations of AC optimal power flow.
//!
//! The crate builds the classical QC relaxation, the rotated QC (RQC)
//! relaxation and the linear rotated QC (LRQC) relaxation from MATPOWER
//! case files, solves them through a [`relax::SolverAdapter`] and reports
//! lower bounds together with optimality gaps against reference AC costs.

pub mod error;
pub mod netmodel;
pub mod prodenv;
pub mod relax;
pub mod rotation;
pub mod trigenv;

pub use error::{Error, Result};
