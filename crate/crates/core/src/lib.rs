//! Multiscale toolkit for the cardiac tridomain model with gap junctions.
//!
//! The crate covers the periodic reference cell and its tilings, Q1 finite
//! elements with periodic identification, the corrector problems behind the
//! homogenized conductivities, the microscopic and macroscopic time steppers,
//! and discrete unfolding operators used to compare the two scales.

// Index loops mirror the element formulas; `!(a < b)` rejects NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cell_problems;
pub mod commands;
pub mod config;
mod coupled;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod ionic;
pub mod macro_solver;
pub mod micro_solver;
pub mod output;
pub mod scenario;
pub mod unfolding;

pub use error::{GeometryError, RunError, SolveError, StepError, TensorError, UnfoldError};
pub use fem::{CoefficientTensor, Field, SparseOperator, Sym2};
pub use geometry::{CellGeometrySpec, InterfaceLabel, LabeledGrid, Layout, Phase};
