//! Recovery of the initial temperature in the one-dimensional one-phase
//! Stefan problem from the trajectory of the melting front.
//!
//! The pipeline is
//! [`problems`] (front data) → [`assembly`] (dense first-kind system built
//! from the Neumann heat kernel) → [`regularize`] (iterated Tikhonov or
//! Landweber). [`direct_solver`] integrates the forward free-boundary
//! problem and [`experiments`] wires everything into benchmark tables and
//! stability sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod direct_solver;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod linalg;
pub mod problems;
pub mod quadrature;
pub mod regularize;

pub use error::{Result, StefanError};
