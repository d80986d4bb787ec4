//! Constrained curve shortening flow for triods of horizontal curves in the
//! first Heisenberg group.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod geodesics;
pub mod heis;
pub mod linalg;
pub mod output;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};
