#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cgo;
pub mod cli;
pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod numerics;
pub mod phase;
pub mod pipeline;
pub mod radon;
pub mod report;

pub use error::{Error, Result};
pub use numerics::C64;
