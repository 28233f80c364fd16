#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Agent-based speculative price pump with crash-hazard metrics, plus the
//! classical and speculative Ponzi ODE models used to describe its
//! investment cycle.

pub mod config;
pub mod cycle;
pub mod engine;
pub mod error;
pub mod market;
pub mod output;
pub mod ponzi;
pub mod risk;

pub use error::{Error, Result};
