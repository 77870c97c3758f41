//! Bit-accurate model of a shift-and-add sequential multiplier whose carry
//! chain is split at bit `t`, with exhaustive, sampled and analytic error
//! characterisation.
//!
//! The split adder feeds the carry out of its low `t` bits into the high
//! part one cycle late. [`multiplier`] holds the datapath, [`metrics`] and
//! [`montecarlo`] measure its errors, [`analytic`] predicts them.

pub mod analytic;
pub mod distribution;
pub mod error;
pub mod imagedemo;
pub mod metrics;
pub mod montecarlo;
pub mod multiplier;
pub mod report;
pub mod sweep;
pub mod trace;
