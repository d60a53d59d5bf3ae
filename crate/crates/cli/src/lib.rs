//! Configuration parsing and subcommands of the `deconv` tool.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod commands;
pub mod config;
