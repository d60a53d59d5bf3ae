//! Density deconvolution for measurement-error laws whose characteristic
//! function vanishes on the real line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod error_model;
pub mod estimator;
pub mod kernel;
pub mod numerics;
pub mod reconstruction;
pub mod simulation;
pub mod zero_set;

pub use error::{Error, Result};
pub use error_model::{DiscreteOptions, ErrorModel, Family, ZeroDatum};
