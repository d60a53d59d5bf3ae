//! Numerical building blocks shared by the estimator modules.

pub mod interp;
pub mod jet;
pub mod quadrature;
pub mod regression;
pub mod roots;
pub mod summation;
