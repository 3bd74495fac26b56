//! Numerical building blocks shared by the probabilistic modules.

pub mod exp_poly;
pub mod inversion;
pub mod nnls;
pub mod poly;
pub mod quad;
pub mod rational;
pub mod tail;

pub type C64 = num_complex::Complex64;
