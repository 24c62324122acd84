//! Quadrature, interpolation and special functions shared by all modules.

pub mod pchip;
pub mod quad;
pub mod special;

pub use pchip::Pchip;
pub use quad::{
    gauss_legendre, integrate, integrate_lower_tail, integrate_raw, integrate_upper_tail, QuadResult, QuadTol,
};
pub use special::{bose, digamma, fermi};
