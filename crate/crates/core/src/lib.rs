//! Pseudo-unitary `U(c,d)` and hermitian-symplectic `HSp(2d)` matrix groups,
//! their cocycles, and the averaging identities for sums of the top `d`
//! Lyapunov exponents over the rotation family `U_θ` / `R_θ`.
//!
//! Module layout, bottom-up:
//!
//! * [`numkernel`] dense complex linear algebra
//! * [`group`] group construction, certification, the hyperbolic decomposition and `N_r`
//! * [`moebius`] the classical domain, the Möbius action and fixed points of `D(z)`
//! * [`cocycle`] base dynamics, Schrödinger strips and Lyapunov estimation
//! * [`hab`] quadrature of the averaging identities and report assembly

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod error;
pub mod group;
pub mod hab;
pub mod json;
pub mod moebius;
pub mod numkernel;
pub mod rng;

pub use error::{Error, Result};
pub use numkernel::{ComplexMatrix, C64};
