//! Dense complex linear algebra: Hermitian eigensolver, spectral calculus,
//! Schatten norms and adaptive quadrature.

pub mod dense;
pub mod eig;
pub mod func;
pub mod linsolve;
pub mod norms;
pub mod qr;
pub mod quad;

pub use dense::{ComplexDense, C64};
pub use eig::{herm_eig, with_eig_tolerance, HermitianEigenSystem};
pub use func::{matrix_fn, pinv, psd_power, ScalarFunction, CLIP_TOL, RANK_TOL};
pub use norms::{hs_inner, op_norm, schatten_norm, trace_norm, Schatten};
pub use quad::{integrate_adaptive, QuadResult};
