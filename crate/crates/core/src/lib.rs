//! Quantum f-divergences, recovery maps and strengthened data-processing
//! inequalities on finite-dimensional matrix algebras.
//!
//! Layers, bottom up:
//!
//! - [`matcore`]: dense complex matrices, Hermitian eigensolver, functional
//!   calculus, norms, quadrature.
//! - [`states`]: density matrices, regularization, the relative modular
//!   operator `Gamma = sigma^{-1/2} rho sigma^{-1/2}`.
//! - [`channels`]: Kraus channels, Stinespring isometries, conditional
//!   expectations, the contraction `U`.
//! - [`divergences`]: standard and maximal f-divergences, Belavkin-Staszewski
//!   entropy, Umegaki relative entropy.
//! - [`recovery`]: Petz and BS recovery maps, equality residuals.
//! - [`bounds`]: lower bounds on the data-processing gap.
//! - [`harness`]: randomized campaigns, certification and the self-test.
//!
//! All randomness flows from explicit `u64` seeds through [`rng::Rng`].

pub mod bounds;
pub mod channels;
pub mod divergences;
pub mod error;
pub mod harness;
pub mod matcore;
pub mod recovery;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
pub use bounds::{BoundReport, MeasureParams};
pub use channels::{ConditionalExpectation, KrausChannel};
pub use divergences::FDivFamily;
pub use matcore::{ComplexDense, C64};
pub use recovery::RecoveryReport;
pub use states::DensityMatrix;
