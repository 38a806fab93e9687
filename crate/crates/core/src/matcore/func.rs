//! Spectral calculus on Hermitian matrices.

use std::fmt;
use std::sync::Arc;

use super::dense::ComplexDense;
use super::eig::{herm_eig, HermitianEigenSystem};
use crate::error::{Error, Result};

/// Eigenvalues in `(-CLIP_TOL * lambda_max, 0)` are treated as zero before a
/// function defined only on `[0, inf)` is applied.
pub const CLIP_TOL: f64 = 1e-12;
/// Eigenvalues at or below `RANK_TOL * lambda_max` count as zero for
/// pseudo-inverses and supports.
pub const RANK_TOL: f64 = 1e-10;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of one variable together with where it may be evaluated.
#[derive(Clone)]
pub struct ScalarFunction {
    name: &'static str,
    lo: f64,
    hi: f64,
    finite_at_zero: bool,
    eval: Eval,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFunction({} on [{}, {}])", self.name, self.lo, self.hi)
    }
}

impl ScalarFunction {
    /// `lo`/`hi` bound the closed domain. With `lo == 0`, the point 0 itself
    /// is admissible only if `finite_at_zero`.
    pub fn new(
        name: &'static str,
        lo: f64,
        hi: f64,
        finite_at_zero: bool,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction {
            name,
            lo,
            hi,
            finite_at_zero,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn finite_at_zero(&self) -> bool {
        self.finite_at_zero
    }

    /// Only defined on the non-negative half line.
    pub fn psd_only(&self) -> bool {
        self.lo >= 0.0
    }

    pub fn admits(&self, x: f64) -> bool {
        if x.is_nan() || x < self.lo || x > self.hi {
            return false;
        }
        x != 0.0 || self.lo < 0.0 || self.finite_at_zero
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.admits(x) {
            return Err(Error::DomainViolation {
                function: self.name,
                value: x,
            });
        }
        Ok((self.eval)(x))
    }

    /// Evaluate without a domain check.
    pub fn call(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn identity() -> Self {
        Self::new("x", f64::NEG_INFINITY, f64::INFINITY, true, |x| x)
    }

    pub fn square() -> Self {
        Self::new("x^2", f64::NEG_INFINITY, f64::INFINITY, true, |x| x * x)
    }

    pub fn sqrt() -> Self {
        Self::new("sqrt", 0.0, f64::INFINITY, true, f64::sqrt)
    }

    pub fn ln() -> Self {
        Self::new("ln", 0.0, f64::INFINITY, false, f64::ln)
    }

    pub fn neg_ln() -> Self {
        Self::new("-ln", 0.0, f64::INFINITY, false, |x| -x.ln())
    }

    pub fn reciprocal() -> Self {
        Self::new("1/x", 0.0, f64::INFINITY, false, |x| 1.0 / x)
    }

    /// `x ln x`, extended by 0 at the origin.
    pub fn x_ln_x() -> Self {
        Self::new("x ln x", 0.0, f64::INFINITY, true, |x| {
            if x == 0.0 {
                0.0
            } else {
                x * x.ln()
            }
        })
    }

    /// `x^p` on the half line; finite at 0 only for `p >= 0`.
    pub fn power(p: f64) -> Self {
        Self::new("x^p", 0.0, f64::INFINITY, p >= 0.0, move |x| {
            if x == 0.0 && p == 0.0 {
                1.0
            } else {
                x.powf(p)
            }
        })
    }

    /// `-x^p`.
    pub fn neg_power(p: f64) -> Self {
        Self::new("-x^p", 0.0, f64::INFINITY, p >= 0.0, move |x| {
            if x == 0.0 && p == 0.0 {
                -1.0
            } else {
                -x.powf(p)
            }
        })
    }
}

/// Zero out tiny negative eigenvalues of a nominally PSD spectrum.
pub fn clip_psd(values: &[f64]) -> Vec<f64> {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .map(|&l| if l < 0.0 && l > -CLIP_TOL * scale { 0.0 } else { l })
        .collect()
}

/// `f(A)` for Hermitian `A`.
pub fn matrix_fn(a: &ComplexDense, f: &ScalarFunction) -> Result<ComplexDense> {
    let e = herm_eig(a)?;
    apply_fn(&e, f)
}

/// `f` applied to an existing decomposition.
pub fn apply_fn(e: &HermitianEigenSystem, f: &ScalarFunction) -> Result<ComplexDense> {
    let values = if f.psd_only() {
        clip_psd(&e.values)
    } else {
        e.values.clone()
    };
    let mut fv = Vec::with_capacity(values.len());
    for &l in &values {
        fv.push(f.eval(l)?);
    }
    let mut it = fv.into_iter();
    Ok(e.reconstruct_with(|_| it.next().unwrap()))
}

/// Threshold below which an eigenvalue of `e` is treated as zero.
pub fn rank_threshold(e: &HermitianEigenSystem) -> f64 {
    RANK_TOL * e.spectral_radius()
}

/// Moore-Penrose inverse of a Hermitian matrix.
pub fn pinv(a: &ComplexDense) -> Result<ComplexDense> {
    let e = herm_eig(a)?;
    Ok(pinv_of(&e))
}

pub fn pinv_of(e: &HermitianEigenSystem) -> ComplexDense {
    let cut = rank_threshold(e);
    e.reconstruct_with(|l| if l.abs() > cut { 1.0 / l } else { 0.0 })
}

/// `A^p` on the support of PSD `A` and 0 on its kernel (so `p < 0` gives
/// generalized inverse powers).
pub fn psd_power(a: &ComplexDense, p: f64) -> Result<ComplexDense> {
    let e = herm_eig(a)?;
    Ok(psd_power_of(&e, p))
}

pub fn psd_power_of(e: &HermitianEigenSystem, p: f64) -> ComplexDense {
    let cut = rank_threshold(e);
    e.reconstruct_with(|l| if l > cut { l.powf(p) } else { 0.0 })
}

/// Orthogonal projector onto the range of a Hermitian matrix.
pub fn support_projector_of(e: &HermitianEigenSystem) -> ComplexDense {
    let cut = rank_threshold(e);
    e.reconstruct_with(|l| if l.abs() > cut { 1.0 } else { 0.0 })
}

pub fn numerical_rank(e: &HermitianEigenSystem) -> usize {
    let cut = rank_threshold(e);
    e.values.iter().filter(|l| l.abs() > cut).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::dense::C64;

    fn herm2() -> ComplexDense {
        ComplexDense::from_row_major(
            2,
            2,
            vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn sqrt_squares_back() {
        let a = herm2(); // eigenvalues 1 and 3
        let s = matrix_fn(&a, &ScalarFunction::sqrt()).unwrap();
        assert!((&(&s * &s) - &a).frobenius() < 1e-14);
    }

    #[test]
    fn log_of_diag() {
        let a = ComplexDense::from_real_diag(&[0.5, 2.0]);
        let l = matrix_fn(&a, &ScalarFunction::ln()).unwrap();
        assert!((l[(0, 0)].re - 0.5_f64.ln()).abs() < 1e-15);
        assert!((l[(1, 1)].re - 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_rejects_singular() {
        let a = ComplexDense::from_real_diag(&[0.0, 1.0]);
        assert!(matches!(
            matrix_fn(&a, &ScalarFunction::ln()),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn x_ln_x_accepts_singular() {
        let a = ComplexDense::from_real_diag(&[0.0, 2.0]);
        let m = matrix_fn(&a, &ScalarFunction::x_ln_x()).unwrap();
        assert_eq!(m[(0, 0)].re, 0.0);
        assert!((m[(1, 1)].re - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clipped() {
        let a = ComplexDense::from_real_diag(&[-1e-15, 1.0]);
        let m = matrix_fn(&a, &ScalarFunction::sqrt()).unwrap();
        assert_eq!(m[(0, 0)].re, 0.0);
        let b = ComplexDense::from_real_diag(&[-1e-6, 1.0]);
        assert!(matrix_fn(&b, &ScalarFunction::sqrt()).is_err());
    }

    #[test]
    fn pinv_penrose_conditions() {
        let a = ComplexDense::from_real_diag(&[0.0, 2.0, 1e-14, -4.0]);
        let p = pinv(&a).unwrap();
        let apa = &(&a * &p) * &a;
        assert!((&apa - &a).frobenius() < 1e-13);
        let pap = &(&p * &a) * &p;
        assert!((&pap - &p).frobenius() < 1e-14);
        assert_eq!(p[(2, 2)].re, 0.0);
    }
}
