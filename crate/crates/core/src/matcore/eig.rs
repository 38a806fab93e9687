//! Cyclic Jacobi eigensolver for complex Hermitian matrices.

use std::cell::Cell;

use super::dense::{ComplexDense, C64, ZERO};
use crate::error::{Error, Result};

/// Sweeps stop once the off-diagonal Frobenius mass drops below this
/// fraction of the full Frobenius norm.
pub const EIG_CONV_TOL: f64 = 1e-14;
pub const EIG_MAX_SWEEPS: usize = 100;
/// Allowed anti-Hermitian part, relative to `max(1, ||A||_2)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

thread_local! {
    static CONV_OVERRIDE: Cell<Option<f64>> = const { Cell::new(None) };
}

/// Run `f` with the Jacobi stopping tolerance replaced by `tol` on this thread.
///
/// Exists so the self-test can prove it notices a broken eigensolver.
pub fn with_eig_tolerance<R>(tol: f64, f: impl FnOnce() -> R) -> R {
    struct Restore(Option<f64>);
    impl Drop for Restore {
        fn drop(&mut self) {
            CONV_OVERRIDE.with(|c| c.set(self.0));
        }
    }
    let _guard = Restore(CONV_OVERRIDE.with(|c| c.replace(Some(tol))));
    f()
}

fn conv_tol() -> f64 {
    CONV_OVERRIDE.with(|c| c.get()).unwrap_or(EIG_CONV_TOL)
}

/// Eigenvalues ascending, eigenvectors as the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexDense,
}

impl HermitianEigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Largest |eigenvalue|.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `sum_k g(lambda_k) v_k v_k*`.
    pub fn reconstruct_with(&self, mut g: impl FnMut(f64) -> f64) -> ComplexDense {
        let n = self.dim();
        let weights: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        let v = &self.vectors;
        ComplexDense::from_fn(n, n, |i, j| {
            let mut acc = ZERO;
            for (k, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * w;
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> ComplexDense {
        self.reconstruct_with(|l| l)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Fails with `NotHermitian` when `||A - A*||_2 > 1e-10 max(1, ||A||_2)`
/// (Schatten-2 norms) and with `NoConvergence` after 100 sweeps.
pub fn herm_eig(a: &ComplexDense) -> Result<HermitianEigenSystem> {
    let n = a.check_square("herm_eig input")?;
    if let Some(bad) = a.data().iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DomainViolation {
            function: "herm_eig",
            value: if bad.re.is_finite() { bad.im } else { bad.re },
        });
    }
    let dev = (a - &a.adjoint()).frobenius();
    let scale = a.frobenius().max(1.0);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }

    let mut m = a.hermitian_part();
    let mut v = ComplexDense::identity(n);
    let norm = m.frobenius();
    let tol = conv_tol() * norm;
    let mut converged = n <= 1 || norm == 0.0;
    let mut sweeps = 0;
    while !converged {
        if off_diagonal(&m) <= tol {
            converged = true;
            break;
        }
        if sweeps == EIG_MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "Jacobi eigensolver",
            detail: format!(
                "off-diagonal mass {:.3e} after {EIG_MAX_SWEEPS} sweeps",
                off_diagonal(&m)
            ),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexDense::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigenSystem { values, vectors })
}

fn off_diagonal(m: &ComplexDense) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// One complex Jacobi rotation annihilating m[p,q].
fn rotate(m: &mut ComplexDense, v: &mut ComplexDense, p: usize, q: usize) {
    let b = m[(p, q)];
    let ab = b.norm();
    if ab < f64::MIN_POSITIVE {
        return;
    }
    let phase = b / ab; // e^{i phi}
    let phase_c = phase.conj();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * ab);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = m.rows();

    // A <- A J
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * phase_c * s;
        m[(k, q)] = akp * s + akq * phase_c * c;
    }
    // A <- J* A
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * phase * s;
        m[(q, k)] = apk * s + aqk * phase * c;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase_c * s;
        v[(k, q)] = vkp * s + vkq * phase_c * c;
    }
}
