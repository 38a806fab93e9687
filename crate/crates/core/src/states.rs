//! Density matrices, regularization and the relative modular operator.

use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::eig::{herm_eig, HermitianEigenSystem};
use crate::matcore::func::{
    numerical_rank, psd_power_of, rank_threshold, support_projector_of, CLIP_TOL,
};
use crate::matcore::norms::op_norm;
use crate::matcore::qr::random_isometry;
use crate::matcore::{ComplexDense, C64};
use crate::rng::Rng;

/// Allowed deviation of the trace from 1.
pub const TRACE_TOL: f64 = 1e-10;
/// `||(I - P) rho (I - P)||_inf` above this means `rho` leaks out of the
/// support `P`.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: ComplexDense,
    rank: usize,
}

impl Deref for DensityMatrix {
    type Target = ComplexDense;
    fn deref(&self) -> &ComplexDense {
        &self.mat
    }
}

impl DensityMatrix {
    /// Validate Hermiticity, positivity and unit trace.
    pub fn new(mat: ComplexDense) -> Result<Self> {
        mat.check_square("density matrix")?;
        let e = herm_eig(&mat)?;
        let tr: f64 = e.values.iter().sum();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let lmin = e.lambda_min();
        if lmin < -CLIP_TOL * e.spectral_radius().max(1.0) {
            return Err(Error::InvalidState(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(DensityMatrix {
            rank: numerical_rank(&e),
            mat: mat.hermitian_part(),
        })
    }

    /// Normalize a PSD matrix to unit trace.
    pub fn from_psd(mat: &ComplexDense) -> Result<Self> {
        let tr = mat.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::new(mat.scale(1.0 / tr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: ComplexDense::identity(d).scale(1.0 / d as f64),
            rank: d,
        }
    }

    /// `|psi><psi|` for a normalized copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / n).collect();
        Ok(DensityMatrix {
            mat: ComplexDense::outer(&v, &v),
            rank: 1,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn matrix(&self) -> &ComplexDense {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexDense {
        self.mat
    }

    pub fn to_json(&self) -> String {
        matrix_to_json(&self.mat)
    }

    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        Self::new(matrix_from_json(text, source_name)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// `G G* / tr(G G*)` with `G` a `dim x rank` complex Gaussian matrix.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::BadRank { rank, dim });
    }
    let mut rng = Rng::new(seed);
    let g = ComplexDense::from_fn(dim, rank, |_, _| rng.complex_gaussian());
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    Ok(DensityMatrix {
        mat: w.scale(1.0 / tr).hermitian_part(),
        rank,
    })
}

/// A pair of rank-`rank` states in `dim` dimensions sharing one support.
pub fn random_equal_support_pair(
    dim: usize,
    rank: usize,
    seed: u64,
) -> Result<(DensityMatrix, DensityMatrix)> {
    if rank == 0 || rank > dim {
        return Err(Error::BadRank { rank, dim });
    }
    let mut rng = Rng::new(seed);
    let w = random_isometry(dim, rank, &mut rng)?;
    let a = random_density(rank, rank, rng.next_u64())?;
    let b = random_density(rank, rank, rng.next_u64())?;
    let lift = |x: &DensityMatrix| DensityMatrix {
        mat: w.sandwich(x).hermitian_part(),
        rank,
    };
    Ok((lift(&a), lift(&b)))
}

/// `(rho + eps I) / (1 + eps d)`.
pub fn regularize(rho: &DensityMatrix, eps: f64) -> DensityMatrix {
    DensityMatrix {
        mat: regularize_psd(rho, eps),
        rank: rho.dim(),
    }
}

/// Same map on an arbitrary square matrix.
pub fn regularize_psd(x: &ComplexDense, eps: f64) -> ComplexDense {
    let d = x.rows();
    let shifted = x + &ComplexDense::identity(d).scale(eps);
    shifted.scale(1.0 / (1.0 + eps * d as f64))
}

/// Spectral data of a PSD matrix that most computations need together.
#[derive(Clone, Debug)]
pub struct PsdFactors {
    pub eig: HermitianEigenSystem,
    pub sqrt: ComplexDense,
    /// Generalized inverse square root (zero on the kernel).
    pub inv_sqrt: ComplexDense,
    /// Moore-Penrose inverse.
    pub inv: ComplexDense,
    pub support: ComplexDense,
    pub rank: usize,
}

impl PsdFactors {
    pub fn new(a: &ComplexDense) -> Result<Self> {
        let eig = herm_eig(a)?;
        Ok(PsdFactors {
            sqrt: psd_power_of(&eig, 0.5),
            inv_sqrt: psd_power_of(&eig, -0.5),
            inv: psd_power_of(&eig, -1.0),
            support: support_projector_of(&eig),
            rank: numerical_rank(&eig),
            eig,
        })
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    /// Largest eigenvalue of the generalized inverse.
    pub fn inv_sup_norm(&self) -> f64 {
        let cut = rank_threshold(&self.eig);
        self.eig
            .values
            .iter()
            .filter(|&&l| l > cut)
            .fold(0.0, |m: f64, &l| m.max(1.0 / l))
    }

    pub fn power(&self, p: f64) -> ComplexDense {
        psd_power_of(&self.eig, p)
    }
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector(rho: &ComplexDense) -> Result<ComplexDense> {
    Ok(support_projector_of(&herm_eig(rho)?))
}

/// `||(I - P) rho (I - P)||_inf` for a projector `p`.
pub fn leakage(rho: &ComplexDense, p: &ComplexDense) -> Result<f64> {
    let q = &ComplexDense::identity(p.rows()) - p;
    op_norm(&q.sandwich(rho).hermitian_part())
}

/// Does the support of `rho` lie inside the support projector `p`?
pub fn support_contained(rho: &ComplexDense, p: &ComplexDense) -> Result<bool> {
    Ok(leakage(rho, p)? <= SUPPORT_TOL)
}

/// Do the two PSD matrices have the same support?
pub fn supports_equal(a: &PsdFactors, b: &PsdFactors, a_mat: &ComplexDense, b_mat: &ComplexDense) -> Result<bool> {
    Ok(a.rank == b.rank && support_contained(b_mat, &a.support)? && support_contained(a_mat, &b.support)?)
}

/// `Gamma = sigma^{-1/2} rho sigma^{-1/2}` (generalized inverse on the
/// support of `sigma`).
#[derive(Clone, Debug)]
pub struct GammaOperator {
    pub matrix: ComplexDense,
    pub eig: HermitianEigenSystem,
    /// `||Gamma||_inf`.
    pub sup_norm: f64,
}

impl GammaOperator {
    pub fn from_factors(sigma: &PsdFactors, rho: &ComplexDense) -> Result<Self> {
        if sigma.rows_mismatch(rho) {
            return Err(Error::DimMismatch(format!(
                "sigma is {0}x{0}, rho is {1}x{2}",
                sigma.dim(),
                rho.rows(),
                rho.cols()
            )));
        }
        let leak = leakage(rho, &sigma.support)?;
        if leak > SUPPORT_TOL {
            return Err(Error::SupportMismatch(format!(
                "rho leaks {leak:.3e} outside the support of sigma"
            )));
        }
        let matrix = sigma.inv_sqrt.sandwich(rho).hermitian_part();
        let eig = herm_eig(&matrix)?;
        let sup_norm = eig.lambda_max().max(0.0);
        Ok(GammaOperator {
            matrix,
            eig,
            sup_norm,
        })
    }

    pub fn power(&self, p: f64) -> ComplexDense {
        psd_power_of(&self.eig, p)
    }
}

impl PsdFactors {
    fn rows_mismatch(&self, m: &ComplexDense) -> bool {
        m.rows() != self.dim() || m.cols() != self.dim()
    }
}

/// Relative modular operator of `rho` with respect to `sigma`.
pub fn gamma(sigma: &ComplexDense, rho: &ComplexDense) -> Result<GammaOperator> {
    sigma.check_square("sigma")?;
    GammaOperator::from_factors(&PsdFactors::new(sigma)?, rho)
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    entries: Vec<[f64; 2]>,
}

pub(crate) fn matrix_to_value(m: &ComplexDense) -> serde_json::Value {
    let (dim, rows, cols) = if m.is_square() {
        (Some(m.rows()), None, None)
    } else {
        (None, Some(m.rows()), Some(m.cols()))
    };
    let j = MatrixJson {
        dim,
        rows,
        cols,
        entries: m.data().iter().map(|z| [z.re, z.im]).collect(),
    };
    serde_json::to_value(j).expect("matrix serializes")
}

pub(crate) fn matrix_from_value(v: serde_json::Value, source_name: &str) -> Result<ComplexDense> {
    let j: MatrixJson = serde_json::from_value(v).map_err(|e| Error::parse(source_name, &e))?;
    matrix_from_parts(j, source_name)
}

fn matrix_from_parts(j: MatrixJson, source_name: &str) -> Result<ComplexDense> {
    let (rows, cols) = match (j.dim, j.rows, j.cols) {
        (Some(d), None, None) => (d, d),
        (None, Some(r), Some(c)) => (r, c),
        (Some(d), Some(r), Some(c)) if r == d && c == d => (d, d),
        _ => {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line: 0,
                column: 0,
                message: "need either `dim` or both `rows` and `cols`".into(),
            })
        }
    };
    let data = j.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    ComplexDense::from_row_major(rows, cols, data)
}

/// `{"dim": d, "entries": [[re, im], ...]}`, row-major. Non-square matrices
/// carry `rows` and `cols` instead of `dim`.
pub fn matrix_to_json(m: &ComplexDense) -> String {
    serde_json::to_string(&matrix_to_value(m)).expect("matrix serializes")
}

pub fn matrix_from_json(text: &str, source_name: &str) -> Result<ComplexDense> {
    let j: MatrixJson = serde_json::from_str(text).map_err(|e| Error::parse(source_name, &e))?;
    matrix_from_parts(j, source_name)
}
