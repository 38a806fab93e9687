use super::dense::{ComplexDense, C64};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Orthonormalize the columns of `a` by modified Gram-Schmidt, run twice
/// for stability. Fails if the columns are numerically dependent.
pub fn orthonormal_columns(a: &ComplexDense) -> Result<ComplexDense> {
    let (m, n) = (a.rows(), a.cols());
    if n > m {
        return Err(Error::DimMismatch(format!(
            "cannot orthonormalize {n} columns in dimension {m}"
        )));
    }
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    for _pass in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[k];
                let v = &mut rest[0];
                let proj: C64 = q.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::SingularState(format!("column {j} is dependent")));
            }
            for z in cols[j].iter_mut() {
                *z /= norm;
            }
        }
    }
    let mut q = ComplexDense::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Ok(q)
}

/// Haar-like random isometry `rows x cols` (columns orthonormal).
pub fn random_isometry(rows: usize, cols: usize, rng: &mut Rng) -> Result<ComplexDense> {
    let g = ComplexDense::from_fn(rows, cols, |_, _| rng.complex_gaussian());
    orthonormal_columns(&g)
}
