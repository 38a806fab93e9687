//! LU with partial pivoting. Used where an answer must not depend on the
//! eigensolver.

use super::dense::{ComplexDense, C64, ZERO};
use crate::error::{Error, Result};

pub struct Lu {
    n: usize,
    lu: ComplexDense,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &ComplexDense) -> Result<Lu> {
        let n = a.check_square("LU input")?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= 1e-15 * scale || pmax == 0.0 {
                return Err(Error::SingularState(format!("LU pivot {pmax:.3e} in column {k}")));
            }
            if piv != k {
                perm.swap(k, piv);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / d;
                lu[(i, k)] = m;
                if m != ZERO {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= m * u;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// `A^{-1} B`.
    pub fn solve(&self, b: &ComplexDense) -> ComplexDense {
        let mut out = ComplexDense::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            out.set_column(j, &self.solve_vec(&b.column(j)));
        }
        out
    }

    pub fn inverse(&self) -> ComplexDense {
        self.solve(&ComplexDense::identity(self.n))
    }
}

pub fn inverse(a: &ComplexDense) -> Result<ComplexDense> {
    Ok(Lu::new(a)?.inverse())
}
