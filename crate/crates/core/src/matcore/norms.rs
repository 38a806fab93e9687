use serde::{Deserialize, Serialize};

use super::dense::{ComplexDense, C64};
use super::eig::herm_eig;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schatten {
    One,
    Two,
    Inf,
}

/// Schatten norm. Hermitian inputs use |eigenvalues| directly; other inputs
/// go through the eigenvalues of `A*A`.
pub fn schatten_norm(a: &ComplexDense, p: Schatten) -> Result<f64> {
    if p == Schatten::Two {
        return Ok(a.frobenius());
    }
    let sv = singular_values(a)?;
    Ok(match p {
        Schatten::One => sv.iter().sum(),
        Schatten::Inf => sv.iter().fold(0.0, |m: f64, &s| m.max(s)),
        Schatten::Two => unreachable!(),
    })
}

pub fn singular_values(a: &ComplexDense) -> Result<Vec<f64>> {
    let fro = a.frobenius();
    if a.is_square() && (a - &a.adjoint()).frobenius() <= 1e-14 * fro {
        let e = herm_eig(&a.hermitian_part())?;
        return Ok(e.values.iter().map(|l| l.abs()).collect());
    }
    let g = if a.rows() >= a.cols() {
        &a.adjoint() * a
    } else {
        a * &a.adjoint()
    };
    let e = herm_eig(&g.hermitian_part())?;
    Ok(e.values.iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// Operator norm.
pub fn op_norm(a: &ComplexDense) -> Result<f64> {
    schatten_norm(a, Schatten::Inf)
}

pub fn trace_norm(a: &ComplexDense) -> Result<f64> {
    schatten_norm(a, Schatten::One)
}

/// Hilbert-Schmidt inner product `tr[A* B]`.
pub fn hs_inner(a: &ComplexDense, b: &ComplexDense) -> Result<C64> {
    a.check_same_shape(b, "hs_inner")?;
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum())
}
