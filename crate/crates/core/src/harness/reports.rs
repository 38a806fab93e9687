use std::fmt;

use serde::Serialize;

use crate::channels::KrausChannel;
use crate::divergences::{
    bs_entropy, bs_entropy_quadrature, maximal_f, regularized_divergence, relative_entropy, standard_f,
    DivergenceKind, FDivFamily, QuadratureEstimate,
};
use crate::error::{Error, Result};
use crate::recovery::{equality_residuals, InputHashes, RecoveryReport};
use crate::states::PsdFactors;
use crate::ComplexDense;

/// Quadrature tolerance for the cross-check in [`divergence_report`].
const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub family: String,
    pub relative_entropy: f64,
    pub bs_entropy: f64,
    pub standard: f64,
    pub maximal: f64,
    /// Standard and maximal values came from the regularized route.
    pub regularized: bool,
    /// Only for full-rank pairs.
    pub quadrature: Option<QuadratureEstimate>,
}

impl DivergenceReport {
    pub fn quadrature_deviation(&self) -> Option<f64> {
        self.quadrature.map(|q| (q.value - self.bs_entropy).abs())
    }
}

impl fmt::Display for DivergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let route = if self.regularized { " (regularized)" } else { "" };
        let rows = [
            ("D(sigma||rho)".to_string(), self.relative_entropy),
            ("S_BS(sigma||rho)".to_string(), self.bs_entropy),
            (format!("S_f  [{}]{route}", self.family), self.standard),
            (format!("S^_f [{}]{route}", self.family), self.maximal),
        ];
        for (label, v) in rows {
            writeln!(f, "{label:<24} = {v:.12e}")?;
        }
        match (self.quadrature, self.quadrature_deviation()) {
            (Some(q), Some(dev)) => write!(
                f,
                "{:<24} = {:.12e} (|diff| {:.2e}, t_max {:.3e}, {} panels)",
                "quadrature S_BS", q.value, dev, q.t_max, q.panels
            ),
            _ => write!(f, "{:<24} = n/a (singular input)", "quadrature S_BS"),
        }
    }
}

/// All divergences of one pair. Singular pairs must share their support.
pub fn divergence_report(sigma: &ComplexDense, rho: &ComplexDense, fam: &FDivFamily) -> Result<DivergenceReport> {
    let full = PsdFactors::new(sigma)?.is_full_rank() && PsdFactors::new(rho)?.is_full_rank();
    let bs = bs_entropy(sigma, rho)?;
    let (standard, maximal, quadrature) = if full {
        (
            standard_f(sigma, rho, fam)?,
            maximal_f(sigma, rho, fam)?,
            Some(bs_entropy_quadrature(sigma, rho, None, CROSS_CHECK_TOL)?),
        )
    } else {
        (
            regularized_divergence(sigma, rho, fam, DivergenceKind::Standard)?.value,
            regularized_divergence(sigma, rho, fam, DivergenceKind::Maximal)?.value,
            None,
        )
    };
    Ok(DivergenceReport {
        family: fam.label(),
        relative_entropy: relative_entropy(sigma, rho)?,
        bs_entropy: bs,
        standard,
        maximal,
        regularized: !full,
        quadrature,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub report: RecoveryReport,
    pub inputs: InputHashes,
    pub equality: bool,
    pub petz_recoverable: bool,
}

impl Certificate {
    pub fn verdict(&self) -> &'static str {
        if self.equality {
            "EQUALITY"
        } else {
            "NO-EQUALITY"
        }
    }

    pub fn petz_verdict(&self) -> &'static str {
        if self.petz_recoverable {
            "PETZ-RECOVERABLE"
        } else {
            "NOT-PETZ-RECOVERABLE"
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.report.to_json(Some(&self.inputs));
        v["threshold"] = self.report.threshold().into();
        v["verdict"] = self.verdict().into();
        v["petz"] = self.petz_verdict().into();
        v
    }
}

/// Equality certification for `(sigma, rho, T)`.
pub fn certify(sigma: &ComplexDense, rho: &ComplexDense, channel: &KrausChannel) -> Result<Certificate> {
    let d = sigma.check_square("sigma")?;
    rho.check_same_shape(sigma, "sigma and rho")?;
    if d != channel.d_in() {
        return Err(Error::DimMismatch(format!(
            "states are {d}x{d} but the channel expects input dimension {}",
            channel.d_in()
        )));
    }
    let report = equality_residuals(sigma, rho, channel)?;
    Ok(Certificate {
        inputs: InputHashes::of(sigma, rho, channel),
        equality: report.bs_equality(),
        petz_recoverable: report.petz_recoverable(),
        report,
    })
}
