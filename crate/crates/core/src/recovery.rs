//! Petz and BS recovery maps and the residuals of each equality condition
//! for the BS entropy.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channels::{ConditionalExpectation, KrausChannel};
use crate::divergences::bs_from_gamma;
use crate::error::{Error, Result};
use crate::matcore::norms::{op_norm, trace_norm};
use crate::matcore::ComplexDense;
use crate::rng::{derive_seed, Rng};
use crate::states::{
    matrix_to_json, random_density, support_contained, DensityMatrix, GammaOperator, PsdFactors,
};

/// Relative factor in the equality threshold `1e-8 (1 + ||Gamma||)`.
pub const EQUALITY_TOL: f64 = 1e-8;

pub fn equality_threshold(gamma_sup: f64) -> f64 {
    EQUALITY_TOL * (1.0 + gamma_sup)
}

fn output_factors(t: &KrausChannel, sigma: &ComplexDense) -> Result<PsdFactors> {
    let st = t.apply(sigma)?.hermitian_part();
    let f = PsdFactors::new(&st)?;
    if f.rank == 0 {
        return Err(Error::SingularState("T(sigma) vanishes".into()));
    }
    Ok(f)
}

/// `sigma^{1/2} T*(sigma_T^{-1/2} X sigma_T^{-1/2}) sigma^{1/2}`.
pub fn petz_recovery(t: &KrausChannel, sigma: &ComplexDense, x: &ComplexDense) -> Result<ComplexDense> {
    let ft = output_factors(t, sigma)?;
    let fs = PsdFactors::new(sigma)?;
    let inner = ft.inv_sqrt.sandwich(checked_output(t, x)?);
    Ok(fs.sqrt.sandwich(&t.adjoint_apply(&inner)?))
}

/// `sigma T*(sigma_T^{-1} X)`. Trace preserving, not completely positive.
pub fn bs_recovery(t: &KrausChannel, sigma: &ComplexDense, x: &ComplexDense) -> Result<ComplexDense> {
    let ft = output_factors(t, sigma)?;
    let inner = &ft.inv * checked_output(t, x)?;
    Ok(sigma * &t.adjoint_apply(&inner)?)
}

fn checked_output<'a>(t: &KrausChannel, x: &'a ComplexDense) -> Result<&'a ComplexDense> {
    if x.rows() != t.d_out() || x.cols() != t.d_out() {
        return Err(Error::DimMismatch(format!(
            "recovery input must be {0}x{0}",
            t.d_out()
        )));
    }
    Ok(x)
}

/// Residuals of the BS-entropy equality conditions for `(sigma, rho, T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    /// `S_BS(sigma||rho) - S_BS(sigma_T||rho_T)`.
    pub gap_bs: f64,
    /// `||T*(sigma_T^{-1} rho_T) - sigma^{-1} rho||_2`.
    pub residual_eq2: f64,
    /// Stinespring form of the square-root condition.
    pub residual_eq3: f64,
    /// `||rho - sigma T*(sigma_T^{-1} rho_T)||_2`.
    pub residual_bs_recovery: f64,
    /// `||sigma - R(T(sigma))||_1` for the Petz map of `rho`.
    pub residual_petz: f64,
    /// `tr[sigma^2 rho^{-1}] - tr[sigma_T^2 rho_T^{-1}]`.
    pub renyi2_gap: f64,
    /// `||Gamma||_inf`.
    pub gamma_sup: f64,
}

impl RecoveryReport {
    pub fn threshold(&self) -> f64 {
        equality_threshold(self.gamma_sup)
    }

    /// Every BS-equality indicator below threshold.
    pub fn bs_equality(&self) -> bool {
        let thr = self.threshold();
        self.gap_bs <= thr
            && self.residual_eq2 <= thr
            && self.residual_eq3 <= thr
            && self.residual_bs_recovery <= thr
            && self.renyi2_gap.abs() <= thr
    }

    pub fn petz_recoverable(&self) -> bool {
        self.residual_petz <= self.threshold()
    }

    pub fn to_json(&self, inputs: Option<&InputHashes>) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(h) = inputs {
            v["inputs"] = serde_json::to_value(h).expect("hashes serialize");
        }
        v
    }
}

/// SHA-256 of the canonical JSON encoding of each input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputHashes {
    pub sigma: String,
    pub rho: String,
    pub channel: String,
}

impl InputHashes {
    pub fn of(sigma: &ComplexDense, rho: &ComplexDense, channel: &KrausChannel) -> Self {
        InputHashes {
            sigma: sha256_hex(matrix_to_json(sigma).as_bytes()),
            rho: sha256_hex(matrix_to_json(rho).as_bytes()),
            channel: sha256_hex(channel.to_json().as_bytes()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Spectral data for `(sigma, rho)` and their images under a channel.
pub(crate) struct ChannelPair {
    pub fs: PsdFactors,
    pub gamma: GammaOperator,
    pub sigma_t: ComplexDense,
    pub rho_t: ComplexDense,
    pub ft: PsdFactors,
    pub gamma_t: GammaOperator,
}

impl ChannelPair {
    pub fn new(sigma: &ComplexDense, rho: &ComplexDense, t: &KrausChannel) -> Result<Self> {
        rho.check_same_shape(sigma, "sigma and rho")?;
        let fs = PsdFactors::new(sigma)?;
        let fr = PsdFactors::new(rho)?;
        if fs.rank != fr.rank
            || !support_contained(rho, &fs.support)?
            || !support_contained(sigma, &fr.support)?
        {
            return Err(Error::SupportMismatch(format!(
                "sigma and rho have different supports (ranks {} and {})",
                fs.rank, fr.rank
            )));
        }
        let sigma_t = t.apply(sigma)?.hermitian_part();
        let rho_t = t.apply(rho)?.hermitian_part();
        let ft = PsdFactors::new(&sigma_t)?;
        if ft.rank == 0 {
            return Err(Error::SingularState("T(sigma) vanishes".into()));
        }
        let gamma = GammaOperator::from_factors(&fs, rho)?;
        let gamma_t = GammaOperator::from_factors(&ft, &rho_t)?;
        Ok(ChannelPair {
            fs,
            gamma,
            sigma_t,
            rho_t,
            ft,
            gamma_t,
        })
    }

    /// `sigma T*(sigma_T^{-1} rho_T)`.
    pub fn bs_recovered(&self, sigma: &ComplexDense, t: &KrausChannel) -> Result<ComplexDense> {
        Ok(sigma * &t.adjoint_apply(&(&self.ft.inv * &self.rho_t))?)
    }

    /// `||V sigma^{1/2} V* (Y (x) I) - V Gamma^{1/2} sigma^{1/2} V*||_2` with
    /// `Y = sigma_T^{-1/2} Gamma_T^{1/2} sigma_T^{1/2}`.
    pub fn stinespring_residual(&self, t: &KrausChannel) -> f64 {
        let st = t.stinespring();
        let y = &(&self.ft.inv_sqrt * &self.gamma_t.power(0.5)) * &self.ft.sqrt;
        let y_ext = y.kron(&ComplexDense::identity(st.env_dim));
        let left = &st.lift(&self.fs.sqrt) * &y_ext;
        let right = st.lift(&(&self.gamma.power(0.5) * &self.fs.sqrt));
        (&left - &right).frobenius()
    }
}

/// Fill every field of [`RecoveryReport`]. Supports of `sigma` and `rho`
/// must coincide; singular states use generalized inverses.
pub fn equality_residuals(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    t: &KrausChannel,
) -> Result<RecoveryReport> {
    let cp = ChannelPair::new(sigma, rho, t)?;
    let gap_bs = bs_from_gamma(sigma, &cp.gamma) - bs_from_gamma(&cp.sigma_t, &cp.gamma_t);

    let lhs = t.adjoint_apply(&(&cp.ft.inv * &cp.rho_t))?;
    let residual_eq2 = (&lhs - &(&cp.fs.inv * rho)).frobenius();
    let residual_bs_recovery = (rho - &(sigma * &lhs)).frobenius();
    let residual_eq3 = cp.stinespring_residual(t);

    // Petz map of rho applied to sigma_T.
    let fr = PsdFactors::new(rho)?;
    let frt = PsdFactors::new(&cp.rho_t)?;
    let petz = fr
        .sqrt
        .sandwich(&t.adjoint_apply(&frt.inv_sqrt.sandwich(&cp.sigma_t))?);
    let residual_petz = trace_norm(&(sigma - &petz).hermitian_part())?;

    let renyi_top = (&(sigma * sigma) * &fr.inv).trace().re;
    let renyi_bottom = (&(&cp.sigma_t * &cp.sigma_t) * &frt.inv).trace().re;

    Ok(RecoveryReport {
        gap_bs,
        residual_eq2,
        residual_eq3,
        residual_bs_recovery,
        residual_petz,
        renyi2_gap: renyi_top - renyi_bottom,
        gamma_sup: cp.gamma.sup_norm,
    })
}

/// Spectral data for `(sigma, rho)` and their conditional expectations.
pub(crate) struct CondExpPair {
    pub fs: PsdFactors,
    pub gamma: GammaOperator,
    pub fn_: PsdFactors,
    pub gamma_n: GammaOperator,
    pub rho_n: ComplexDense,
    pub sigma_n: ComplexDense,
}

impl CondExpPair {
    pub fn new(sigma: &ComplexDense, rho: &ComplexDense, e: &ConditionalExpectation) -> Result<Self> {
        rho.check_same_shape(sigma, "sigma and rho")?;
        let sigma_n = e.apply(sigma)?.hermitian_part();
        let rho_n = e.apply(rho)?.hermitian_part();
        let fs = PsdFactors::new(sigma)?;
        let fn_ = PsdFactors::new(&sigma_n)?;
        let gamma = GammaOperator::from_factors(&fs, rho)?;
        let gamma_n = GammaOperator::from_factors(&fn_, &rho_n)?;
        Ok(CondExpPair {
            fs,
            gamma,
            fn_,
            gamma_n,
            rho_n,
            sigma_n,
        })
    }

    /// `||rho - sigma sigma_N^{-1} rho_N||_2`.
    pub fn r_recovery(&self, sigma: &ComplexDense, rho: &ComplexDense) -> f64 {
        (rho - &(&(sigma * &self.fn_.inv) * &self.rho_n)).frobenius()
    }

    /// `||sigma^{1/2} sigma_N^{-1/2} Gamma_N^{1/2} sigma_N^{1/2} - Gamma^{1/2} sigma^{1/2}||_2`.
    pub fn r_strange(&self) -> f64 {
        let left = &(&(&self.fs.sqrt * &self.fn_.inv_sqrt) * &self.gamma_n.power(0.5)) * &self.fn_.sqrt;
        let right = &self.gamma.power(0.5) * &self.fs.sqrt;
        (&left - &right).frobenius()
    }
}

/// `(r_recovery, r_strange)` for a conditional expectation. Full-rank only.
pub fn condexp_equality_residuals(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    e: &ConditionalExpectation,
) -> Result<(f64, f64)> {
    let p = CondExpPair::new(sigma, rho, e)?;
    let fr = PsdFactors::new(rho)?;
    if !p.fs.is_full_rank() || !fr.is_full_rank() {
        return Err(Error::SingularState("condexp residuals need full-rank states".into()));
    }
    Ok((p.r_recovery(sigma, rho), p.r_strange()))
}

/// A pair of distinct full-rank states both fixed by `e`, obtained by
/// projecting random states.
pub fn e_fixed_pair(e: &ConditionalExpectation, seed: u64) -> Result<(DensityMatrix, DensityMatrix)> {
    let d = e.dim();
    let a = random_density(d, d, derive_seed(seed, 0))?;
    let b = random_density(d, d, derive_seed(seed, 1))?;
    Ok((
        DensityMatrix::from_psd(&e.apply(&a)?.hermitian_part())?,
        DensityMatrix::from_psd(&e.apply(&b)?.hermitian_part())?,
    ))
}

/// Outcome of a random search for pairs that are BS-recoverable but not
/// Petz-recoverable.
#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub trials: usize,
    /// Seeds where the BS residual vanished but the Petz residual did not.
    pub hits: Vec<u64>,
    pub min_bs_residual: f64,
}

pub fn search_bs_not_petz(trials: usize, seed: u64) -> Result<SearchOutcome> {
    let mut rng = Rng::new(seed);
    let mut hits = Vec::new();
    let mut min_bs = f64::INFINITY;
    for i in 0..trials {
        let s = derive_seed(seed, i as u64);
        let d = 2 + rng.below(3);
        let sigma = random_density(d, d, derive_seed(s, 0))?;
        let rho = random_density(d, d, derive_seed(s, 1))?;
        let e = crate::channels::random_pinching(d, derive_seed(s, 2))?;
        let r = equality_residuals(&sigma, &rho, &e.as_kraus())?;
        min_bs = min_bs.min(r.residual_bs_recovery);
        if r.residual_bs_recovery <= r.threshold() && r.residual_petz > 1e-4 {
            hits.push(s);
        }
    }
    Ok(SearchOutcome {
        trials,
        hits,
        min_bs_residual: min_bs,
    })
}

/// `||Gamma_T||_inf` never exceeds `||Gamma||_inf`; returns both.
pub fn gamma_norms(sigma: &ComplexDense, rho: &ComplexDense, t: &KrausChannel) -> Result<(f64, f64)> {
    let cp = ChannelPair::new(sigma, rho, t)?;
    Ok((cp.gamma.sup_norm, op_norm(&cp.gamma_t.matrix)?))
}
