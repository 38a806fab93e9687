//! Lower bounds on the data-processing gap of maximal f-divergences, in
//! conditional-expectation and channel form, plus the resolvent inequality
//! behind them.

use std::f64::consts::PI;

use serde::Serialize;

use crate::channels::{build_contraction_u, ConditionalExpectation, KrausChannel};
use crate::divergences::{bs_from_gamma, extrapolate, maximal_f, FDivFamily, REG_EPSILONS};
use crate::error::{Error, Result};
use crate::matcore::norms::hs_inner;
use crate::matcore::ComplexDense;
use crate::recovery::{ChannelPair, CondExpPair};
use crate::states::{regularize_psd, PsdFactors};

pub use crate::divergences::MeasureParams;

/// `((2a+1)/(2a+2))^{4(a+1)} (2a+1)^{-2} 4^{-(4a+2)} pi^{4(a+1)}`.
pub fn k_alpha(alpha: f64) -> f64 {
    assert!(alpha >= 0.0, "alpha must be non-negative");
    let e = 4.0 * (alpha + 1.0);
    ((2.0 * alpha + 1.0) / (2.0 * alpha + 2.0)).powf(e)
        * (2.0 * alpha + 1.0).powi(-2)
        * 4.0_f64.powf(-(4.0 * alpha + 2.0))
        * PI.powf(e)
}

/// Constant of the recovery-form bound for a general `alpha`:
/// `K_alpha 2^{-4(alpha+1)}`.
pub fn l_alpha_general(alpha: f64) -> f64 {
    k_alpha(alpha) * 2.0_f64.powf(-4.0 * (alpha + 1.0))
}

/// Recovery-form constant for the power family at `alpha = beta / 2`:
/// `(1/4) ((b+1)/(b+2))^{2b+4} (b+1)^{-2} 8^{-2(b+1)} pi^{2b+4}`.
pub fn l_alpha(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(0.25
        * ((beta + 1.0) / (beta + 2.0)).powf(2.0 * beta + 4.0)
        * (beta + 1.0).powi(-2)
        * 8.0_f64.powf(-2.0 * (beta + 1.0))
        * PI.powf(2.0 * beta + 4.0))
}

/// `pi / sin(pi beta)`.
pub fn measure_c(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(PI / (PI * beta).sin())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::BadBeta(beta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub gamma_sup: f64,
    /// `||sigma^{-1}||` for conditional expectations, `||sigma_T^{-1}||` for channels.
    pub sigma_inv_sup: f64,
    pub c: f64,
    pub alpha: f64,
    pub k_alpha: f64,
    pub l_alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub gap: f64,
    /// Bound through the square-root residual.
    pub rhs_k: f64,
    /// Bound through the recovery residual.
    pub rhs_l: f64,
    /// `max(rhs_k, rhs_l)`.
    pub rhs: f64,
    pub precondition_ok: bool,
    /// `gap - max(rhs_k, rhs_l)`.
    pub slack: f64,
    pub residual_k: f64,
    pub residual_l: f64,
    pub constants: BoundConstants,
    /// Present when the gap came from the regularized route.
    pub regularization_increment: Option<f64>,
}

impl BoundReport {
    /// `slack / (1 + |gap|)`, the quantity compared against the tolerance.
    pub fn normalized_slack(&self) -> f64 {
        self.slack / (1.0 + self.gap.abs())
    }

    /// A precondition-passing instance with `slack < -tol (1 + gap)`.
    pub fn violates(&self, tol: f64) -> bool {
        self.precondition_ok && self.normalized_slack() < -tol
    }
}

struct Gap {
    value: f64,
    increment: Option<f64>,
}

/// Gap of the maximal f-divergence between two levels. Full-rank inputs are
/// evaluated directly; otherwise both levels are regularized with the same
/// `eps` and the difference is extrapolated.
fn divergence_gap(
    levels: [(&ComplexDense, &ComplexDense); 2],
    full_rank: bool,
    direct: impl Fn(&ComplexDense, &ComplexDense) -> Result<f64>,
) -> Result<Gap> {
    let [(s, r), (sb, rb)] = levels;
    if full_rank {
        return Ok(Gap {
            value: direct(s, r)? - direct(sb, rb)?,
            increment: None,
        });
    }
    let mut samples = [0.0; 4];
    for (slot, &eps) in samples.iter_mut().zip(&REG_EPSILONS) {
        let top = direct(&regularize_psd(s, eps), &regularize_psd(r, eps))?;
        let bottom = direct(&regularize_psd(sb, eps), &regularize_psd(rb, eps))?;
        *slot = top - bottom;
    }
    let reg = extrapolate(samples)?;
    Ok(Gap {
        value: reg.value,
        increment: Some(reg.last_increment),
    })
}

fn bs_direct(s: &ComplexDense, r: &ComplexDense) -> Result<f64> {
    let fs = PsdFactors::new(s)?;
    let g = crate::states::GammaOperator::from_factors(&fs, r)?;
    Ok(bs_from_gamma(s, &g))
}

fn all_full_rank(ms: &[&ComplexDense]) -> Result<bool> {
    for m in ms {
        if !PsdFactors::new(m)?.is_full_rank() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn pow_or_zero(base: f64, e: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        base.powf(e)
    }
}

/// Residuals and norms feeding the bounds.
struct BoundInputs {
    gap: Gap,
    gamma_sup: f64,
    sigma_inv_sup: f64,
    residual_k: f64,
    residual_l: f64,
}

fn condexp_inputs(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    e: &ConditionalExpectation,
    fam: Option<&FDivFamily>,
) -> Result<BoundInputs> {
    let p = CondExpPair::new(sigma, rho, e)?;
    let fr = PsdFactors::new(rho)?;
    require_equal_support(&p.fs, &fr, sigma, rho)?;
    let full = p.fs.is_full_rank() && fr.is_full_rank();
    let levels = [(sigma, rho), (&p.sigma_n, &p.rho_n)];
    let gap = match fam {
        None => divergence_gap(levels, full, bs_direct)?,
        Some(f) => divergence_gap(levels, full, |s, r| maximal_f(s, r, f))?,
    };
    Ok(BoundInputs {
        gap,
        gamma_sup: p.gamma.sup_norm,
        sigma_inv_sup: p.fs.inv_sup_norm(),
        residual_k: p.r_strange(),
        residual_l: p.r_recovery(sigma, rho),
    })
}

fn channel_inputs(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    t: &KrausChannel,
    fam: Option<&FDivFamily>,
) -> Result<BoundInputs> {
    let cp = ChannelPair::new(sigma, rho, t)?;
    let full = all_full_rank(&[sigma, rho, &cp.sigma_t, &cp.rho_t])?;
    let levels = [(sigma, rho), (&cp.sigma_t, &cp.rho_t)];
    let gap = match fam {
        None => divergence_gap(levels, full, bs_direct)?,
        Some(f) => divergence_gap(levels, full, |s, r| maximal_f(s, r, f))?,
    };
    let recovered = cp.bs_recovered(sigma, t)?;
    Ok(BoundInputs {
        gap,
        gamma_sup: cp.gamma.sup_norm,
        sigma_inv_sup: cp.ft.inv_sup_norm(),
        residual_k: cp.stinespring_residual(t),
        residual_l: (rho - &recovered).frobenius(),
    })
}

fn require_equal_support(
    fs: &PsdFactors,
    fr: &PsdFactors,
    sigma: &ComplexDense,
    rho: &ComplexDense,
) -> Result<()> {
    use crate::states::support_contained;
    if fs.rank != fr.rank
        || !support_contained(rho, &fs.support)?
        || !support_contained(sigma, &fr.support)?
    {
        return Err(Error::SupportMismatch("sigma and rho have different supports".into()));
    }
    Ok(())
}

fn bs_report(inp: BoundInputs) -> BoundReport {
    let g = inp.gamma_sup;
    let rhs_k = k_alpha(0.0) * g.powi(-2) * inp.residual_k.powi(4);
    let rhs_l = l_alpha_general(0.0) * g.powi(-4) * inp.sigma_inv_sup.powi(-2) * inp.residual_l.powi(4);
    finish(inp, rhs_k, rhs_l, true, MeasureParams { c: 1.0, alpha: 0.0 })
}

fn finish(
    inp: BoundInputs,
    rhs_k: f64,
    rhs_l: f64,
    precondition_ok: bool,
    m: MeasureParams,
) -> BoundReport {
    let gap = inp.gap.value;
    let rhs = rhs_k.max(rhs_l);
    BoundReport {
        gap,
        rhs_k,
        rhs_l,
        rhs,
        precondition_ok,
        slack: gap - rhs,
        residual_k: inp.residual_k,
        residual_l: inp.residual_l,
        constants: BoundConstants {
            gamma_sup: inp.gamma_sup,
            sigma_inv_sup: inp.sigma_inv_sup,
            c: m.c,
            alpha: m.alpha,
            k_alpha: k_alpha(m.alpha),
            l_alpha: l_alpha_general(m.alpha),
        },
        regularization_increment: inp.gap.increment,
    }
}

/// BS-entropy gap under a conditional expectation against the square-root
/// form `(pi/4)^4 ||Gamma||^{-2} r^4` and the recovery form
/// `(pi/8)^4 ||Gamma||^{-4} ||sigma^{-1}||^{-2} r^4`.
pub fn bs_bound_condexp(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    e: &ConditionalExpectation,
) -> Result<BoundReport> {
    Ok(bs_report(condexp_inputs(sigma, rho, e, None)?))
}

/// Channel version through the Stinespring isometry, with
/// `||sigma_T^{-1}||` in the recovery form.
pub fn bs_bound_channel(sigma: &ComplexDense, rho: &ComplexDense, t: &KrausChannel) -> Result<BoundReport> {
    Ok(bs_report(channel_inputs(sigma, rho, t, None)?))
}

/// How the gap is produced for [`maxf_bound`].
#[derive(Clone, Copy, Debug)]
pub enum Processing<'a> {
    CondExp(&'a ConditionalExpectation),
    Channel(&'a KrausChannel),
}

/// Bound for a maximal f-divergence with integral constants `C, alpha`.
///
/// `precondition_ok` is false when
/// `(2 alpha + 1) sqrt(C) / 4 * gap^{1/2} / (1 + ||Gamma||) > 1`; the bound is
/// then reported but carries no guarantee.
pub fn maxf_bound(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    q: Processing<'_>,
    fam: &FDivFamily,
) -> Result<BoundReport> {
    let m = fam.measure_params()?;
    let inp = match q {
        Processing::CondExp(e) => condexp_inputs(sigma, rho, e, Some(fam))?,
        Processing::Channel(t) => channel_inputs(sigma, rho, t, Some(fam))?,
    };
    let a = m.alpha;
    let g = inp.gamma_sup;
    let gap = inp.gap.value;
    let precondition_ok = if gap <= 0.0 {
        true
    } else {
        let x = (2.0 * a + 1.0) * m.c.sqrt() / 4.0 * gap.sqrt() / (1.0 + g);
        x.powf(1.0 / (1.0 + a)) <= 1.0
    };
    let damp = (1.0 + g).powf(-(4.0 * a + 2.0));
    let e = 4.0 * (a + 1.0);
    let rhs_k = k_alpha(a) / m.c * damp * pow_or_zero(inp.residual_k, e);
    let rhs_l = l_alpha_general(a) / m.c
        * damp
        * g.powf(-(2.0 * a + 2.0))
        * inp.sigma_inv_sup.powf(-(2.0 * a + 2.0))
        * pow_or_zero(inp.residual_l, e);
    Ok(finish(inp, rhs_k, rhs_l, precondition_ok, m))
}

/// Both sides of the resolvent inequality
/// `<a, (U*(Gamma+t)^{-1}U - (Gamma_N+t)^{-1}) a> >= t ||(U(Gamma_N+t)^{-1} - (Gamma+t)^{-1}U) a||_2^2`
/// with `a = sigma_N^{1/2}`.
pub fn lemma_integrand_check(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    e: &ConditionalExpectation,
    t: f64,
) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::DomainViolation {
            function: "lemma_integrand_check t",
            value: t,
        });
    }
    let p = CondExpPair::new(sigma, rho, e)?;
    let fr = PsdFactors::new(rho)?;
    if !p.fs.is_full_rank() || !fr.is_full_rank() {
        return Err(Error::SingularState("resolvent check needs full-rank states".into()));
    }
    let u = build_contraction_u(sigma, &e.as_kraus())?;
    let res = p.gamma.eig.reconstruct_with(|l| 1.0 / (l + t));
    let res_n = p.gamma_n.eig.reconstruct_with(|l| 1.0 / (l + t));
    let a = &p.fn_.sqrt;

    let ua = u.apply(a)?;
    let top = hs_inner(a, &u.adjoint(&(&res * &ua))?)?.re;
    let bottom = hs_inner(a, &(&res_n * a))?.re;
    let diff = &u.apply(&(&res_n * a))? - &(&res * &ua);
    let rhs = t * diff.frobenius().powi(2);
    Ok((top - bottom, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{random_cptp, random_pinching};
    use crate::states::{random_density, random_equal_support_pair};

    #[test]
    fn k_zero_is_pi_over_four_to_the_fourth() {
        assert!((k_alpha(0.0) - (PI / 4.0).powi(4)).abs() < 1e-12);
        assert!((k_alpha(0.0) - 0.380_504).abs() < 1e-5);
    }

    #[test]
    fn k_one_by_substitution() {
        let expected = (0.75_f64).powi(8) / 9.0 * 4.0_f64.powi(-6) * PI.powi(8);
        assert!((k_alpha(1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn k_alpha_decreases() {
        let mut prev = k_alpha(0.0);
        for i in 1..=40 {
            let k = k_alpha(i as f64 * 0.05);
            assert!(k < prev);
            prev = k;
        }
    }

    #[test]
    fn l_alpha_matches_general_form() {
        for beta in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let printed = l_alpha(beta).unwrap();
            let general = l_alpha_general(beta / 2.0);
            assert!((printed - general).abs() < 1e-15 * general.max(1.0), "{beta}");
        }
        assert!((l_alpha_general(0.0) - (PI / 8.0).powi(4)).abs() < 1e-15);
        assert!(matches!(l_alpha(0.0), Err(Error::BadBeta(_))));
    }

    #[test]
    fn c_at_half_is_pi() {
        assert!((measure_c(0.5).unwrap() - PI).abs() < 1e-12);
        assert!(measure_c(1.5).is_err());
    }

    #[test]
    fn equal_states_give_zero_everything() {
        let s = random_density(3, 3, 1).unwrap();
        let e = random_pinching(3, 2).unwrap();
        let r = bs_bound_condexp(&s, &s, &e).unwrap();
        assert!(r.gap.abs() < 1e-12 && r.rhs_k < 1e-20 && r.rhs_l < 1e-20);
        let m = maxf_bound(&s, &s, Processing::CondExp(&e), &FDivFamily::x_log_x()).unwrap();
        assert!(m.precondition_ok && m.gap.abs() < 1e-12);
    }

    #[test]
    fn diagonal_pair_under_diagonal_pinching() {
        let s = ComplexDense::from_real_diag(&[0.2, 0.3, 0.5]);
        let r = ComplexDense::from_real_diag(&[0.6, 0.1, 0.3]);
        let rep = bs_bound_condexp(&s, &r, &ConditionalExpectation::diagonal(3)).unwrap();
        assert!(rep.gap.abs() < 1e-14 && rep.rhs < 1e-30);
    }

    #[test]
    fn condexp_bounds_hold_on_random_instances() {
        for seed in 0..30 {
            let d = 2 + (seed as usize % 3);
            let s = random_density(d, d, 1000 + seed).unwrap();
            let r = random_density(d, d, 2000 + seed).unwrap();
            let e = random_pinching(d, 3000 + seed).unwrap();
            let rep = bs_bound_condexp(&s, &r, &e).unwrap();
            assert!(rep.gap > 0.0 && rep.rhs_k > 0.0 && rep.rhs_l > 0.0);
            assert!(!rep.violates(1e-8), "{rep:?}");
        }
    }

    #[test]
    fn channel_bound_identity_and_depolarizing() {
        let s = random_density(3, 3, 5).unwrap();
        let r = random_density(3, 3, 6).unwrap();
        let id = bs_bound_channel(&s, &r, &KrausChannel::identity(3)).unwrap();
        assert!(id.gap.abs() < 1e-12 && id.rhs < 1e-18, "{id:?}");
        let dep = bs_bound_channel(&s, &r, &KrausChannel::completely_depolarizing(3)).unwrap();
        let bs = crate::divergences::bs_entropy(&s, &r).unwrap();
        assert!((dep.gap - bs).abs() < 1e-10);
        assert!(!dep.violates(1e-8));
    }

    #[test]
    fn channel_bound_singular_route() {
        let (s, r) = random_equal_support_pair(4, 2, 9).unwrap();
        let t = random_cptp(4, 3, 2, 10).unwrap();
        let rep = bs_bound_channel(&s, &r, &t).unwrap();
        let inc = rep.regularization_increment.expect("regularized");
        assert!(inc < 1e-6, "{inc}");
        let direct = crate::recovery::equality_residuals(&s, &r, &t).unwrap().gap_bs;
        assert!((rep.gap - direct).abs() < 1e-6, "{} vs {direct}", rep.gap);
        assert!(!rep.violates(1e-8));
    }

    #[test]
    fn maxf_requires_measure() {
        let s = random_density(2, 2, 1).unwrap();
        let e = ConditionalExpectation::diagonal(2);
        assert!(matches!(
            maxf_bound(&s, &s, Processing::CondExp(&e), &FDivFamily::square()),
            Err(Error::MissingMeasureParams(_))
        ));
    }

    #[test]
    fn maxf_bounds_hold() {
        let fams = [FDivFamily::x_log_x(), FDivFamily::neg_power(0.5).unwrap()];
        for seed in 0..20 {
            let s = random_density(3, 3, 40 + seed).unwrap();
            let r = random_density(3, 3, 60 + seed).unwrap();
            let e = random_pinching(3, 80 + seed).unwrap();
            let t = random_cptp(3, 3, 2, 90 + seed).unwrap();
            for fam in &fams {
                for q in [Processing::CondExp(&e), Processing::Channel(&t)] {
                    let rep = maxf_bound(&s, &r, q, fam).unwrap();
                    assert!(!rep.violates(1e-8), "{rep:?}");
                }
            }
        }
    }

    #[test]
    fn xlogx_maxf_matches_bs_bound_k_form() {
        let s = random_density(3, 3, 7).unwrap();
        let r = random_density(3, 3, 8).unwrap();
        let e = random_pinching(3, 9).unwrap();
        let bs = bs_bound_condexp(&s, &r, &e).unwrap();
        let mf = maxf_bound(&s, &r, Processing::CondExp(&e), &FDivFamily::x_log_x()).unwrap();
        assert!((bs.gap - mf.gap).abs() < 1e-9);
        // (1 + ||Gamma||)^{-2} <= ||Gamma||^{-2}.
        assert!(mf.rhs_k <= bs.rhs_k * (1.0 + 1e-12));
    }

    #[test]
    fn lemma_inequality_on_grid() {
        let s = random_density(4, 4, 11).unwrap();
        let r = random_density(4, 4, 12).unwrap();
        for e in [
            random_pinching(4, 13).unwrap(),
            ConditionalExpectation::partial_trace_factor(2, 2).unwrap(),
        ] {
            for t in [0.01, 0.1, 1.0, 10.0, 100.0] {
                let (lhs, rhs) = lemma_integrand_check(&s, &r, &e, t).unwrap();
                assert!(lhs - rhs >= -1e-9, "t={t}: {lhs} < {rhs}");
                assert!(rhs > 0.0);
            }
        }
    }

    #[test]
    fn lemma_trivial_for_equal_states() {
        let s = random_density(3, 3, 2).unwrap();
        let e = random_pinching(3, 3).unwrap();
        let (lhs, rhs) = lemma_integrand_check(&s, &s, &e, 1.0).unwrap();
        assert!(lhs.abs() < 1e-10 && rhs.abs() < 1e-10);
    }
}
