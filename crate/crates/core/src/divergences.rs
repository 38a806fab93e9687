//! Standard and maximal f-divergences, Umegaki relative entropy and the
//! Belavkin-Staszewski entropy, with regularized and quadrature routes.
//!
//! Entry points take plain PSD matrices so unnormalized inputs work. Natural
//! logarithms throughout.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::eig::herm_eig;
use crate::matcore::func::{clip_psd, rank_threshold, ScalarFunction};
use crate::matcore::linsolve::Lu;
use crate::matcore::norms::op_norm;
use crate::matcore::quad::integrate_adaptive;
use crate::matcore::ComplexDense;
use crate::states::{regularize_psd, support_contained, GammaOperator, PsdFactors};

/// Regularization ladder for singular inputs.
pub const REG_EPSILONS: [f64; 4] = [1e-4, 1e-5, 1e-6, 1e-7];
/// Raw increments below this are treated as round-off when testing for
/// divergence.
pub const REG_NOISE_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilyTag {
    XLogX,
    NegPower(f64),
    Square,
    NegLogTranspose,
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyTag::XLogX => write!(f, "xlogx"),
            FamilyTag::NegPower(b) => write!(f, "negpower:{b}"),
            FamilyTag::Square => write!(f, "square"),
            FamilyTag::NegLogTranspose => write!(f, "neglog"),
        }
    }
}

/// Constants `C > 0` and `alpha >= 0` of the integral representation the
/// maximal-f bounds rely on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    pub c: f64,
    pub alpha: f64,
}

/// An operator convex `f` together with its transpose `x f(1/x)`.
#[derive(Clone, Debug)]
pub struct FDivFamily {
    pub tag: FamilyTag,
    pub f: ScalarFunction,
    pub f_transpose: ScalarFunction,
    pub measure: Option<MeasureParams>,
}

impl FDivFamily {
    pub fn x_log_x() -> Self {
        FDivFamily {
            tag: FamilyTag::XLogX,
            f: ScalarFunction::x_ln_x(),
            f_transpose: ScalarFunction::neg_ln(),
            measure: Some(MeasureParams { c: 1.0, alpha: 0.0 }),
        }
    }

    /// `f(x) = -x^{1-beta}` for `beta` in (0, 1).
    pub fn neg_power(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::BadBeta(beta));
        }
        Ok(FDivFamily {
            tag: FamilyTag::NegPower(beta),
            f: ScalarFunction::neg_power(1.0 - beta),
            f_transpose: ScalarFunction::neg_power(beta),
            measure: Some(MeasureParams {
                c: PI / (PI * beta).sin(),
                alpha: beta / 2.0,
            }),
        })
    }

    pub fn square() -> Self {
        FDivFamily {
            tag: FamilyTag::Square,
            f: ScalarFunction::square(),
            f_transpose: ScalarFunction::reciprocal(),
            measure: None,
        }
    }

    /// `f(x) = -ln x`, the transpose of `x ln x`.
    pub fn neg_log_transpose() -> Self {
        FDivFamily {
            tag: FamilyTag::NegLogTranspose,
            f: ScalarFunction::neg_ln(),
            f_transpose: ScalarFunction::x_ln_x(),
            measure: None,
        }
    }

    pub fn from_tag(tag: FamilyTag) -> Result<Self> {
        Ok(match tag {
            FamilyTag::XLogX => Self::x_log_x(),
            FamilyTag::NegPower(b) => Self::neg_power(b)?,
            FamilyTag::Square => Self::square(),
            FamilyTag::NegLogTranspose => Self::neg_log_transpose(),
        })
    }

    /// Parse `xlogx`, `negpower:0.5`, `square` or `neglog`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        if let Some(b) = name.strip_prefix("negpower:") {
            let beta: f64 = b
                .parse()
                .map_err(|_| Error::Config(format!("bad beta in family `{name}`")))?;
            return Self::neg_power(beta);
        }
        match name.as_str() {
            "xlogx" | "bs" | "kl" => Ok(Self::x_log_x()),
            "square" => Ok(Self::square()),
            "neglog" => Ok(Self::neg_log_transpose()),
            _ => Err(Error::Config(format!("unknown family `{name}`"))),
        }
    }

    /// The family with `f` and its transpose swapped.
    pub fn transposed(&self) -> TransposedFamily<'_> {
        TransposedFamily(self)
    }

    pub fn label(&self) -> String {
        self.tag.to_string()
    }

    pub fn measure_params(&self) -> Result<MeasureParams> {
        self.measure
            .ok_or_else(|| Error::MissingMeasureParams(self.label()))
    }
}

/// View of a family with the roles of `f` and `f_transpose` exchanged.
pub struct TransposedFamily<'a>(&'a FDivFamily);

impl TransposedFamily<'_> {
    pub fn f(&self) -> &ScalarFunction {
        &self.0.f_transpose
    }
}

fn check_pair(sigma: &ComplexDense, rho: &ComplexDense) -> Result<usize> {
    let d = sigma.check_square("sigma")?;
    rho.check_same_shape(sigma, "sigma and rho")?;
    Ok(d)
}

fn require_full_rank(f: &PsdFactors, which: &str) -> Result<()> {
    if f.is_full_rank() {
        Ok(())
    } else {
        Err(Error::SingularState(format!(
            "{which} has rank {} < {}",
            f.rank,
            f.dim()
        )))
    }
}

/// `sum_{ij} mu_j f(lambda_i / mu_j) |<u_i, v_j>|^2`.
pub fn standard_f(sigma: &ComplexDense, rho: &ComplexDense, fam: &FDivFamily) -> Result<f64> {
    standard_f_with(sigma, rho, &fam.f)
}

/// [`standard_f`] for an arbitrary function.
pub fn standard_f_with(sigma: &ComplexDense, rho: &ComplexDense, f: &ScalarFunction) -> Result<f64> {
    let d = check_pair(sigma, rho)?;
    let es = herm_eig(sigma)?;
    let er = herm_eig(rho)?;
    for (e, which) in [(&es, "sigma"), (&er, "rho")] {
        let cut = rank_threshold(e);
        if e.values.iter().any(|&l| l <= cut) {
            return Err(Error::SingularState(format!("{which} is not full rank")));
        }
    }
    let lam = clip_psd(&es.values);
    let mu = clip_psd(&er.values);
    let mut total = 0.0;
    for i in 0..d {
        let u = es.vectors.column(i);
        for j in 0..d {
            let v = er.vectors.column(j);
            let overlap: f64 = u
                .iter()
                .zip(&v)
                .map(|(a, b)| a.conj() * b)
                .sum::<crate::C64>()
                .norm_sqr();
            total += mu[j] * f.eval(lam[i] / mu[j])? * overlap;
        }
    }
    Ok(total)
}

/// `tr[rho^{1/2} f(rho^{-1/2} sigma rho^{-1/2}) rho^{1/2}]`.
pub fn maximal_f(sigma: &ComplexDense, rho: &ComplexDense, fam: &FDivFamily) -> Result<f64> {
    maximal_f_with(sigma, rho, &fam.f)
}

pub fn maximal_f_with(sigma: &ComplexDense, rho: &ComplexDense, f: &ScalarFunction) -> Result<f64> {
    check_pair(sigma, rho)?;
    let fr = PsdFactors::new(rho)?;
    require_full_rank(&fr, "rho")?;
    let fs = PsdFactors::new(sigma)?;
    require_full_rank(&fs, "sigma")?;
    maximal_weighted_sum(sigma, rho, &fr, f, false)
}

/// Maximal f-divergence restricted to a common support, using generalized
/// inverses. Needs equal supports.
pub fn maximal_f_on_support(sigma: &ComplexDense, rho: &ComplexDense, fam: &FDivFamily) -> Result<f64> {
    check_pair(sigma, rho)?;
    let fr = PsdFactors::new(rho)?;
    let fs = PsdFactors::new(sigma)?;
    require_equal_supports(sigma, rho, &fs, &fr)?;
    maximal_weighted_sum(sigma, rho, &fr, &fam.f, true)
}

// sum_k f(m_k) <w_k, rho w_k> over the eigenpairs of rho^{-1/2} sigma rho^{-1/2}.
fn maximal_weighted_sum(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    fr: &PsdFactors,
    f: &ScalarFunction,
    support_only: bool,
) -> Result<f64> {
    let m = fr.inv_sqrt.sandwich(sigma).hermitian_part();
    let e = herm_eig(&m)?;
    let vals = clip_psd(&e.values);
    let cut = rank_threshold(&e);
    let mut total = 0.0;
    for (k, &mk) in vals.iter().enumerate() {
        if support_only && mk <= cut {
            continue;
        }
        let w = e.vectors.column(k);
        let rw = rho.matvec(&w);
        let weight: f64 = w.iter().zip(&rw).map(|(a, b)| (a.conj() * b).re).sum();
        total += f.eval(mk)? * weight;
    }
    Ok(total)
}

fn require_equal_supports(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    fs: &PsdFactors,
    fr: &PsdFactors,
) -> Result<()> {
    if fs.rank != fr.rank
        || !support_contained(rho, &fs.support)?
        || !support_contained(sigma, &fr.support)?
    {
        return Err(Error::SupportMismatch(format!(
            "supports differ (ranks {} and {})",
            fs.rank, fr.rank
        )));
    }
    Ok(())
}

/// Umegaki `tr[sigma (ln sigma - ln rho)]`. Infinite when the support of
/// `sigma` is not inside that of `rho`.
pub fn relative_entropy(sigma: &ComplexDense, rho: &ComplexDense) -> Result<f64> {
    check_pair(sigma, rho)?;
    let fr = PsdFactors::new(rho)?;
    if !support_contained(sigma, &fr.support)? {
        return Ok(f64::INFINITY);
    }
    let es = herm_eig(sigma)?;
    let cut_s = rank_threshold(&es);
    let s_log_s: f64 = es
        .values
        .iter()
        .filter(|&&l| l > cut_s)
        .map(|&l| l * l.ln())
        .sum();
    let cut_r = rank_threshold(&fr.eig);
    let mut s_log_r = 0.0;
    for (j, &mu) in fr.eig.values.iter().enumerate() {
        if mu <= cut_r {
            continue;
        }
        let v = fr.eig.vectors.column(j);
        let sv = sigma.matvec(&v);
        let w: f64 = v.iter().zip(&sv).map(|(a, b)| (a.conj() * b).re).sum();
        s_log_r += mu.ln() * w;
    }
    Ok(s_log_s - s_log_r)
}

/// Belavkin-Staszewski entropy `-tr[sigma ln Gamma]` on the common support.
pub fn bs_entropy(sigma: &ComplexDense, rho: &ComplexDense) -> Result<f64> {
    check_pair(sigma, rho)?;
    let fs = PsdFactors::new(sigma)?;
    let fr = PsdFactors::new(rho)?;
    require_equal_supports(sigma, rho, &fs, &fr)?;
    let g = GammaOperator::from_factors(&fs, rho)?;
    Ok(bs_from_gamma(sigma, &g))
}

pub(crate) fn bs_from_gamma(sigma: &ComplexDense, g: &GammaOperator) -> f64 {
    let cut = rank_threshold(&g.eig);
    let mut total = 0.0;
    for (k, &gk) in g.eig.values.iter().enumerate() {
        if gk <= cut {
            continue;
        }
        let w = g.eig.vectors.column(k);
        let sw = sigma.matvec(&w);
        let weight: f64 = w.iter().zip(&sw).map(|(a, b)| (a.conj() * b).re).sum();
        total -= gk.ln() * weight;
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Standard,
    Maximal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regularized {
    pub value: f64,
    /// Distance between the last two first-order extrapolants.
    pub last_increment: f64,
    /// Raw values at each entry of [`REG_EPSILONS`].
    pub samples: [f64; 4],
}

/// Evaluate on `(x + eps I)/(1 + eps d)` along [`REG_EPSILONS`] and
/// extrapolate to `eps = 0`.
pub fn regularized_divergence(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    fam: &FDivFamily,
    kind: DivergenceKind,
) -> Result<Regularized> {
    check_pair(sigma, rho)?;
    if kind == DivergenceKind::Maximal {
        let fs = PsdFactors::new(sigma)?;
        let fr = PsdFactors::new(rho)?;
        require_equal_supports(sigma, rho, &fs, &fr)?;
    }
    let mut samples = [0.0; 4];
    for (slot, &eps) in samples.iter_mut().zip(&REG_EPSILONS) {
        let s = regularize_psd(sigma, eps);
        let r = regularize_psd(rho, eps);
        *slot = match kind {
            DivergenceKind::Standard => standard_f(&s, &r, fam)?,
            DivergenceKind::Maximal => maximal_f(&s, &r, fam)?,
        };
    }
    extrapolate(samples)
}

/// Two-level Richardson table on the last three samples (ratio 10).
pub fn extrapolate(samples: [f64; 4]) -> Result<Regularized> {
    let [v4, v5, v6, v7] = samples;
    let d2 = (v6 - v5).abs();
    let d3 = (v7 - v6).abs();
    let d1 = (v5 - v4).abs();
    // A convergent first-order sequence shrinks its increments tenfold per
    // decade of eps; anything that stalls above round-off is treated as
    // divergent.
    if d3 > REG_NOISE_FLOOR && d3 >= 0.5 * d2 && d2 >= 0.5 * d1 {
        return Err(Error::Diverging { increment: d3 });
    }
    let ra = (10.0 * v6 - v5) / 9.0;
    let rb = (10.0 * v7 - v6) / 9.0;
    let value = (100.0 * rb - ra) / 99.0;
    Ok(Regularized {
        value,
        last_increment: (rb - ra).abs(),
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Bound on the neglected part of the integral beyond `t_max`.
    pub tail_bound: f64,
    pub t_max: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// BS entropy from its resolvent integral, using LU solves only.
///
/// The integrand `tr[sigma (rho + t sigma)^{-1} sigma] - tr(sigma)/(1+t)` is
/// integrated on `[0, t_max]`. The first-order part of the tail is added in
/// closed form; what remains is bounded by
/// `tr(sigma) ||Gamma - I||^2 / (2 t_max^2)`. With `t_max = None` the cutoff
/// is chosen so that bound is at most `tol / 10`.
pub fn bs_entropy_quadrature(
    sigma: &ComplexDense,
    rho: &ComplexDense,
    t_max: Option<f64>,
    tol: f64,
) -> Result<QuadratureEstimate> {
    check_pair(sigma, rho)?;
    let fs = PsdFactors::new(sigma)?;
    require_full_rank(&fs, "sigma")?;
    let fr = PsdFactors::new(rho)?;
    require_full_rank(&fr, "rho")?;
    let tr_s = sigma.trace().re;
    let tr_r = rho.trace().re;
    let g = GammaOperator::from_factors(&fs, rho)?;
    let dev = op_norm(&(&g.matrix - &ComplexDense::identity(g.matrix.rows())))?;
    let c2 = tr_s * dev * dev;
    let t_max = t_max.unwrap_or_else(|| (5.0 * c2 / tol).sqrt().max(1.0));

    let mut failure = None;
    let integrand = |t: f64| -> f64 {
        let shifted = rho + &sigma.scale(t);
        match Lu::new(&shifted) {
            Ok(lu) => {
                let x = lu.solve(sigma);
                let v = (sigma * &x).trace().re;
                v - tr_s / (1.0 + t)
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let q = integrate_adaptive(integrand, 0.0, t_max, 0.5 * tol)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadratureEstimate {
        value: q.value + (tr_s - tr_r) / (1.0 + t_max),
        tail_bound: c2 / (2.0 * t_max * t_max),
        t_max,
        error_estimate: q.error_estimate,
        panels: q.panels,
    })
}
