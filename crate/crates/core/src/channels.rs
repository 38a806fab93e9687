//! Quantum channels: Kraus form, Stinespring dilation, conditional
//! expectations and the contraction `U` used in the recovery analysis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::eig::herm_eig;
use crate::matcore::norms::op_norm;
use crate::matcore::qr::random_isometry;
use crate::matcore::{ComplexDense, C64};
use crate::rng::Rng;
use crate::states::{matrix_from_value, matrix_to_value, PsdFactors};

/// `||sum K*K - I||_inf` allowed for a trace-preserving channel.
pub const TP_TOL: f64 = 1e-10;
/// Most negative Choi eigenvalue tolerated.
pub const CHOI_PSD_TOL: f64 = 1e-10;
/// Tolerance for projector identities of a pinching.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// Completely positive trace-preserving map `X -> sum_a K_a X K_a*`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<ComplexDense>,
}

impl KrausChannel {
    /// Build and check trace preservation.
    pub fn new(kraus: Vec<ComplexDense>) -> Result<Self> {
        let ch = Self::new_unchecked(kraus)?;
        let defect = ch.tp_defect()?;
        if defect > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving: ||sum K*K - I|| = {defect:.3e}"
            )));
        }
        Ok(ch)
    }

    /// Shape checks only.
    pub fn new_unchecked(kraus: Vec<ComplexDense>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        Ok(KrausChannel { d_in, d_out, kraus })
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel {
            d_in: d,
            d_out: d,
            kraus: vec![ComplexDense::identity(d)],
        }
    }

    /// `X -> U X U*`.
    pub fn unitary(u: ComplexDense) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `X -> tr(X) I / d`.
    pub fn completely_depolarizing(d: usize) -> Self {
        let w = 1.0 / (d as f64).sqrt();
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexDense::zeros(d, d);
                k[(i, j)] = C64::new(w, 0.0);
                kraus.push(k);
            }
        }
        KrausChannel {
            d_in: d,
            d_out: d,
            kraus,
        }
    }

    /// Trace over the second factor of `C^{d_keep} (x) C^{s}`.
    pub fn partial_trace(d_keep: usize, s: usize) -> Self {
        let kraus = (0..s)
            .map(|a| {
                ComplexDense::from_fn(d_keep, d_keep * s, |i, col| {
                    if col == i * s + a {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        KrausChannel {
            d_in: d_keep * s,
            d_out: d_keep,
            kraus,
        }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[ComplexDense] {
        &self.kraus
    }

    pub fn apply(&self, x: &ComplexDense) -> Result<ComplexDense> {
        if x.rows() != self.d_in || x.cols() != self.d_in {
            return Err(Error::DimMismatch(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.d_in,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = ComplexDense::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += &k.sandwich(x);
        }
        Ok(out)
    }

    /// Heisenberg picture `Y -> sum_a K_a* Y K_a`.
    pub fn adjoint_apply(&self, y: &ComplexDense) -> Result<ComplexDense> {
        if y.rows() != self.d_out || y.cols() != self.d_out {
            return Err(Error::DimMismatch(format!(
                "adjoint input is {0}x{0}, got {1}x{2}",
                self.d_out,
                y.rows(),
                y.cols()
            )));
        }
        let mut out = ComplexDense::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            out += &k.adjoint().sandwich(y);
        }
        Ok(out)
    }

    /// `||sum K*K - I||_inf`.
    pub fn tp_defect(&self) -> Result<f64> {
        let mut s = ComplexDense::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            s += &(&k.adjoint() * k);
        }
        op_norm(&(&s - &ComplexDense::identity(self.d_in)))
    }

    /// `sum_{ij} |i><j| (x) T(|i><j|)`, of size `d_in d_out`.
    pub fn choi(&self) -> ComplexDense {
        let (n, m) = (self.d_in, self.d_out);
        let mut c = ComplexDense::zeros(n * m, n * m);
        for i in 0..n {
            for j in 0..n {
                let mut e = ComplexDense::zeros(n, n);
                e[(i, j)] = C64::new(1.0, 0.0);
                let t = self.apply(&e).expect("shape checked");
                for a in 0..m {
                    for b in 0..m {
                        c[(i * m + a, j * m + b)] = t[(a, b)];
                    }
                }
            }
        }
        c
    }

    /// Trace preservation and complete positivity from the Choi matrix.
    pub fn validate(&self) -> Result<()> {
        let defect = self.tp_defect()?;
        if defect > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving: defect {defect:.3e}"
            )));
        }
        let e = herm_eig(&self.choi())?;
        if e.lambda_min() < -CHOI_PSD_TOL {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix has eigenvalue {:.3e}",
                e.lambda_min()
            )));
        }
        Ok(())
    }

    /// `V = sum_a K_a (x) e_a`, rows indexed by `i * s + a`.
    pub fn stinespring(&self) -> StinespringIsometry {
        let s = self.kraus.len();
        let v = ComplexDense::from_fn(self.d_out * s, self.d_in, |row, j| {
            self.kraus[row % s][(row / s, j)]
        });
        StinespringIsometry {
            v,
            d_in: self.d_in,
            d_out: self.d_out,
            env_dim: s,
        }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &KrausChannel) -> Result<KrausChannel> {
        if first.d_out != self.d_in {
            return Err(Error::DimMismatch(format!(
                "compose: {} -> {} then {} -> {}",
                first.d_in, first.d_out, self.d_in, self.d_out
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                kraus.push(a * b);
            }
        }
        Ok(KrausChannel {
            d_in: first.d_in,
            d_out: self.d_out,
            kraus,
        })
    }

    pub fn to_json(&self) -> String {
        let j = ChannelJsonOut {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self.kraus.iter().map(matrix_to_value).collect(),
        };
        serde_json::to_string(&j).expect("channel serializes")
    }

    /// `{"d_in", "d_out", "kraus": [matrix, ...]}`; validates the result.
    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let j: ChannelJsonIn =
            serde_json::from_str(text).map_err(|e| Error::parse(source_name, &e))?;
        let mut kraus = Vec::with_capacity(j.kraus.len());
        for v in j.kraus {
            let k = matrix_from_value(v, source_name)?;
            if k.rows() != j.d_out || k.cols() != j.d_in {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator is {}x{}, header says {}x{}",
                    k.rows(),
                    k.cols(),
                    j.d_out,
                    j.d_in
                )));
            }
            kraus.push(k);
        }
        let ch = Self::new_unchecked(kraus)?;
        ch.validate()?;
        Ok(ch)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }
}

#[derive(Serialize)]
struct ChannelJsonOut {
    d_in: usize,
    d_out: usize,
    kraus: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
struct ChannelJsonIn {
    d_in: usize,
    d_out: usize,
    kraus: Vec<serde_json::Value>,
}

/// Random CPTP map with `s` Kraus operators, cut from a random isometry.
pub fn random_cptp(d_in: usize, d_out: usize, s: usize, seed: u64) -> Result<KrausChannel> {
    if s == 0 || d_out * s < d_in {
        return Err(Error::InvalidChannel(format!(
            "{s} Kraus operators of shape {d_out}x{d_in} cannot be trace preserving"
        )));
    }
    let mut rng = Rng::new(seed);
    let v = random_isometry(d_out * s, d_in, &mut rng)?;
    let kraus = (0..s)
        .map(|a| ComplexDense::from_fn(d_out, d_in, |i, j| v[(i * s + a, j)]))
        .collect();
    Ok(KrausChannel { d_in, d_out, kraus })
}

pub fn random_unitary(d: usize, rng: &mut Rng) -> Result<ComplexDense> {
    random_isometry(d, d, rng)
}

/// Isometry `V: C^{d_in} -> C^{d_out} (x) C^{s}` with `T(X) = tr_env[V X V*]`.
#[derive(Clone, Debug)]
pub struct StinespringIsometry {
    pub v: ComplexDense,
    pub d_in: usize,
    pub d_out: usize,
    pub env_dim: usize,
}

impl StinespringIsometry {
    /// `V X V*`.
    pub fn lift(&self, x: &ComplexDense) -> ComplexDense {
        self.v.sandwich(x)
    }

    pub fn apply(&self, x: &ComplexDense) -> Result<ComplexDense> {
        if x.rows() != self.d_in || x.cols() != self.d_in {
            return Err(Error::DimMismatch("Stinespring input".into()));
        }
        self.lift(x).partial_trace_second(self.env_dim)
    }

    /// `||V*V - I||_2`.
    pub fn isometry_defect(&self) -> f64 {
        (&(&self.v.adjoint() * &self.v) - &ComplexDense::identity(self.d_in)).frobenius()
    }
}

/// Trace-preserving conditional expectation onto a subalgebra.
#[derive(Clone, Debug)]
pub enum ConditionalExpectation {
    /// `X -> sum_k P_k X P_k` for orthogonal projectors summing to `I`.
    Pinching { projectors: Vec<ComplexDense> },
    /// `X -> tr_2[X] (x) I / s` on `C^{d_keep} (x) C^{s}`.
    PartialTraceFactor { d_keep: usize, s: usize },
}

impl ConditionalExpectation {
    pub fn pinching(projectors: Vec<ComplexDense>) -> Result<Self> {
        let d = projectors
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty pinching".into()))?
            .rows();
        let mut sum = ComplexDense::zeros(d, d);
        for (i, p) in projectors.iter().enumerate() {
            if p.rows() != d || p.cols() != d {
                return Err(Error::DimMismatch("pinching projectors differ in size".into()));
            }
            let idem = (&(p * p) - p).frobenius();
            let herm = (p - &p.adjoint()).frobenius();
            if idem > PROJECTOR_TOL || herm > PROJECTOR_TOL {
                return Err(Error::InvalidChannel(format!("block {i} is not a projector")));
            }
            for q in &projectors[i + 1..] {
                if (p * q).frobenius() > PROJECTOR_TOL {
                    return Err(Error::InvalidChannel("projectors overlap".into()));
                }
            }
            sum += p;
        }
        if (&sum - &ComplexDense::identity(d)).frobenius() > PROJECTOR_TOL {
            return Err(Error::InvalidChannel("projectors do not sum to I".into()));
        }
        Ok(ConditionalExpectation::Pinching { projectors })
    }

    /// Pinching onto the diagonal.
    pub fn diagonal(d: usize) -> Self {
        let projectors = (0..d)
            .map(|k| {
                let mut p = ComplexDense::zeros(d, d);
                p[(k, k)] = C64::new(1.0, 0.0);
                p
            })
            .collect();
        ConditionalExpectation::Pinching { projectors }
    }

    pub fn partial_trace_factor(d_keep: usize, s: usize) -> Result<Self> {
        if d_keep == 0 || s == 0 {
            return Err(Error::DimMismatch("factor dimensions must be positive".into()));
        }
        Ok(ConditionalExpectation::PartialTraceFactor { d_keep, s })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConditionalExpectation::Pinching { projectors } => projectors[0].rows(),
            ConditionalExpectation::PartialTraceFactor { d_keep, s } => d_keep * s,
        }
    }

    pub fn apply(&self, x: &ComplexDense) -> Result<ComplexDense> {
        let d = self.dim();
        if x.rows() != d || x.cols() != d {
            return Err(Error::DimMismatch(format!(
                "conditional expectation on {d}x{d}, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        match self {
            ConditionalExpectation::Pinching { projectors } => {
                let mut out = ComplexDense::zeros(d, d);
                for p in projectors {
                    out += &p.sandwich(x);
                }
                Ok(out)
            }
            ConditionalExpectation::PartialTraceFactor { s, .. } => {
                let reduced = x.partial_trace_second(*s)?;
                Ok(reduced.kron(&ComplexDense::identity(*s).scale(1.0 / *s as f64)))
            }
        }
    }

    /// Kraus form (`d -> d`).
    pub fn as_kraus(&self) -> KrausChannel {
        let d = self.dim();
        let kraus = match self {
            ConditionalExpectation::Pinching { projectors } => projectors.clone(),
            ConditionalExpectation::PartialTraceFactor { d_keep, s } => {
                let w = 1.0 / (*s as f64).sqrt();
                let id = ComplexDense::identity(*d_keep);
                let mut ks = Vec::with_capacity(s * s);
                for i in 0..*s {
                    for j in 0..*s {
                        let mut e = ComplexDense::zeros(*s, *s);
                        e[(j, i)] = C64::new(w, 0.0);
                        ks.push(id.kron(&e));
                    }
                }
                ks
            }
        };
        KrausChannel {
            d_in: d,
            d_out: d,
            kraus,
        }
    }
}

/// Random pinching: a random unitary frame cut into 2..=d blocks.
pub fn random_pinching(d: usize, seed: u64) -> Result<ConditionalExpectation> {
    if d < 2 {
        return Ok(ConditionalExpectation::diagonal(d.max(1)));
    }
    let mut rng = Rng::new(seed);
    let w = random_unitary(d, &mut rng)?;
    let blocks = 2 + rng.below(d - 1);
    let mut idx: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        idx.swap(i, rng.below(i + 1));
    }
    // `blocks - 1` distinct cut points in 1..d.
    let mut cuts: Vec<usize> = (1..d).collect();
    for i in (1..cuts.len()).rev() {
        cuts.swap(i, rng.below(i + 1));
    }
    let mut cuts: Vec<usize> = cuts[..blocks - 1].to_vec();
    cuts.sort_unstable();
    cuts.push(d);
    let mut start = 0;
    let mut projectors = Vec::with_capacity(blocks);
    for &end in &cuts {
        let cols: Vec<Vec<C64>> = idx[start..end].iter().map(|&k| w.column(k)).collect();
        let p = ComplexDense::from_fn(d, d, |i, j| {
            cols.iter().map(|c| c[i] * c[j].conj()).sum()
        });
        projectors.push(p.hermitian_part());
        start = end;
    }
    Ok(ConditionalExpectation::Pinching { projectors })
}

/// `U(X) = sigma^{1/2} T*(sigma_T^{-1/2} X)` and its adjoint
/// `U*(Y) = sigma_T^{-1/2} T(sigma^{1/2} Y)`.
#[derive(Clone, Debug)]
pub struct Contraction {
    channel: KrausChannel,
    sigma_sqrt: ComplexDense,
    sigma_t_inv_sqrt: ComplexDense,
}

impl Contraction {
    pub fn apply(&self, x: &ComplexDense) -> Result<ComplexDense> {
        let inner = self.sigma_t_inv_sqrt.try_matmul(x)?;
        Ok(&self.sigma_sqrt * &self.channel.adjoint_apply(&inner)?)
    }

    pub fn adjoint(&self, y: &ComplexDense) -> Result<ComplexDense> {
        let inner = self.sigma_sqrt.try_matmul(y)?;
        Ok(&self.sigma_t_inv_sqrt * &self.channel.apply(&inner)?)
    }

    pub fn d_in(&self) -> usize {
        self.channel.d_out()
    }

    pub fn d_out(&self) -> usize {
        self.channel.d_in()
    }
}

pub fn build_contraction_u(sigma: &ComplexDense, channel: &KrausChannel) -> Result<Contraction> {
    let sigma_t = channel.apply(sigma)?;
    let ft = PsdFactors::new(&sigma_t.hermitian_part())?;
    if ft.rank == 0 {
        return Err(Error::SingularState("T(sigma) vanishes".into()));
    }
    let fs = PsdFactors::new(sigma)?;
    Ok(Contraction {
        channel: channel.clone(),
        sigma_sqrt: fs.sqrt,
        sigma_t_inv_sqrt: ft.inv_sqrt,
    })
}

/// Matrix of a linear map on `d_in x d_in` matrices, acting on row-major
/// vectorizations.
pub fn superoperator_matrix(
    map: impl Fn(&ComplexDense) -> Result<ComplexDense>,
    d_in: usize,
) -> Result<ComplexDense> {
    let mut cols = Vec::with_capacity(d_in * d_in);
    for i in 0..d_in {
        for j in 0..d_in {
            let mut e = ComplexDense::zeros(d_in, d_in);
            e[(i, j)] = C64::new(1.0, 0.0);
            cols.push(map(&e)?);
        }
    }
    let rows = cols[0].data().len();
    let mut m = ComplexDense::zeros(rows, d_in * d_in);
    for (c, img) in cols.iter().enumerate() {
        m.set_column(c, img.data());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random_density;

    #[test]
    fn random_channel_is_cptp() {
        for (di, dout, s) in [(2, 2, 2), (3, 2, 3), (4, 4, 1), (2, 5, 1)] {
            let ch = random_cptp(di, dout, s, 7).unwrap();
            ch.validate().unwrap();
            assert!(ch.tp_defect().unwrap() < 1e-13);
        }
        assert!(random_cptp(4, 1, 2, 1).is_err());
    }

    #[test]
    fn channel_maps_states_to_states() {
        let ch = random_cptp(3, 2, 2, 5).unwrap();
        let rho = random_density(3, 3, 2).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-14);
        assert!(herm_eig(&out.hermitian_part()).unwrap().lambda_min() > -1e-14);
    }

    #[test]
    fn adjoint_duality() {
        let ch = random_cptp(3, 2, 2, 9).unwrap();
        let x = random_density(3, 3, 1).unwrap();
        let y = random_density(2, 2, 2).unwrap();
        let lhs = crate::matcore::hs_inner(&y, &ch.apply(&x).unwrap()).unwrap();
        let rhs = crate::matcore::hs_inner(&ch.adjoint_apply(&y).unwrap(), &x).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn stinespring_reconstructs() {
        let ch = random_cptp(3, 2, 3, 12).unwrap();
        let v = ch.stinespring();
        assert!(v.isometry_defect() < 1e-13);
        let x = random_density(3, 2, 4).unwrap();
        let a = v.apply(&x).unwrap();
        let b = ch.apply(&x).unwrap();
        assert!((&a - &b).frobenius() < 1e-14);
    }

    #[test]
    fn partial_trace_channel() {
        let a = random_density(2, 2, 1).unwrap();
        let b = random_density(3, 3, 2).unwrap();
        let ab = a.kron(&b);
        let out = KrausChannel::partial_trace(2, 3).apply(&ab).unwrap();
        assert!((&out - a.matrix()).frobenius() < 1e-14);
    }

    #[test]
    fn depolarizing_choi_is_scaled_identity() {
        let c = KrausChannel::completely_depolarizing(2).choi();
        assert!((&c - &ComplexDense::identity(4).scale(0.5)).frobenius() < 1e-15);
    }

    #[test]
    fn identity_choi_is_max_entangled() {
        let c = KrausChannel::identity(2).choi();
        assert_eq!(c[(0, 3)].re, 1.0);
        assert_eq!(c[(0, 0)].re, 1.0);
        assert_eq!(c[(1, 1)].re, 0.0);
    }

    #[test]
    fn validate_rejects_non_tp() {
        let k = ComplexDense::identity(2).scale(0.9);
        assert!(KrausChannel::new(vec![k.clone()]).is_err());
        assert!(KrausChannel::new_unchecked(vec![k]).unwrap().validate().is_err());
    }

    #[test]
    fn conditional_expectation_idempotent_and_kraus_agree() {
        let es = [
            random_pinching(4, 3).unwrap(),
            ConditionalExpectation::partial_trace_factor(2, 2).unwrap(),
            ConditionalExpectation::diagonal(3),
        ];
        for e in &es {
            let d = e.dim();
            let x = random_density(d, d, 8).unwrap();
            let ex = e.apply(&x).unwrap();
            let eex = e.apply(&ex).unwrap();
            assert!((&ex - &eex).frobenius() < 1e-14);
            let k = e.as_kraus();
            k.validate().unwrap();
            assert!((&k.apply(&x).unwrap() - &ex).frobenius() < 1e-14);
        }
    }

    #[test]
    fn random_pinching_is_valid() {
        for seed in 0..20 {
            let e = random_pinching(5, seed).unwrap();
            if let ConditionalExpectation::Pinching { projectors } = &e {
                assert!(projectors.len() >= 2 && projectors.len() <= 5);
                ConditionalExpectation::pinching(projectors.clone()).unwrap();
            }
        }
    }

    #[test]
    fn contraction_adjoint_pairing() {
        let ch = random_cptp(3, 3, 2, 4).unwrap();
        let sigma = random_density(3, 3, 5).unwrap();
        let u = build_contraction_u(&sigma, &ch).unwrap();
        let x = random_density(3, 3, 6).unwrap();
        let y = random_density(3, 3, 7).unwrap();
        let lhs = crate::matcore::hs_inner(&y, &u.apply(&x).unwrap()).unwrap();
        let rhs = crate::matcore::hs_inner(&u.adjoint(&y).unwrap(), &x).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn superoperator_of_identity() {
        let m = superoperator_matrix(|x| Ok(x.clone()), 3).unwrap();
        assert!((&m - &ComplexDense::identity(9)).frobenius() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let ch = random_cptp(3, 2, 2, 1).unwrap();
        let back = KrausChannel::from_json(&ch.to_json(), "mem").unwrap();
        for (a, b) in ch.kraus().iter().zip(back.kraus()) {
            assert_eq!(a, b);
        }
    }
}
