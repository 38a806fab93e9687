//! Randomized bound campaigns, single-instance reports, and the numbered
//! acceptance criteria shared by `qdiv selftest` and the acceptance tests.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::divergences::FDivFamily;
use crate::error::{Error, Result};

mod campaign;
pub mod criteria;
mod reports;

pub use campaign::{run_bounds, BoundRow, CampaignOutput, CampaignSummary, Violation, CSV_HEADER};
pub use reports::{certify, divergence_report, Certificate, DivergenceReport};

/// Every numeric tolerance used by the campaigns and criteria.
/// Individual fields can be overridden from a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Data-processing gaps may dip this far below zero.
    pub dpi: f64,
    /// Relative slack tolerance: violation when `slack < -slack (1 + gap)`.
    pub slack: f64,
    pub equality_gap: f64,
    pub equality_residual: f64,
    /// Values at or below this count as "zero" in the equality implications.
    pub implication_trigger: f64,
    pub implication_gap: f64,
    pub implication_residual: f64,
    pub ordering: f64,
    pub reduction: f64,
    pub quadrature: f64,
    pub scaling: f64,
    pub stinespring: f64,
    pub isometry: f64,
    pub contraction: f64,
    pub gamma_norm: f64,
    pub lemma: f64,
    /// Largest acceptable increment of the regularized extrapolation.
    pub increment: f64,
    pub constants: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            dpi: 1e-9,
            slack: 1e-8,
            equality_gap: 1e-9,
            equality_residual: 1e-7,
            implication_trigger: 1e-12,
            implication_gap: 1e-8,
            implication_residual: 1e-6,
            ordering: 1e-9,
            reduction: 1e-10,
            quadrature: 1e-6,
            scaling: 1e-9,
            stinespring: 1e-12,
            isometry: 1e-10,
            contraction: 1e-9,
            gamma_norm: 1e-10,
            lemma: 1e-9,
            increment: 1e-6,
            constants: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Pinching,
    PartialTrace,
    RandomCptp,
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinching" => Ok(ChannelKind::Pinching),
            "partial_trace" | "partial-trace" => Ok(ChannelKind::PartialTrace),
            "random_cptp" | "random-cptp" | "cptp" => Ok(ChannelKind::RandomCptp),
            other => Err(Error::Config(format!("unknown channel kind {other:?}"))),
        }
    }
}

/// How `rho` is drawn relative to `sigma`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFixture {
    #[default]
    Random,
    /// `rho = sigma`.
    Equal,
}

/// Which bound a campaign row evaluates.
#[derive(Clone, Debug)]
pub enum BoundFamily {
    /// BS-entropy bounds through the square-root and recovery residuals.
    Bs,
    /// Maximal f-divergence bounds with integral constants.
    Maximal(FDivFamily),
}

impl BoundFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "bs" => Ok(BoundFamily::Bs),
            other => Ok(BoundFamily::Maximal(FDivFamily::parse(other)?)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BoundFamily::Bs => "bs".into(),
            BoundFamily::Maximal(f) => f.label(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub channel_kind: ChannelKind,
    /// `"bs"`, `"xlogx"`, `"negpower:<beta>"`.
    pub families: Vec<String>,
    pub tolerances: Tolerances,
    pub output_path: Option<String>,
    /// The last `rank_deficient` trials use equal-support singular pairs.
    pub rank_deficient: usize,
    pub fixture: PairFixture,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seed: 0,
            trials: 500,
            dims: vec![2, 3, 4],
            channel_kind: ChannelKind::Pinching,
            families: vec!["bs".into()],
            tolerances: Tolerances::default(),
            output_path: None,
            rank_deficient: 0,
            fixture: PairFixture::Random,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::Config(format!("dims must be non-empty and >= 2, got {:?}", self.dims)));
        }
        if self.rank_deficient > self.trials {
            return Err(Error::Config("rank_deficient exceeds trials".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Config("no families given".into()));
        }
        for f in &self.families {
            BoundFamily::parse(f).map_err(|e| Error::Config(format!("family {f:?}: {e}")))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let cfg: CampaignConfig = serde_json::from_str(text).map_err(|e| Error::parse(source_name, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn bound_families(&self) -> Result<Vec<BoundFamily>> {
        self.families.iter().map(|f| BoundFamily::parse(f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = CampaignConfig::from_json(r#"{"trials": 3, "tolerances": {"slack": 1e-6}}"#, "c").unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.dims, vec![2, 3, 4]);
        assert_eq!(cfg.tolerances.slack, 1e-6);
        assert_eq!(cfg.tolerances.dpi, 1e-9);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(matches!(CampaignConfig::from_json(r#"{"trials": 0}"#, "c"), Err(Error::Config(_))));
        assert!(matches!(CampaignConfig::from_json(r#"{"dims": [1, 3]}"#, "c"), Err(Error::Config(_))));
        assert!(matches!(
            CampaignConfig::from_json(r#"{"families": ["cubic"]}"#, "c"),
            Err(Error::Config(_))
        ));
        match CampaignConfig::from_json("{\n  \"trials\": ,\n}", "cfg.json") {
            Err(Error::Parse { line, source_name, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(source_name, "cfg.json");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn channel_kind_names() {
        assert_eq!("partial-trace".parse::<ChannelKind>().unwrap(), ChannelKind::PartialTrace);
        assert_eq!("cptp".parse::<ChannelKind>().unwrap(), ChannelKind::RandomCptp);
        assert!("unitary".parse::<ChannelKind>().is_err());
    }
}
