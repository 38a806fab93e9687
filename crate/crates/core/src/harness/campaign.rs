use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{BoundFamily, CampaignConfig, ChannelKind, PairFixture};
use crate::bounds::{bs_bound_channel, bs_bound_condexp, maxf_bound, BoundReport, Processing};
use crate::channels::{random_cptp, random_pinching, ConditionalExpectation, KrausChannel};
use crate::error::Result;
use crate::rng::{derive_seed, Rng};
use crate::states::{random_density, random_equal_support_pair};
use crate::ComplexDense;

pub const CSV_HEADER: &str = "seed,d,family,gap,rhs_k,rhs_l,precondition_ok,slack";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub seed: u64,
    pub d: usize,
    pub family: String,
    pub gap: f64,
    pub rhs_k: f64,
    pub rhs_l: f64,
    pub precondition_ok: bool,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub seed: u64,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignSummary {
    /// Evaluated (instance, family) rows.
    pub total: usize,
    pub violations: Vec<Violation>,
    /// Smallest `slack / (1 + |gap|)` over precondition-passing rows.
    pub min_slack: f64,
    /// Rows whose gap is within the equality tolerance of zero.
    pub equality_hits: usize,
    pub precondition_passed: usize,
    /// Largest increment among rows that went through regularization.
    pub max_regularization_increment: Option<f64>,
}

impl CampaignSummary {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct CampaignOutput {
    pub summary: CampaignSummary,
    pub rows: Vec<BoundRow>,
}

impl CampaignOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is UTF-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

enum Map {
    CondExp(ConditionalExpectation),
    Channel(KrausChannel),
}

struct Instance {
    seed: u64,
    d: usize,
    sigma: ComplexDense,
    rho: ComplexDense,
    map: Map,
}

fn smallest_factor(d: usize) -> usize {
    (2..=d).find(|&k| d.is_multiple_of(k)).unwrap_or(d)
}

fn draw_instance(cfg: &CampaignConfig, trial: usize) -> Result<Instance> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let mut rng = Rng::new(seed);
    let mut d = cfg.dims[rng.below(cfg.dims.len())];
    let singular = trial >= cfg.trials - cfg.rank_deficient;
    let (sigma, rho) = if singular {
        d = d.max(3);
        let rank = 2 + rng.below(d - 2);
        let (s, r) = random_equal_support_pair(d, rank, derive_seed(seed, 1))?;
        (s.into_matrix(), r.into_matrix())
    } else {
        let s = random_density(d, d, derive_seed(seed, 1))?.into_matrix();
        let r = random_density(d, d, derive_seed(seed, 2))?.into_matrix();
        (s, r)
    };
    let rho = match cfg.fixture {
        PairFixture::Random => rho,
        PairFixture::Equal => sigma.clone(),
    };
    let map = match cfg.channel_kind {
        ChannelKind::Pinching => Map::CondExp(random_pinching(d, derive_seed(seed, 3))?),
        ChannelKind::PartialTrace => {
            let s = smallest_factor(d);
            Map::CondExp(ConditionalExpectation::partial_trace_factor(d / s, s)?)
        }
        ChannelKind::RandomCptp => Map::Channel(random_cptp(d, d, 2, derive_seed(seed, 3))?),
    };
    Ok(Instance {
        seed,
        d,
        sigma,
        rho,
        map,
    })
}

fn evaluate(inst: &Instance, fam: &BoundFamily) -> Result<BoundReport> {
    let (s, r) = (&inst.sigma, &inst.rho);
    match (fam, &inst.map) {
        (BoundFamily::Bs, Map::CondExp(e)) => bs_bound_condexp(s, r, e),
        (BoundFamily::Bs, Map::Channel(t)) => bs_bound_channel(s, r, t),
        (BoundFamily::Maximal(f), Map::CondExp(e)) => maxf_bound(s, r, Processing::CondExp(e), f),
        (BoundFamily::Maximal(f), Map::Channel(t)) => maxf_bound(s, r, Processing::Channel(t), f),
    }
}

/// Run a bound campaign. Rows come out in trial order, then family order,
/// so a fixed config always yields the same CSV bytes.
pub fn run_bounds(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    cfg.validate()?;
    let families = cfg.bound_families()?;
    let tol = &cfg.tolerances;
    let mut rows = Vec::with_capacity(cfg.trials * families.len());
    let mut summary = CampaignSummary {
        total: 0,
        violations: Vec::new(),
        min_slack: f64::INFINITY,
        equality_hits: 0,
        precondition_passed: 0,
        max_regularization_increment: None,
    };
    for trial in 0..cfg.trials {
        let inst = draw_instance(cfg, trial)?;
        for fam in &families {
            let rep = evaluate(&inst, fam)?;
            let label = fam.label();
            summary.total += 1;
            if rep.gap.abs() <= tol.equality_gap {
                summary.equality_hits += 1;
            }
            if rep.precondition_ok {
                summary.precondition_passed += 1;
                summary.min_slack = summary.min_slack.min(rep.normalized_slack());
            }
            if rep.violates(tol.slack) {
                summary.violations.push(Violation {
                    seed: inst.seed,
                    description: format!(
                        "{label} d={}: gap {:.6e} below bound {:.6e}",
                        inst.d, rep.gap, rep.rhs
                    ),
                });
            }
            if let Some(inc) = rep.regularization_increment {
                let m = summary.max_regularization_increment.get_or_insert(0.0);
                *m = m.max(inc);
                if !(inc < tol.increment) {
                    summary.violations.push(Violation {
                        seed: inst.seed,
                        description: format!("{label} d={}: regularization increment {inc:.3e}", inst.d),
                    });
                }
            }
            rows.push(BoundRow {
                seed: inst.seed,
                d: inst.d,
                family: label,
                gap: rep.gap,
                rhs_k: rep.rhs_k,
                rhs_l: rep.rhs_l,
                precondition_ok: rep.precondition_ok,
                slack: rep.slack,
            });
        }
    }
    Ok(CampaignOutput { summary, rows })
}
