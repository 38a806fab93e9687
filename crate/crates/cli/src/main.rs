use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdiv_core::harness::{self, criteria, CampaignConfig, ChannelKind};
use qdiv_core::{DensityMatrix, FDivFamily, KrausChannel};

#[derive(Parser)]
#[command(name = "qdiv", version, about = "Quantum f-divergences and data-processing bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relative entropy, BS entropy, standard and maximal f-divergence of a pair.
    Divergence {
        sigma: PathBuf,
        rho: PathBuf,
        #[arg(long, default_value = "xlogx")]
        family: String,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Randomized bound campaign; writes one CSV row per instance and family.
    Bounds(BoundsArgs),
    /// Equality residuals and verdict for (sigma, rho, channel).
    Certify {
        sigma: PathBuf,
        rho: PathBuf,
        channel: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every acceptance criterion at reduced counts.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_eig_fault: bool,
    },
}

#[derive(Args)]
struct BoundsArgs {
    /// JSON campaign config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated, e.g. `2,3,4`.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Comma-separated: `bs`, `xlogx`, `negpower:<beta>`.
    #[arg(long, value_delimiter = ',')]
    family: Option<Vec<String>>,
    /// `pinching`, `partial_trace` or `random_cptp`.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    rank_deficient: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Slack tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` signals invariant violations.
fn run(cmd: Command) -> qdiv_core::Result<bool> {
    match cmd {
        Command::Divergence {
            sigma,
            rho,
            family,
            json,
        } => {
            let fam = FDivFamily::parse(&family)?;
            let s = DensityMatrix::load(&sigma)?;
            let r = DensityMatrix::load(&rho)?;
            let rep = harness::divergence_report(&s, &r, &fam)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
            } else {
                println!("{rep}");
            }
            Ok(true)
        }
        Command::Bounds(args) => bounds(args),
        Command::Certify {
            sigma,
            rho,
            channel,
            out,
        } => {
            let s = DensityMatrix::load(&sigma)?;
            let r = DensityMatrix::load(&rho)?;
            let t = KrausChannel::load(&channel)?;
            let cert = harness::certify(&s, &r, &t)?;
            let text = serde_json::to_string_pretty(&cert.to_json()).expect("report serializes");
            match out {
                Some(p) => std::fs::write(p, text + "\n")?,
                None => println!("{text}"),
            }
            println!("{}", cert.verdict());
            println!("{}", cert.petz_verdict());
            Ok(true)
        }
        Command::Selftest { seed, inject_eig_fault } => {
            let outcomes = criteria::selftest(seed, inject_eig_fault);
            for o in &outcomes {
                println!("{o}");
            }
            let ok = outcomes.iter().all(|o| o.passed);
            println!("selftest {}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
    }
}

fn bounds(args: BoundsArgs) -> qdiv_core::Result<bool> {
    let mut cfg = match &args.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.dims {
        cfg.dims = v;
    }
    if let Some(v) = args.family {
        cfg.families = v;
    }
    if let Some(v) = args.channel {
        cfg.channel_kind = v.parse::<ChannelKind>()?;
    }
    if let Some(v) = args.rank_deficient {
        cfg.rank_deficient = v;
    }
    if let Some(v) = args.tol {
        cfg.tolerances.slack = v;
    }
    if let Some(p) = &args.out {
        cfg.output_path = Some(p.display().to_string());
    }

    let out = harness::run_bounds(&cfg)?;
    let summary = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    match &cfg.output_path {
        Some(p) => {
            out.save_csv(p.as_ref())?;
            println!("{summary}");
        }
        None => {
            print!("{}", out.csv_string());
            eprintln!("{summary}");
        }
    }
    Ok(out.summary.is_clean())
}
