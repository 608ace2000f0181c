//! `unison`: analysis reports, F0 comparisons and STU/UTS rendering.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use unison_core::metrics::DEFAULT_TOLERANCE_CENTS;
use unison_core::synth::Preset;
use unison_core::TrackerConfig;

use commands::StuOverrides;

#[derive(Parser)]
#[command(name = "unison", version, about = "Unison choir analysis and solo/unison resynthesis")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Tracker hop and analysis grid, in seconds.
    #[arg(long, global = true)]
    hop: Option<f64>,
    /// Pitch tolerance for RPA/OA, in cents.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE_CENTS)]
    tolerance_cents: f64,
    /// Directory for reports and default outputs.
    #[arg(long, global = true, env = "UNISON_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Inter-singer pitch deviation and transition timing per section.
    Analyze {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
    /// Score the mixture F0 against each singer and the mean contour.
    Compare {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
    /// Render a unison from a solo recording.
    Stu {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// stu_ps, stu_pts, stu_ts or stu_pt.
        #[arg(long)]
        preset: Option<Preset>,
        /// Pitch offset standard deviation, in cents.
        #[arg(long = "std")]
        std_cents: Option<f64>,
        /// Timing shift standard deviation, in seconds.
        #[arg(long = "ts")]
        ts_seconds: Option<f64>,
        /// Number of clones.
        #[arg(long)]
        ns: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-clone envelope warp on.
        #[arg(long, conflicts_with = "no_timbre")]
        timbre: bool,
        #[arg(long)]
        no_timbre: bool,
        /// Largest relative envelope warp, e.g. 0.03.
        #[arg(long)]
        max_warp: Option<f64>,
    },
    /// Render a single-voice prototype of a unison recording.
    Uts {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

pub struct Settings {
    pub hop: Option<f64>,
    pub tolerance_cents: f64,
    pub out_dir: PathBuf,
    pub tracker: TrackerConfig,
}

impl Settings {
    fn new(args: &GlobalArgs) -> Result<Self> {
        let mut tracker = TrackerConfig::default();
        if let Some(hop) = args.hop {
            anyhow::ensure!(hop > 0.0 && hop.is_finite(), "--hop must be a positive number of seconds");
            tracker = tracker.with_hop(hop);
        }
        anyhow::ensure!(args.tolerance_cents >= 0.0, "--tolerance-cents must be non-negative");
        std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
        Ok(Self { hop: args.hop, tolerance_cents: args.tolerance_cents, out_dir: args.out_dir.clone(), tracker })
    }

    /// Resolved configuration echoed into every report.
    pub fn describe(&self) -> serde_json::Value {
        json!({
            "tracker": self.tracker,
            "hop_override": self.hop,
            "tolerance_cents": self.tolerance_cents,
            "parallel": unison_core::par::is_parallel(),
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

fn run(cli: Cli) -> Result<commands::Outcome> {
    let settings = Settings::new(&cli.global)?;
    match cli.command {
        Command::Analyze { manifests } => commands::analyze(&manifests, &settings),
        Command::Compare { manifests } => commands::compare(&manifests, &settings),
        Command::Stu { input, output, preset, std_cents, ts_seconds, ns, seed, timbre, no_timbre, max_warp } => {
            let flags = StuOverrides {
                preset,
                std_cents,
                ts_seconds,
                ns,
                seed,
                timbre: if timbre { Some(true) } else if no_timbre { Some(false) } else { None },
                max_warp,
            };
            commands::stu(&input, output.as_deref(), &flags, &settings)
        }
        Command::Uts { input, output } => commands::uts(&input, output.as_deref(), &settings),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) if outcome.failures == 0 => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("{} item(s) failed", outcome.failures);
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
