//! `amodepth` — batch CLI over the amodal depth toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 partial per-sample failure
//! (eval samples that could not be scored, failed selfcheck items),
//! 3 fatal IO/format/processing error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "amodepth",
    version,
    about = "Amodal depth dataset construction and evaluation"
)]
struct Cli {
    /// Base RNG seed (generation, selfcheck).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads for batch generation; 0 = all cores.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Output directory (synth, compose, eval) or file (blend, align --out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a deterministic synthetic suite with exact amodal ground truth.
    Synth {
        /// Number of samples.
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 64)]
        width: u32,
        #[arg(long, default_value_t = 64)]
        height: u32,
    },
    /// Composite an occluder over a scene and emit one training sample.
    Compose {
        /// Scene depth containing the whole target object (PFM).
        #[arg(long)]
        background: PathBuf,
        /// Target object mask in the background scene (PGM).
        #[arg(long)]
        object_mask: PathBuf,
        /// Occluder depth (PFM).
        #[arg(long)]
        foreground: PathBuf,
        /// Occluder mask (PGM).
        #[arg(long)]
        foreground_mask: PathBuf,
        /// Occluder-free depth to align as ground truth; defaults to the
        /// background depth itself.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, default_value = "sample0")]
        sample_id: String,
        /// Skip the strict occluder-in-front depth check.
        #[arg(long)]
        permissive: bool,
        /// Flip input depth maps from larger-is-nearer at ingestion.
        #[arg(long)]
        invert_depth: bool,
    },
    /// Fit target = s*source + t over a support mask and print (s, t).
    Align {
        source: PathBuf,
        target: PathBuf,
        /// Support mask (PGM).
        #[arg(long)]
        support: PathBuf,
        /// Also write s*source + t to this PFM file.
        #[arg(long)]
        apply: Option<PathBuf>,
        /// Flip input depth maps from larger-is-nearer at ingestion.
        #[arg(long)]
        invert_depth: bool,
    },
    /// Blend a predicted amodal depth into an observation over the
    /// occluded region.
    Blend {
        #[arg(long)]
        observed: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        amodal: PathBuf,
        #[arg(long)]
        visible: PathBuf,
        /// Flip the predicted map from larger-is-nearer at ingestion.
        #[arg(long)]
        invert_depth: bool,
    },
    /// Score predictions against a manifest; writes JSON + text reports.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory of `<sample_id>.pfm` prediction rasters.
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long, default_value_t = 1.25)]
        delta_threshold: f64,
        #[arg(long, value_enum, default_value_t = EvalRegionArg::Occluded)]
        eval_region: EvalRegionArg,
        /// Flip prediction rasters from larger-is-nearer at ingestion.
        #[arg(long)]
        invert_pred: bool,
    },
    /// Render an eval JSON report as aligned text.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the invariant battery and print a pass/fail table.
    Selfcheck {
        /// Silog scale-invariance weight.
        #[arg(long, default_value_t = 0.85)]
        lambda: f64,
        /// Silog output scaling.
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
        /// Noise-augmentation level for the flow path checks.
        #[arg(long, default_value_t = 1e-4)]
        sigma_min: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EvalRegionArg {
    /// Score only the invisible object region (default).
    Occluded,
    /// Score the whole object.
    Amodal,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
