// stref: refine coarse video masks with tracked masklets, evaluate J&F,
// generate synthetic scenarios and sweep window sizes.
//
// Usage:
//   stref refine --coarse coarse.json --tracked masklets.json --out refined.json
//   stref eval --pred refined.json --gt gt.json
//   stref synth --preset fig2 --out-dir fixtures/
//   stref ablate --coarse c.json --tracked m.json --gt gt.json --windows 5,10,15,20
//   stref overlay --in refined.json --out-dir frames/
//
// Any failure exits with status 1 and prints {"error": {...}} on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stref_core::TieBreak;

#[derive(Parser)]
#[command(
    name = "stref",
    version,
    about = "Temporal-consistency refinement of video segmentation masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    Earliest,
    Latest,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::Earliest => TieBreak::Earliest,
            TieBreakArg::Latest => TieBreak::Latest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Two instances, five frames, one spurious frame.
    Fig2,
    /// Random disjoint-lane scenario with minority flicker.
    Flicker,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a coarse manifest against a masklets manifest.
    Refine {
        #[arg(long)]
        coarse: PathBuf,
        #[arg(long)]
        tracked: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frames per non-overlapping window.
        #[arg(long, default_value_t = 15)]
        window: usize,
        /// Overlap threshold (strict).
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        #[arg(long, value_enum, default_value = "earliest")]
        tie_break: TieBreakArg,
        /// Report path [default: <out> with extension .report.json]
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a prediction manifest against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Boundary tolerance in pixels [default: 0.8% of the diagonal]
        #[arg(long)]
        tolerance: Option<usize>,
        /// Print the JSON result instead of the text summary.
        #[arg(long)]
        json: bool,
        /// Also write the JSON result to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a scenario into gt, masklets and coarse manifests.
    Synth {
        /// Scenario JSON file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        spec: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Seed for the flicker preset.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// J&F of the baseline and of the refinement at several window sizes.
    Ablate {
        #[arg(long)]
        coarse: PathBuf,
        #[arg(long)]
        tracked: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
        windows: Vec<usize>,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        #[arg(long, value_enum, default_value = "earliest")]
        tie_break: TieBreakArg,
        #[arg(long)]
        tolerance: Option<usize>,
        /// Write the JSON table to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Export every frame of a manifest as a binary PGM.
    Overlay {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Refine {
            coarse,
            tracked,
            out,
            window,
            tau,
            tie_break,
            report,
        } => commands::refine(
            &coarse,
            &tracked,
            &out,
            window,
            tau,
            tie_break.into(),
            report.as_deref(),
        ),
        Command::Eval {
            pred,
            gt,
            tolerance,
            json,
            out,
        } => commands::eval(&pred, &gt, tolerance, json, out.as_deref()),
        Command::Synth {
            spec,
            preset,
            seed,
            out_dir,
        } => {
            let source = match (spec, preset) {
                (Some(path), _) => commands::ScenarioSource::File(path),
                (None, Some(Preset::Fig2)) => commands::ScenarioSource::Fig2,
                (None, Some(Preset::Flicker)) => commands::ScenarioSource::Flicker(seed),
                (None, None) => unreachable!("clap requires --spec or --preset"),
            };
            commands::synth(source, &out_dir)
        }
        Command::Ablate {
            coarse,
            tracked,
            gt,
            windows,
            tau,
            tie_break,
            tolerance,
            json,
        } => commands::ablate(
            &coarse,
            &tracked,
            &gt,
            &windows,
            tau,
            tie_break.into(),
            tolerance,
            json.as_deref(),
        ),
        Command::Overlay { input, out_dir } => commands::overlay(&input, &out_dir),
    };
    match result {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let obj =
                serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
