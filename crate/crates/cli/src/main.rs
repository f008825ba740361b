//! `fusebench`: score, sweep, evaluate and report multibiometric fusion runs.
//!
//! Exit status: 0 on success, 1 when outputs were written but the evaluation
//! raised warnings (absent scores, excluded pairs), 2 on input or config
//! errors.

mod commands;
mod config;
mod output;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{CliOverrides, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Threads {
    Auto,
    Fixed(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
            _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fusebench", version, about = "Multibiometric score fusion and evaluation")]
struct Cli {
    /// Run configuration (TOML). Relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Simplex grid step; 1/step must be an integer.
    #[arg(long, global = true)]
    step: Option<f64>,

    /// Sweep selection criterion.
    #[arg(long, global = true, value_parser = ["eer", "frr_far_0.1", "frr_far_0.01"])]
    criterion: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads, or `auto`.
    #[arg(long, global = true, env = "FUSEBENCH_THREADS")]
    threads: Option<Threads>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Match every protocol pair and write one score CSV per split and trait.
    Score,
    /// Sweep fusion weights on the validation scores.
    Sweep,
    /// Apply the selected weights to the test scores.
    Evaluate,
    /// Render single-trait and fusion tables from an evaluation.
    Report {
        /// Evaluation JSON; defaults to `<out>/evaluation.json`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate a synthetic fixture (features or scores) plus a run config.
    Synth {
        /// Fixture description (JSON).
        #[arg(long)]
        fixture: PathBuf,
    },
    /// Rotation, crop and iris normalization utilities.
    Geometry {
        #[command(subcommand)]
        command: GeometryCommand,
    },
}

#[derive(Debug, Subcommand)]
enum GeometryCommand {
    /// Rotation-normalize a face and cut the periocular, nose and eyebrow crops.
    Extract {
        /// 8-bit binary PGM.
        #[arg(long)]
        image: PathBuf,
        /// JSON with `left_eye`, `right_eye`, `nose_center`, `left_eyebrow_center` as `{x, y}`.
        #[arg(long)]
        keypoints: PathBuf,
    },
    /// Rubber-sheet normalize an eye image and split it into four strips.
    Iris {
        #[arg(long)]
        image: PathBuf,
        /// JSON with `pupil_center`, `pupil_radius`, `iris_center`, `iris_radius`.
        #[arg(long)]
        circles: PathBuf,
        /// Occlusion PGM of the image size; bright pixels are valid.
        #[arg(long)]
        occlusion: Option<PathBuf>,
        #[arg(long, default_value_t = fusebench_core::geometry::DEFAULT_IRIS_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = fusebench_core::geometry::DEFAULT_IRIS_COLS)]
        cols: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let overrides = CliOverrides {
        out: cli.out,
        step: cli.step,
        criterion: cli.criterion,
        seed: cli.seed,
    };
    let settings = || Settings::load(cli.config.as_deref(), &overrides);
    match cli.command {
        Command::Score => commands::score::run(&settings()?),
        Command::Sweep => commands::sweep::run(&settings()?),
        Command::Evaluate => commands::evaluate::run(&settings()?),
        Command::Report { input } => commands::report::run(&settings()?, input.as_deref()),
        Command::Synth { fixture } => commands::synth::run(&settings()?, &fixture),
        Command::Geometry { command } => {
            let s = settings()?;
            match command {
                GeometryCommand::Extract { image, keypoints } => commands::geometry::extract(&s, &image, &keypoints),
                GeometryCommand::Iris {
                    image,
                    circles,
                    occlusion,
                    rows,
                    cols,
                } => commands::geometry::iris(&s, &image, &circles, occlusion.as_deref(), rows, cols),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(Threads::Fixed(n)) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Warnings(w)) => {
            for line in &w {
                eprintln!("warning: {line}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
