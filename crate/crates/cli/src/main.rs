use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::net::SocketAddr;
use std::path::PathBuf;

use goldbev_cli::{Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "goldbev", version, about = "Cross-view BEV supervision pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true, env = "GOLDBEV_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic world, drive, sensor event log and payloads.
    Synth,
    /// Temporal matching, ego localization and BEV crops.
    Align,
    /// LiDAR BEV rasters and sparse labels.
    Rasterize,
    /// Teacher pseudo-labels and reconstruction views.
    Fuse,
    /// Trajectory split and sample manifest.
    Split,
    /// Per-sample and aggregate metrics.
    Eval,
    /// Markdown report.
    Report,
    /// Runs every stage up to and including `--stage`.
    Run {
        #[arg(long, default_value = "report", value_parser = parse_stage)]
        stage: Stage,
    },
    /// Annotation service over the split stage's test samples.
    Serve {
        #[arg(long, env = goldbev_annoserve::ADDR_ENV, default_value = goldbev_annoserve::DEFAULT_ADDR)]
        addr: SocketAddr,
    },
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::parse(s).ok_or_else(|| {
        let names: Vec<_> = Stage::ALL.iter().map(|s| s.name()).collect();
        format!("unknown stage {s:?}; expected one of {}", names.join(", "))
    })
}

fn pipeline(c: &Common) -> Result<Pipeline> {
    let mut cfg = match &c.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Pipeline::new(cfg, &c.out, c.threads)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let p = pipeline(&cli.common)?;
    let outcomes = match cli.command {
        Command::Serve { addr } => {
            let state = goldbev_cli::serve::load_state(&p)?;
            eprintln!("serving {} tasks on http://{addr}", state.tasks().len());
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            rt.block_on(goldbev_annoserve::serve(addr, goldbev_annoserve::shared(state)))?;
            return Ok(());
        }
        Command::Run { stage } => p.run_through(stage)?,
        Command::Synth => vec![p.run(Stage::Synth)?],
        Command::Align => vec![p.run(Stage::Align)?],
        Command::Rasterize => vec![p.run(Stage::Rasterize)?],
        Command::Fuse => vec![p.run(Stage::Fuse)?],
        Command::Split => vec![p.run(Stage::Split)?],
        Command::Eval => vec![p.run(Stage::Eval)?],
        Command::Report => vec![p.run(Stage::Report)?],
    };
    for o in outcomes {
        let state = if o.reused { "reused" } else { "done" };
        println!("{:<10} {:<7} {}", o.stage.name(), state, o.dir.display());
    }
    Ok(())
}
