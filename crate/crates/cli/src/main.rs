use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use threecp_cli::pipeline::{self, Pipeline, Stage, StageError};
use threecp_cli::PipelineConfig;
use threecp_core::{ClusterMethod, CurveFormat, DiscretizeMethod, ScanOrder, ThresholdMode};

#[derive(Parser)]
#[command(
    name = "3cp",
    version,
    about = "Cluster curves by their common repeated patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run every stage.
    Run,
    /// Z-score and align the input curves.
    Standardize,
    /// Map standardized values onto the alphabet.
    Discretize,
    /// Build the suffix index.
    Index,
    /// Detect all repeated patterns.
    Detect,
    /// Score pairs by common same-position patterns.
    Analyze,
    /// Threshold similarities into clusters.
    Cluster,
}

/// Command-line values take precedence over the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "THREECP_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<CurveFormat>,
    #[arg(long, global = true)]
    discrete_input: bool,
    #[arg(long, global = true)]
    alphabet: Option<String>,
    #[arg(long, global = true)]
    alphabet_size: Option<usize>,
    #[arg(long, global = true)]
    expected_length: Option<usize>,
    #[arg(long, global = true)]
    no_align: bool,
    #[arg(long, global = true)]
    discretizer: Option<DiscretizeMethod>,
    #[arg(long, global = true)]
    clamp_sigma: Option<f64>,
    #[arg(long, global = true)]
    spl: Option<usize>,
    #[arg(long, global = true)]
    lerp: Option<usize>,
    #[arg(long, global = true)]
    scan_order: Option<ScanOrder>,
    #[arg(long, global = true)]
    early_stop: Option<ThresholdMode>,
    #[arg(long, global = true)]
    cluster_method: Option<ClusterMethod>,
    #[arg(long, global = true)]
    regions: Option<usize>,
}

impl Overrides {
    fn apply(self, c: &mut PipelineConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f; } )* };
        }
        set!(
            workers,
            threshold,
            format,
            discretizer,
            clamp_sigma,
            spl,
            scan_order,
            cluster_method,
            regions
        );
        set_opt!(
            input,
            alphabet,
            alphabet_size,
            expected_length,
            lerp,
            early_stop
        );
        if let Some(out) = self.out {
            c.output = out;
        }
        if self.discrete_input {
            c.discrete_input = true;
        }
        if self.no_align {
            c.align = false;
        }
    }
}

fn execute(cli: Cli) -> Result<(), StageError> {
    let mut config = match &cli.overrides.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut config);
    let stage = match cli.command {
        Command::Run => {
            let clusters = pipeline::run(config)?;
            for c in &clusters.clusters {
                println!("{}", c.join(" "));
            }
            return Ok(());
        }
        Command::Standardize => Stage::Standardize,
        Command::Discretize => Stage::Discretize,
        Command::Index => Stage::Index,
        Command::Detect => Stage::Detect,
        Command::Analyze => Stage::Analyze,
        Command::Cluster => Stage::Cluster,
    };
    Pipeline::new(config)?.run_stage(stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
