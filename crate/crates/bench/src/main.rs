use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coreset_bench::{
    cmd_eval, cmd_export_components, cmd_stream_bench, cmd_synth, cmd_window_demo, BenchError, BenchResult, Pipeline,
    RunConfig,
};
use eeg_coreset::SyntheticSpec;
use log::{error, info};

#[derive(Parser)]
#[command(name = "coreset-bench", version, about = "Coreset vs batch CSP benchmarks")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for synthetic input; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pipeline: Option<Pipeline>,
    /// Emit a stream-bench row every N samples.
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-sample objective ratio, update time and resident size.
    StreamBench,
    /// Leave-one-trial-out accuracy per subject.
    Eval,
    /// Selected spatial filters of each pipeline.
    ExportComponents,
    /// Sliding-window coreset trace against a naive window scatter.
    WindowDemo,
    /// Write synthetic trials and a manifest.
    Synth {
        /// SyntheticSpec JSON; defaults to the config's synthetic input.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> BenchResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| BenchError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(p) = cli.pipeline {
        cfg.pipeline = p;
    }
    if let Some(s) = cli.stride {
        cfg.stride = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn synth_spec(cli: &Cli, spec: Option<&PathBuf>) -> BenchResult<(SyntheticSpec, PathBuf)> {
    let (mut spec, out) = match spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
            let spec: SyntheticSpec =
                serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
            let out = cli.output.clone().unwrap_or_else(|| PathBuf::from("out"));
            (spec, out)
        }
        None => {
            let cfg = load_config(cli)?;
            let spec = cfg
                .synthetic_spec()
                .ok_or_else(|| BenchError::Config("synth needs --spec or a synthetic config input".into()))?;
            (spec, cfg.output_dir)
        }
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    Ok((spec, out))
}

fn run(cli: &Cli) -> BenchResult<()> {
    match &cli.command {
        Command::Synth { spec } => {
            let (spec, out) = synth_spec(cli, spec.as_ref())?;
            let manifest = cmd_synth(&spec, &out)?;
            info!("wrote {} trials to {}", manifest.entries.len(), out.display());
        }
        cmd => {
            let cfg = load_config(cli)?;
            let out = cfg.output_dir.clone();
            match cmd {
                Command::StreamBench => {
                    let o = cmd_stream_bench(&cfg, &out)?;
                    info!("{} rows, stride {}", o.summary.rows, o.summary.stride);
                }
                Command::Eval => {
                    for r in cmd_eval(&cfg, &out)?.reports {
                        println!(
                            "{}: mean accuracy {:.4}, std {:.4}",
                            r.pipeline.name(),
                            r.mean_accuracy,
                            r.std_accuracy
                        );
                    }
                }
                Command::ExportComponents => {
                    let o = cmd_export_components(&cfg, &out)?;
                    info!("{} component rows", o.rows.len());
                }
                Command::WindowDemo => {
                    let rows = cmd_window_demo(&cfg, &out)?;
                    let worst = rows.iter().map(|r| r.max_rel_deviation).fold(0.0, f64::max);
                    println!("{} steps, max relative deviation {worst:e}", rows.len());
                }
                Command::Synth { .. } => unreachable!(),
            }
            info!("outputs in {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
