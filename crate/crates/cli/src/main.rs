use std::path::PathBuf;
use std::process::ExitCode;

use ajscc_core::experiments::{self, parse_config, parse_override, ExperimentKind, ExperimentSpec};
use anyhow::{Context, Result};
use clap::Parser;

#[derive(Parser, Debug)]
#[command(
    name = "ajscc",
    version,
    about = "Run AJSCC link experiments and write CSV results"
)]
struct Args {
    /// One of rmse-sweep, estimate-accuracy, phi-opt, snr-bw, power
    experiment: String,

    /// Master seed; overrides any seed in the config file
    #[arg(long)]
    seed: Option<u64>,

    /// Flat `key = value` file applied on top of the defaults
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for CSVs and manifests
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override a single key, e.g. --set trials=5; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_spec(args: &Args) -> Result<ExperimentSpec> {
    let kind: ExperimentKind = args.experiment.parse()?;
    let mut spec = ExperimentSpec::new(kind, &args.out);
    spec.seed = args.seed;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        spec.config =
            parse_config(&text).with_context(|| format!("parsing config {}", path.display()))?;
    }
    spec.overrides = args
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<_, _>>()?;
    Ok(spec)
}

fn run(args: &Args) -> Result<()> {
    let spec = build_spec(args)?;
    let written = experiments::run(&spec).with_context(|| format!("running {}", spec.kind))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
