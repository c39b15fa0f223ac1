use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lakesim_cli::{load_config, run_experiment, Experiment};

/// Lake equation experiments.
#[derive(Debug, Parser)]
#[command(name = "lakesim", version)]
struct Args {
    experiment: Experiment,
    /// JSON run configuration (or a manifest.json from an earlier run).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load_config(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        run_experiment(args.experiment, &cfg, &args.out)
    });
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!("{:<40} {:>12.4e} <= {:.3e}", c.name, c.value, c.limit);
            }
            println!("wrote {} files to {}", outcome.files.len(), outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lakesim: {e}");
            println!("{}", serde_json::to_string(&e.record()).expect("record serializes"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
