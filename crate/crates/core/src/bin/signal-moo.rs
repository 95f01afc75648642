use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use signal_moo::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "signal-moo", version, about = "Robust traffic-signal optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured city and write city.json.
    BuildCity(Common),
    /// Run every configured algorithm and repetition, then merge and export.
    Run(Common),
    /// Merge the per-run fronts of a finished run into global_front.csv.
    MergeFronts(Common),
    /// Write baseline and per-run delay heatmaps for a finished run.
    ExportHeatmap(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> signal_moo::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg = cfg.with_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg = cfg.with_output_dir(out);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: Command) -> signal_moo::Result<()> {
    match command {
        Command::BuildCity(args) => {
            let cfg = args.load()?;
            let (network, path) = experiment::build_city(&cfg, &cfg.output_dir)?;
            println!(
                "{}: {} intersections, {} edges -> {}",
                network.city_label(),
                network.len(),
                network.edges().len(),
                path.display()
            );
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let manifest = experiment::run_experiment(&cfg)?;
            for a in &manifest.artifacts {
                println!("{}", cfg.output_dir.join(&a.path).display());
            }
        }
        Command::MergeFronts(args) => {
            let cfg = args.load()?;
            let (merged, path) = experiment::merge_fronts_in(&cfg.output_dir)?;
            println!("{} records -> {}", merged.len(), path.display());
        }
        Command::ExportHeatmap(args) => {
            let cfg = args.load()?;
            for a in experiment::export_heatmaps_in(&cfg, &cfg.output_dir)? {
                println!("{}", cfg.output_dir.join(&a.path).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
