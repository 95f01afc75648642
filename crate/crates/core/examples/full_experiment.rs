//! End-to-end experiment from a JSON config: builds the city, runs every
//! algorithm and repetition, writes fronts, telemetry, the merged global
//! front and heatmaps, and prints the manifest.
//!
//! ```sh
//! cargo run --release --example full_experiment -- [config.json]
//! ```

use signal_moo::experiment::{read_front_csv, run_experiment, ExperimentConfig};

const DEFAULT_CONFIG: &str = r#"{
    "city": {"custom": {
        "label": "small grid",
        "archetype": "grid",
        "arterial_count": 6,
        "collector_count": 6,
        "seed": 3,
        "peak_windows": [[7, 9], [17, 19]]
    }},
    "algorithms": ["ahmoa", "nsga3_style", "nsde3", "moead"],
    "ahmoa": {"population_size": 24, "max_generations": 10, "n_e": 2},
    "repetitions": 2,
    "seed": 2024,
    "output_dir": "experiment-out"
}"#;

fn main() -> signal_moo::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::from_json(DEFAULT_CONFIG)?,
    };
    let manifest = run_experiment(&cfg)?;
    println!(
        "{} ({} intersections), master seed {}",
        manifest.city_label, manifest.intersections, manifest.master_seed
    );
    for a in &manifest.artifacts {
        println!("  {:<12?} {}", a.kind, a.path.display());
    }
    let global = read_front_csv(cfg.output_dir.join("global_front.csv"))?;
    println!("global front: {} records", global.len());
    Ok(())
}
