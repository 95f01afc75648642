//! Runs the adaptive optimizer and the three baselines on the same
//! scenario and evaluation draws, merges their fronts and reports how many
//! global-front records each algorithm contributes.
//!
//! ```sh
//! cargo run --release --example compare_baselines -- [repetitions]
//! ```

use std::collections::BTreeMap;

use signal_moo::baselines::{Algorithm, MoeadParams};
use signal_moo::demand::DemandProfile;
use signal_moo::experiment::{format_log, merge_global_front, FrontRecord};
use signal_moo::moea::AhmoaConfig;
use signal_moo::network::build_grid_city;
use signal_moo::rng::derive_seed;

fn main() -> signal_moo::Result<()> {
    let repetitions: u64 = std::env::args().nth(1).map_or(3, |s| s.parse().expect("repetitions"));
    let net = build_grid_city(10, 10, 7)?;
    let profile = DemandProfile::default();

    for rep in 0..repetitions {
        let mut pool = Vec::new();
        for (k, algorithm) in Algorithm::ALL.into_iter().enumerate() {
            let cfg = AhmoaConfig {
                population_size: 40,
                max_generations: 20,
                n_e: 3,
                seed: derive_seed(100, &[k as u64, rep]),
                evaluation_seed: Some(derive_seed(100, &[rep])),
                ..AhmoaConfig::default()
            };
            let run = algorithm.run(&net, &profile, &cfg, &MoeadParams::default())?;
            for s in &run.front {
                pool.push(FrontRecord::from_solution(algorithm.label(), s)?);
            }
        }
        let merged = merge_global_front(pool);
        let mut share = BTreeMap::new();
        for r in &merged {
            *share.entry(r.algorithm.clone()).or_insert(0) += 1;
        }
        println!("repetition {rep}: {} global records {share:?}", merged.len());
        for r in merged.iter().take(5) {
            let logs: Vec<String> = r.log_objectives.iter().map(|&v| format_log(v)).collect();
            println!("  {:<12} {}", r.algorithm, logs.join("  "));
        }
    }
    Ok(())
}
