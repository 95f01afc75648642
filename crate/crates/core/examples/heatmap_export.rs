//! Writes delay heatmaps: the Manhattan preset at the uniform baseline
//! plan in its 88x30 layout, and a 10x10 grid before and after
//! optimization.
//!
//! ```sh
//! cargo run --release --example heatmap_export -- [out_dir]
//! ```

use signal_moo::demand::DemandProfile;
use signal_moo::experiment::{delay_matrix, export_heatmap, BASELINE_LAMBDA};
use signal_moo::moea::{run_ahmoa, AhmoaConfig};
use signal_moo::network::{build_grid_city, CityPreset};

fn main() -> signal_moo::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "heatmaps".to_string());
    let eval = AhmoaConfig {
        n_e: 1,
        ..AhmoaConfig::default()
    };

    let city = CityPreset::Manhattan.config(1);
    let manhattan = city.build()?;
    let layout = city.layout_for(manhattan.len());
    let delays = delay_matrix(
        &vec![BASELINE_LAMBDA; manhattan.len()],
        &manhattan,
        &city.demand_profile(),
        5,
        &eval,
    )?;
    let path = format!("{out}/manhattan_baseline.csv");
    export_heatmap(&delays, layout, &path)?;
    println!("{} intersections, layout {layout:?} -> {path}", manhattan.len());

    let grid = build_grid_city(10, 10, 7)?;
    let profile = DemandProfile::default();
    let cfg = AhmoaConfig {
        population_size: 40,
        max_generations: 20,
        n_e: 3,
        seed: 1,
        ..AhmoaConfig::default()
    };
    let run = run_ahmoa(&grid, &profile, &cfg)?;
    let best = run
        .front
        .iter()
        .min_by(|a, b| a.objectives.f1.total_cmp(&b.objectives.f1))
        .expect("front is never empty");
    let seed = cfg.evaluation_seed();
    for (name, lambda) in [
        ("baseline", vec![BASELINE_LAMBDA; grid.len()]),
        ("optimized", best.lambda.to_vec()),
    ] {
        let delays = delay_matrix(&lambda, &grid, &profile, seed, &cfg)?;
        let mean = delays.as_slice().iter().sum::<f64>() / delays.as_slice().len() as f64;
        let path = format!("{out}/grid10_{name}.csv");
        export_heatmap(&delays, (10, 10), &path)?;
        println!("grid10 {name:<9} mean delay {mean:>7.2} s -> {path}");
    }
    Ok(())
}
