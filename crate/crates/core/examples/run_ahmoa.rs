//! Runs the adaptive optimizer on a 10x10 grid and prints the strategy
//! probabilities per generation and the final front.
//!
//! ```sh
//! cargo run --release --example run_ahmoa -- [seed] [generations]
//! RUST_LOG=debug cargo run --release --example run_ahmoa
//! ```

use signal_moo::demand::DemandProfile;
use signal_moo::moea::{run_ahmoa, AhmoaConfig, Strategy};
use signal_moo::network::build_grid_city;

fn main() -> signal_moo::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let generations = args.next().map_or(20, |s| s.parse().expect("generations"));

    let net = build_grid_city(10, 10, 7)?;
    let cfg = AhmoaConfig {
        population_size: 40,
        max_generations: generations,
        n_e: 3,
        seed,
        ..AhmoaConfig::default()
    };
    let run = run_ahmoa(&net, &DemandProfile::default(), &cfg)?;

    let names: Vec<String> = Strategy::ALL.iter().map(|s| format!("{s:>6}")).collect();
    println!("gen {}  front   best f1", names.join(""));
    for h in &run.history {
        let t = &h.telemetry;
        let p: Vec<String> = t.p.iter().map(|x| format!("{x:>6.3}")).collect();
        println!("{:>3} {}  {:>5}  {:>8.1}", t.generation, p.join(""), t.front_size, t.best_f1);
    }

    println!("\nfinal front ({} solutions):", run.front.len());
    let mut front = run.front.clone();
    front.sort_by(|a, b| a.objectives.f1.total_cmp(&b.objectives.f1));
    for s in &front {
        let mean_lambda = s.lambda.iter().sum::<f64>() / s.lambda.len() as f64;
        println!(
            "  f1 {:>9.1}  f2 {:>11.1}  R {:>9.1}  mean λ {mean_lambda:.3}",
            s.objectives.f1, s.objectives.f2, s.objectives.r
        );
    }
    Ok(())
}
