//! Scores a handful of signal plans on a 10x10 grid: uniform red-light
//! ratios at several levels plus a random plan, showing how delay,
//! stability and robustness respond.
//!
//! ```sh
//! cargo run --release --example evaluate_objectives
//! ```

use rand::{Rng, SeedableRng};
use signal_moo::demand::DemandProfile;
use signal_moo::network::build_grid_city;
use signal_moo::objectives::{evaluate_solution, webster_delay, LambdaVector, MemoryBuffer};

fn main() -> signal_moo::Result<()> {
    println!("single approach, cycle 90 s, 1800 veh/h saturation:");
    for volume in [0.0, 900.0, 1500.0, 1800.0] {
        let row: Vec<String> = [0.05, 0.3, 0.5, 0.8]
            .iter()
            .map(|&l| format!("{:>8.2}", webster_delay(90.0, l, volume, 1800.0).unwrap()))
            .collect();
        println!("  v={volume:>6.0}  λ=.05/.3/.5/.8 -> {}", row.join(""));
    }

    let net = build_grid_city(10, 10, 7)?;
    let profile = DemandProfile::default();
    let n = net.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let random = LambdaVector::new((0..n).map(|_| rng.gen_range(0.05..=0.95)).collect())?;

    println!("\n10x10 grid, 5 draws, memory depth 5:");
    println!("{:<12} {:>12} {:>14} {:>12}", "plan", "f1 [s]", "f2", "R");
    let mut plans: Vec<(String, LambdaVector)> = [0.05, 0.25, 0.5, 0.75]
        .iter()
        .map(|&l| (format!("uniform {l}"), LambdaVector::uniform(n, l).unwrap()))
        .collect();
    plans.push(("random".into(), random));
    for (name, lambda) in plans {
        let mut memory = MemoryBuffer::new(5)?;
        let o = evaluate_solution(&lambda, &net, &profile, 42, 5, &mut memory)?;
        println!("{name:<12} {:>12.1} {:>14.1} {:>12.1}", o.f1, o.f2, o.r);
    }
    Ok(())
}
