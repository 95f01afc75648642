//! Prints the hourly demand model: period, expected time-of-day factor,
//! weather factor, and a sampled volume for one intersection under the
//! default and the Istanbul-style uplifted profile.
//!
//! ```sh
//! cargo run --example demand_profile
//! ```

use signal_moo::demand::{
    effective_saturation, generate_volumes, weather_factor, DemandProfile, HOURS_PER_DAY,
};
use signal_moo::network::CityPreset;

fn main() -> signal_moo::Result<()> {
    let city = CityPreset::Istanbul.config(1);
    let net = city.build()?;
    let plain = DemandProfile::default();
    let uplifted = city.demand_profile();
    let a = generate_volumes(&net, &plain, 11, 1);
    let b = generate_volumes(&net, &uplifted, 11, 1);
    let base = net.intersections()[0].base_saturation;

    println!("intersection 0: base saturation {base:.0} veh/h");
    println!("hour  period    E[factor]  weather  capacity  volume  volume(+{:.0}%)", 100.0 * uplifted.city_uplift);
    for t in 0..HOURS_PER_DAY {
        println!(
            "{t:>4}  {:<9} {:>9.3}  {:>7.3}  {:>8.0}  {:>6.0}  {:>6.0}",
            format!("{:?}", plain.period(t)),
            plain.expected_factor(t),
            weather_factor(t, HOURS_PER_DAY),
            effective_saturation(base, t, HOURS_PER_DAY),
            a.values.get(0, t),
            b.values.get(0, t),
        );
    }

    let mut csv = Vec::new();
    a.write_csv(&mut csv).expect("in-memory write");
    let text = String::from_utf8(csv).expect("utf8");
    println!("\nfirst rows of the volume CSV:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
