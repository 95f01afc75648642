//! Builds the four preset cities and a few custom ones, printing their
//! size, degree profile and road-class mix.
//!
//! ```sh
//! cargo run --release --example build_cities -- [seed] [out_dir]
//! ```

use std::collections::BTreeMap;

use signal_moo::network::{build_irregular_city, build_radial_city, CityPreset, TrafficNetwork};

fn describe(net: &TrafficNetwork) {
    let mut degrees = BTreeMap::new();
    let mut classes = BTreeMap::new();
    for (i, spec) in net.intersections().iter().enumerate() {
        *degrees.entry(net.degree(i).unwrap()).or_insert(0) += 1;
        *classes.entry(format!("{:?}", spec.road_class)).or_insert(0) += 1;
    }
    let mean_sat = net.intersections().iter().map(|s| s.base_saturation).sum::<f64>() / net.len() as f64;
    println!(
        "{:<14} nodes {:>5}  edges {:>5}  connected {}  mean saturation {:>7.1}",
        net.city_label(),
        net.len(),
        net.edges().len(),
        net.is_connected(),
        mean_sat
    );
    println!("{:<14} degrees {degrees:?}  classes {classes:?}", "");
}

fn main() -> signal_moo::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed must be an integer"));
    let out = args.next();

    for preset in CityPreset::ALL {
        let cfg = preset.config(seed);
        let net = cfg.build()?;
        describe(&net);
        let (rows, cols) = cfg.layout_for(net.len());
        println!("{:<14} heatmap layout {rows}x{cols}", "");
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).expect("create output dir");
            let name = net.city_label().to_lowercase().replace(' ', "_");
            let path = format!("{dir}/{name}.json");
            std::fs::write(&path, net.to_json()?).expect("write city");
            println!("{:<14} -> {path}", "");
        }
    }

    println!();
    describe(&build_radial_city(6, 3, seed)?);
    describe(&build_irregular_city(8, 8, seed)?);
    Ok(())
}
