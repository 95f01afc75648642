use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signal_moo::demand::{
    generate_volumes, time_of_day_factor, weather_factor, DemandProfile, HourlyMatrix,
    HOURS_PER_DAY,
};
use signal_moo::experiment::{merge_global_front, parse_front_csv, write_front_csv, FrontRecord};
use signal_moo::moea::operators::{
    de_offspring, ga_offspring, local_search_offspring, pso_offspring, DeParams, GaParams,
    PsoParams,
};
use signal_moo::moea::{
    crowding_distance, dominates, environmental_selection, non_dominated_sort, Solution,
};
use signal_moo::network::{build_grid_city, IntersectionSpec, RoadClass, TrafficNetwork};
use signal_moo::objectives::{
    average_delay, evaluate_solution, network_stability, robustness, webster_delay,
    HourlyObjectiveTable, LambdaBounds, LambdaVector, MemoryBuffer, ObjectiveVector,
};

fn brute_force_fronts(points: &[[f64; 3]]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(0u8..8).prop_map(|a| a.map(f64::from)), 1..max)
}

const BOUNDS: LambdaBounds = LambdaBounds { min: 0.05, max: 0.95 };

fn lambda_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..=0.95, n)
}

fn solutions(objectives: &[[f64; 3]]) -> Vec<Solution> {
    objectives
        .iter()
        .map(|&o| Solution {
            objectives: ObjectiveVector::from_array(o),
            ..Solution::new(LambdaVector::uniform(1, 0.5).unwrap())
        })
        .collect()
}

/// Six-node network built from per-node data and an edge list.
fn six_node_network(specs: &[(u32, f64, f64)], edges: &[(usize, usize)]) -> TrafficNetwork {
    let intersections = specs
        .iter()
        .enumerate()
        .map(|(id, &(cycle, sat, w))| IntersectionSpec {
            id,
            cycle_length: cycle,
            base_saturation: sat,
            road_class: RoadClass::Collector,
            type_weight: w,
        })
        .collect();
    TrafficNetwork::new("six", intersections, edges.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sort_matches_brute_force(pts in points(80)) {
        let fronts = non_dominated_sort(&pts);
        prop_assert_eq!(&fronts, &brute_force_fronts(&pts));
        let mut seen: Vec<usize> = fronts.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..pts.len()).collect::<Vec<_>>());
    }

    #[test]
    fn crowding_is_non_negative_with_infinite_extremes(pts in points(30)) {
        let d = crowding_distance(&pts);
        prop_assert_eq!(d.len(), pts.len());
        prop_assert!(d.iter().all(|&x| x >= 0.0 && !x.is_nan()));
        if pts.len() <= 2 {
            prop_assert!(d.iter().all(|x| x.is_infinite()));
        }
    }

    #[test]
    fn selection_respects_front_order(pts in prop::collection::vec(prop::array::uniform3(0.0f64..10.0), 40)) {
        let pop = solutions(&pts);
        let (parents, offspring) = (pop[..20].to_vec(), pop[20..].to_vec());
        let chosen = environmental_selection(parents, offspring, 20).unwrap();
        prop_assert_eq!(chosen.len(), 20);
        let fronts = non_dominated_sort(&pts);
        let rank_of = |o: &ObjectiveVector| {
            let i = pts.iter().position(|p| *p == o.to_array()).unwrap();
            fronts.iter().position(|f| f.contains(&i)).unwrap()
        };
        let worst_in = chosen.iter().map(|s| rank_of(&s.objectives)).max().unwrap();
        let kept: Vec<[f64; 3]> = chosen.iter().map(|s| s.objectives.to_array()).collect();
        for (r, front) in fronts.iter().enumerate().take(worst_in) {
            for &i in front {
                prop_assert!(kept.contains(&pts[i]), "front {} member {} dropped", r, i);
            }
        }
    }

    #[test]
    fn operators_stay_in_bounds(
        a in lambda_strategy(12),
        b in lambda_strategy(12),
        v in prop::collection::vec(-0.2f64..=0.2, 12),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ga = GaParams { sbx_eta: 15.0, mutation_eta: 20.0, mutation_probability: 0.5 };
        let de = DeParams { weight: 0.9, crossover_rate: 0.9 };
        let pso = PsoParams { inertia: 0.7, cognitive: 1.5, social: 1.5, velocity_max: 0.2 };
        let pop: Vec<Vec<f64>> = (0..5).map(|k| if k % 2 == 0 { a.clone() } else { b.clone() }).collect();

        let children = [
            ga_offspring(&a, &b, &ga, &BOUNDS, &mut rng),
            de_offspring(0, &pop, &de, &BOUNDS, &mut rng).unwrap(),
            local_search_offspring(&a, 0.3, &BOUNDS, &mut rng),
        ];
        for c in &children {
            prop_assert!(c.within(&BOUNDS));
        }
        let (x, vel) = pso_offspring(&a, &v, &b, &b, &pso, &BOUNDS, &mut rng);
        prop_assert!(x.within(&BOUNDS));
        prop_assert!(vel.iter().all(|u| u.abs() <= 0.2));
    }

    #[test]
    fn webster_is_monotone_in_lambda(
        cycle in 30.0f64..180.0,
        sat in 800.0f64..2400.0,
        ratio in 0.0f64..1.2,
        l1 in 0.05f64..=0.95,
        l2 in 0.05f64..=0.95,
    ) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let v = ratio * sat;
        let d_lo = webster_delay(cycle, lo, v, sat).unwrap();
        let d_hi = webster_delay(cycle, hi, v, sat).unwrap();
        prop_assert!(d_lo <= d_hi * (1.0 + 1e-12));
        prop_assert!(d_lo.is_finite() && d_lo >= 0.0);
    }

    #[test]
    fn objectives_are_permutation_equivariant(
        specs in prop::collection::vec(
            (prop::sample::select(vec![60u32, 90, 120]), 800.0f64..2400.0, 0.5f64..1.0),
            6,
        ),
        mask in prop::collection::vec(any::<bool>(), 15),
        lambda in lambda_strategy(6),
        perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        // perm[new] = old
        let mut inverse = [0usize; 6];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        // Each edge's temporal term and type weight belong to its lower
        // endpoint, so only relabelings that keep that endpoint lower
        // preserve f2.
        let pairs = (0..6).flat_map(|a| (a + 1..6).map(move |b| (a, b)));
        let edges: Vec<(usize, usize)> = pairs
            .zip(&mask)
            .filter(|&((a, b), &on)| on && inverse[a] < inverse[b])
            .map(|(e, _)| e)
            .collect();
        prop_assume!((0..6).all(|k| edges.iter().any(|&(a, b)| a == k || b == k)));

        let net = six_node_network(&specs, &edges);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..HOURS_PER_DAY).map(|_| rng.gen_range(0.0..3000.0)).collect())
            .collect();
        let volumes = HourlyMatrix::from_rows(rows.clone()).unwrap();

        let p_specs: Vec<_> = perm.iter().map(|&o| specs[o]).collect();
        let p_edges: Vec<_> = edges.iter().map(|&(a, b)| (inverse[a], inverse[b])).collect();
        let p_net = six_node_network(&p_specs, &p_edges);
        let p_volumes = HourlyMatrix::from_rows(perm.iter().map(|&o| rows[o].clone()).collect()).unwrap();
        let p_lambda: Vec<f64> = perm.iter().map(|&o| lambda[o]).collect();

        let f1 = average_delay(&lambda, &volumes, net.intersections()).unwrap().f1;
        let p_f1 = average_delay(&p_lambda, &p_volumes, p_net.intersections()).unwrap().f1;
        prop_assert!((f1 - p_f1).abs() <= 1e-9 * f1.abs().max(1.0));

        let f2 = network_stability(&lambda, &volumes, &net).unwrap().f2;
        let p_f2 = network_stability(&p_lambda, &p_volumes, &p_net).unwrap().f2;
        prop_assert!((f2 - p_f2).abs() <= 1e-9 * f2.abs().max(1.0));
    }

    #[test]
    fn delay_is_equivariant_under_any_relabeling(
        specs in prop::collection::vec(
            (prop::sample::select(vec![60u32, 90, 120]), 800.0f64..2400.0, 0.5f64..1.0),
            6,
        ),
        lambda in lambda_strategy(6),
        perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        let edges: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 1)).collect();
        let mut inverse = [0usize; 6];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..HOURS_PER_DAY).map(|_| rng.gen_range(0.0..3000.0)).collect())
            .collect();
        let net = six_node_network(&specs, &edges);
        let p_net = six_node_network(
            &perm.iter().map(|&o| specs[o]).collect::<Vec<_>>(),
            &edges.iter().map(|&(a, b)| (inverse[a], inverse[b])).collect::<Vec<_>>(),
        );
        let f1 = average_delay(&lambda, &HourlyMatrix::from_rows(rows.clone()).unwrap(), net.intersections())
            .unwrap()
            .f1;
        let p_f1 = average_delay(
            &perm.iter().map(|&o| lambda[o]).collect::<Vec<_>>(),
            &HourlyMatrix::from_rows(perm.iter().map(|&o| rows[o].clone()).collect()).unwrap(),
            p_net.intersections(),
        )
        .unwrap()
        .f1;
        prop_assert!((f1 - p_f1).abs() <= 1e-9 * f1);
    }

    #[test]
    fn delay_hours_sum_to_f1(lambda in lambda_strategy(4), seed in any::<u64>()) {
        let net = build_grid_city(2, 2, 1).unwrap();
        let field = generate_volumes(&net, &DemandProfile::default(), seed, 1);
        let d = average_delay(&lambda, &field.values, net.intersections()).unwrap();
        let total: f64 = d.per_hour.iter().sum::<f64>() / HOURS_PER_DAY as f64;
        prop_assert!((total - d.f1).abs() <= 1e-9 * d.f1);
    }

    #[test]
    fn robustness_scales_and_vanishes(
        a in prop::collection::vec(0.0f64..100.0, 2..30),
        c in 0.0f64..10.0,
        level in 0.0f64..50.0,
    ) {
        let flat = vec![level; a.len()];
        let base = robustness(&HourlyObjectiveTable::new(vec![a.clone(), flat.clone()]).unwrap());
        let scaled: Vec<f64> = a.iter().map(|x| x * c).collect();
        let r = robustness(&HourlyObjectiveTable::new(vec![scaled, flat.clone()]).unwrap());
        let scale = a.iter().fold(0.0f64, |m, x| m.max(*x)) * c;
        prop_assert!((r - c * base).abs() <= 1e-9 * c * base + 1e-12 * scale);
        prop_assert_eq!(robustness(&HourlyObjectiveTable::new(vec![flat.clone(), flat]).unwrap()), 0.0);
    }

    #[test]
    fn weather_and_factor_envelopes(t in 0usize..HOURS_PER_DAY, seed in any::<u64>()) {
        let w = weather_factor(t, HOURS_PER_DAY);
        prop_assert!((0.4 - 1e-12..=1.2 + 1e-12).contains(&w));
        prop_assert!((w - weather_factor(t + HOURS_PER_DAY, HOURS_PER_DAY)).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = time_of_day_factor(&DemandProfile::default(), t, &mut rng);
        prop_assert!((0.5..=1.95).contains(&f));
    }

    #[test]
    fn memory_holds_at_most_h(h in 1usize..5, pushes in 1usize..9) {
        let net = build_grid_city(2, 2, 1).unwrap();
        let profile = DemandProfile::default();
        let fields: Vec<_> = (0..pushes as u64).map(|d| generate_volumes(&net, &profile, 3, d)).collect();
        let mut memory = MemoryBuffer::new(h).unwrap();
        let mut last = None;
        for f in &fields {
            last = Some(memory.update(f).unwrap());
            prop_assert!(memory.len() <= h);
        }
        let recent = &fields[pushes.saturating_sub(h)..];
        let m = last.unwrap();
        for k in 0..m.as_slice().len() {
            let mean = recent.iter().map(|f| f.values.as_slice()[k]).sum::<f64>() / recent.len() as f64;
            prop_assert!((m.as_slice()[k] - mean).abs() <= 1e-9 * mean);
        }
    }

    #[test]
    fn evaluation_is_pure_under_reset_memory(lambda in lambda_strategy(4), seed in any::<u64>()) {
        let net = build_grid_city(2, 2, 1).unwrap();
        let profile = DemandProfile::default();
        let l = LambdaVector::new(lambda).unwrap();
        let a = evaluate_solution(&l, &net, &profile, seed, 3, &mut MemoryBuffer::new(5).unwrap()).unwrap();
        let b = evaluate_solution(&l, &net, &profile, seed, 3, &mut MemoryBuffer::new(5).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.f1 >= 0.0 && a.f2 >= 0.0 && a.r >= 0.0);
    }

    #[test]
    fn merged_front_is_clean(pts in prop::collection::vec(prop::array::uniform3(0.0f64..50.0), 1..60)) {
        let records: Vec<FrontRecord> = pts
            .iter()
            .enumerate()
            .map(|(k, p)| FrontRecord::new(if k % 3 == 0 { "a" } else { "b" }, ObjectiveVector::from_array(*p)).unwrap())
            .collect();
        let merged = merge_global_front(records);
        for (i, x) in merged.iter().enumerate() {
            for (j, y) in merged.iter().enumerate() {
                prop_assert!(!dominates(&x.raw_objectives.to_array(), &y.raw_objectives.to_array()));
                if i != j {
                    prop_assert_ne!(x.log_objectives, y.log_objectives);
                }
            }
        }
        prop_assert!(merged.windows(2).all(|w| w[0].log_objectives[0] <= w[1].log_objectives[0]));
    }

    #[test]
    fn front_csv_round_trips(pts in prop::collection::vec(prop::array::uniform3(0.0f64..1e7), 0..20)) {
        let records: Vec<FrontRecord> = pts
            .iter()
            .map(|p| FrontRecord::new("ahmoa", ObjectiveVector::from_array(*p)).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_front_csv(&records, &mut buf).unwrap();
        let back = parse_front_csv(std::str::from_utf8(&buf).unwrap(), "mem".as_ref()).unwrap();
        prop_assert_eq!(back, records);
    }
}

#[test]
fn five_draw_mean_matches_independent_recomputation() {
    let net = build_grid_city(2, 2, 5).unwrap();
    let profile = DemandProfile::default();
    let lambda = LambdaVector::new(vec![0.2, 0.4, 0.6, 0.8]).unwrap();
    let mut memory = MemoryBuffer::new(5).unwrap();
    let got = evaluate_solution(&lambda, &net, &profile, 17, 5, &mut memory).unwrap();

    let mut oracle_memory = MemoryBuffer::new(5).unwrap();
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for draw in 1..=5 {
        let m = oracle_memory
            .update(&generate_volumes(&net, &profile, 17, draw))
            .unwrap();
        f1 += average_delay(&lambda, &m, net.intersections()).unwrap().f1 / 5.0;
        f2 += network_stability(&lambda, &m, &net).unwrap().f2 / 5.0;
    }
    assert!((got.f1 - f1).abs() <= 1e-9 * f1);
    assert!((got.f2 - f2).abs() <= 1e-9 * f2);
}

#[test]
fn volume_means_converge_to_expected_factor() {
    let net = build_grid_city(2, 2, 9).unwrap();
    let profile = DemandProfile::default();
    let draws = 20_000;
    let mut sums = vec![0.0; net.len() * HOURS_PER_DAY];
    for d in 0..draws {
        let field = generate_volumes(&net, &profile, 123, d);
        for (s, v) in sums.iter_mut().zip(field.values.as_slice()) {
            *s += v;
        }
    }
    for i in 0..net.len() {
        let base = net.intersections()[i].base_saturation;
        for t in 0..HOURS_PER_DAY {
            let mean = sums[i * HOURS_PER_DAY + t] / draws as f64;
            let expected = base * profile.expected_factor(t);
            assert!(
                (mean - expected).abs() <= 0.01 * expected,
                "cell ({i}, {t}): {mean} vs {expected}"
            );
        }
    }
}
