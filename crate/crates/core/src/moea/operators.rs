//! Variation operators on red-light-ratio vectors. Every operator returns
//! a child clamped into the configured bounds.

use rand::Rng;

use crate::error::{Error, Result};
use crate::objectives::{LambdaBounds, LambdaVector};

/// Simulated binary crossover plus polynomial mutation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaParams {
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    /// Per-gene mutation probability.
    pub mutation_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeParams {
    pub weight: f64,
    pub crossover_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoParams {
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_max: f64,
}

/// Bounded SBX on two parents, producing two children.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    eta: f64,
    bounds: &LambdaBounds,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (bounds.min, bounds.max);
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    let exponent = 1.0 / (eta + 1.0);
    for j in 0..a.len() {
        if rng.gen::<f64>() > 0.5 || (a[j] - b[j]).abs() <= 1e-14 || hi <= lo {
            continue;
        }
        let (y1, y2) = if a[j] < b[j] { (a[j], b[j]) } else { (b[j], a[j]) };
        let gap = y2 - y1;
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(exponent)
            } else {
                (1.0 / (2.0 - u * alpha)).powf(exponent)
            }
        };
        let low_child = 0.5 * (y1 + y2 - spread(1.0 + 2.0 * (y1 - lo) / gap) * gap);
        let high_child = 0.5 * (y1 + y2 + spread(1.0 + 2.0 * (hi - y2) / gap) * gap);
        let (low_child, high_child) = (low_child.clamp(lo, hi), high_child.clamp(lo, hi));
        if rng.gen::<bool>() {
            c1[j] = high_child;
            c2[j] = low_child;
        } else {
            c1[j] = low_child;
            c2[j] = high_child;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation, in place.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &mut [f64],
    eta: f64,
    probability: f64,
    bounds: &LambdaBounds,
    rng: &mut R,
) {
    let (lo, hi) = (bounds.min, bounds.max);
    let width = hi - lo;
    if width <= 0.0 {
        return;
    }
    let exponent = 1.0 / (eta + 1.0);
    for y in x.iter_mut() {
        if rng.gen::<f64>() >= probability {
            continue;
        }
        let u: f64 = rng.gen();
        let deltaq = if u < 0.5 {
            let xy = 1.0 - (*y - lo) / width;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(exponent) - 1.0
        } else {
            let xy = 1.0 - (hi - *y) / width;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(exponent)
        };
        *y = (*y + deltaq * width).clamp(lo, hi);
    }
}

/// One GA child: SBX of the two parents, then polynomial mutation.
pub fn ga_offspring<R: Rng + ?Sized>(
    parent_a: &[f64],
    parent_b: &[f64],
    params: &GaParams,
    bounds: &LambdaBounds,
    rng: &mut R,
) -> LambdaVector {
    let (mut child, _) = sbx_crossover(parent_a, parent_b, params.sbx_eta, bounds, rng);
    polynomial_mutation(
        &mut child,
        params.mutation_eta,
        params.mutation_probability,
        bounds,
        rng,
    );
    LambdaVector::clamped(child, bounds)
}

/// DE/rand/1/bin trial vector for `population[parent]`.
pub fn de_offspring<R: Rng + ?Sized, V: AsRef<[f64]>>(
    parent: usize,
    population: &[V],
    params: &DeParams,
    bounds: &LambdaBounds,
    rng: &mut R,
) -> Result<LambdaVector> {
    let n = population.len();
    if n < 4 {
        return Err(Error::config(format!(
            "differential evolution needs a population of at least 4, got {n}"
        )));
    }
    if parent >= n {
        return Err(Error::IndexOutOfRange { index: parent, len: n });
    }
    let mut donors = [parent; 3];
    for k in 0..3 {
        loop {
            let candidate = rng.gen_range(0..n);
            if candidate != parent && !donors[..k].contains(&candidate) {
                donors[k] = candidate;
                break;
            }
        }
    }
    let x = population[parent].as_ref();
    let [r1, r2, r3] = donors.map(|d| population[d].as_ref());
    let forced = rng.gen_range(0..x.len().max(1));
    let trial = (0..x.len())
        .map(|j| {
            if j == forced || rng.gen::<f64>() < params.crossover_rate {
                r1[j] + params.weight * (r2[j] - r3[j])
            } else {
                x[j]
            }
        })
        .collect();
    Ok(LambdaVector::clamped(trial, bounds))
}

/// Particle move: returns the new position and velocity.
pub fn pso_offspring<R: Rng + ?Sized>(
    position: &[f64],
    velocity: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    params: &PsoParams,
    bounds: &LambdaBounds,
    rng: &mut R,
) -> (LambdaVector, Vec<f64>) {
    let vmax = params.velocity_max;
    let new_velocity: Vec<f64> = (0..position.len())
        .map(|j| {
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let v = params.inertia * velocity[j]
                + params.cognitive * r1 * (personal_best[j] - position[j])
                + params.social * r2 * (global_best[j] - position[j]);
            v.clamp(-vmax, vmax)
        })
        .collect();
    let moved = position
        .iter()
        .zip(&new_velocity)
        .map(|(x, v)| x + v)
        .collect();
    (LambdaVector::clamped(moved, bounds), new_velocity)
}

/// Uniform perturbation of every gene within `±radius`.
pub fn local_search_offspring<R: Rng + ?Sized>(
    parent: &[f64],
    radius: f64,
    bounds: &LambdaBounds,
    rng: &mut R,
) -> LambdaVector {
    let child = parent
        .iter()
        .map(|&x| {
            if radius > 0.0 {
                x + rng.gen_range(-radius..=radius)
            } else {
                x
            }
        })
        .collect();
    LambdaVector::clamped(child, bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    const B: LambdaBounds = LambdaBounds { min: 0.05, max: 0.95 };

    #[test]
    fn identical_parents_without_mutation() {
        let mut rng = seeded_rng(0);
        let p = vec![0.3, 0.6, 0.9, 0.05];
        let params = GaParams {
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            mutation_probability: 0.0,
        };
        for _ in 0..100 {
            assert_eq!(ga_offspring(&p, &p, &params, &B, &mut rng).as_slice(), &p[..]);
        }
    }

    #[test]
    fn sharp_sbx_stays_near_a_parent() {
        let mut rng = seeded_rng(2);
        let params = GaParams {
            sbx_eta: 1e6,
            mutation_eta: 20.0,
            mutation_probability: 0.0,
        };
        for _ in 0..500 {
            let a: Vec<f64> = (0..8).map(|_| rng.gen_range(0.05..=0.95)).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.gen_range(0.05..=0.95)).collect();
            let c = ga_offspring(&a, &b, &params, &B, &mut rng);
            for j in 0..8 {
                let near = (c[j] - a[j]).abs().min((c[j] - b[j]).abs());
                assert!(near < 1e-3, "gene {j}: {} vs {} / {}", c[j], a[j], b[j]);
            }
        }
    }

    #[test]
    fn de_collapses_to_first_donor() {
        let mut rng = seeded_rng(4);
        let pop: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 + 0.1 * i as f64; 5]).collect();
        let params = DeParams {
            weight: 0.0,
            crossover_rate: 1.0,
        };
        for _ in 0..50 {
            let trial = de_offspring(0, &pop, &params, &B, &mut rng).unwrap();
            assert!(pop[1..].iter().any(|p| p.as_slice() == trial.as_slice()));
        }
    }

    #[test]
    fn de_zero_crossover_changes_one_gene() {
        let mut rng = seeded_rng(5);
        let pop: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..10).map(|_| rng.gen_range(0.05..=0.95)).collect())
            .collect();
        let params = DeParams {
            weight: 0.5,
            crossover_rate: 0.0,
        };
        for _ in 0..100 {
            let trial = de_offspring(2, &pop, &params, &B, &mut rng).unwrap();
            let changed = trial.iter().zip(&pop[2]).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 1);
        }
    }

    #[test]
    fn de_needs_four() {
        let pop = vec![vec![0.5]; 3];
        let params = DeParams {
            weight: 0.5,
            crossover_rate: 0.9,
        };
        assert!(de_offspring(0, &pop, &params, &B, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn pso_identities() {
        let mut rng = seeded_rng(6);
        let x = vec![0.2, 0.5, 0.8];
        let frozen = PsoParams {
            inertia: 0.0,
            cognitive: 0.0,
            social: 0.0,
            velocity_max: 0.2,
        };
        let (pos, vel) = pso_offspring(&x, &[0.1, -0.1, 0.05], &[0.9; 3], &[0.1; 3], &frozen, &B, &mut rng);
        assert_eq!(pos.as_slice(), &x[..]);
        assert_eq!(vel, vec![0.0; 3]);

        let lively = PsoParams {
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            velocity_max: 0.2,
        };
        let (pos, vel) = pso_offspring(&x, &[0.0; 3], &x, &x, &lively, &B, &mut rng);
        assert_eq!(pos.as_slice(), &x[..]);
        assert_eq!(vel, vec![0.0; 3]);
    }

    #[test]
    fn local_search_identities() {
        let mut rng = seeded_rng(7);
        let p = vec![0.95, 0.5, 0.05];
        assert_eq!(local_search_offspring(&p, 0.0, &B, &mut rng).as_slice(), &p[..]);
        for _ in 0..200 {
            let c = local_search_offspring(&p, 0.02, &B, &mut rng);
            for j in 0..3 {
                assert!((c[j] - p[j]).abs() <= 0.02 + 1e-15);
            }
            assert!(c[0] <= 0.95 && c[2] >= 0.05);
        }
    }
}
