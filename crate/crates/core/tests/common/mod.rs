//! Shared fixtures and generators for the integration suites.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use restless_core::model::{ArmModel, ControlVector, PopulationVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn identity_model() -> ArmModel {
    ArmModel::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        0.5,
    )
    .unwrap()
}

pub fn four_state_model() -> ArmModel {
    ArmModel::new(
        vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.9, 0.0, 0.1, 0.0],
            vec![0.0, 0.0, 0.9, 0.1],
            vec![0.0, 0.0, 0.1, 0.9],
        ],
        vec![
            vec![0.9, 0.1, 0.0, 0.0],
            vec![0.1, 0.9, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.1, 0.0, 0.9, 0.0],
        ],
        vec![0.0, 0.0, 1.0, 1.0],
        vec![1.0, 1.0, 0.0, 0.0],
        0.5,
    )
    .unwrap()
}

pub fn four_state_x_init() -> PopulationVector {
    PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap()
}

/// Random stochastic row of length `s` with strictly positive entries.
pub fn positive_row(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..s).map(|_| rng.gen::<f64>() + 0.05).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Random model with strictly positive transitions (hence weakly
/// communicating and aperiodic).
pub fn random_positive_model(rng: &mut ChaCha8Rng, s: usize, alpha: f64) -> ArmModel {
    let p0: Vec<Vec<f64>> = (0..s).map(|_| positive_row(rng, s)).collect();
    let p1: Vec<Vec<f64>> = (0..s).map(|_| positive_row(rng, s)).collect();
    let r0: Vec<f64> = (0..s).map(|_| rng.gen()).collect();
    let r1: Vec<f64> = (0..s).map(|_| rng.gen()).collect();
    ArmModel::new(p0, p1, r0, r1, alpha).unwrap()
}

/// Random point of the simplex.
pub fn random_simplex(rng: &mut ChaCha8Rng, s: usize) -> PopulationVector {
    let raw: Vec<f64> = (0..s).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    PopulationVector::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

/// Random feasible control: the linear control plus feasibility-preserving
/// mass transfers.
pub fn random_feasible_control(
    rng: &mut ChaCha8Rng,
    x: &PopulationVector,
    alpha: f64,
) -> ControlVector {
    let s = x.len();
    let mut u: Vec<f64> = x.as_slice().iter().map(|&v| alpha * v).collect();
    for _ in 0..4 * s {
        let from = rng.gen_range(0..s);
        let to = rng.gen_range(0..s);
        if from == to {
            continue;
        }
        let room = (x[to] - u[to]).min(u[from]);
        if room <= 0.0 {
            continue;
        }
        let shift = rng.gen::<f64>() * room;
        u[from] -= shift;
        u[to] += shift;
    }
    ControlVector::new(u, alpha).unwrap()
}
