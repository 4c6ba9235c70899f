#![allow(dead_code)]

use gsas_core::model::{ActionSet, AvailabilityModel, BimatrixGame, GameSpec, PayoffMatrix};
use gsas_core::rng::{stream, Purpose, Rng};
use rand::Rng as _;

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Up to `max_sets` distinct nonempty sets with Dirichlet-like random masses.
pub fn random_enumerated(n: usize, max_sets: usize, rng: &mut Rng) -> AvailabilityModel {
    let k = rng.gen_range(1..=max_sets.min((1 << n) - 1));
    let mut masks: Vec<u32> = Vec::new();
    while masks.len() < k {
        let m = rng.gen_range(1..(1u32 << n));
        if !masks.contains(&m) {
            masks.push(m);
        }
    }
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = raw.iter().sum();
    AvailabilityModel::enumerated(
        masks.into_iter().zip(raw).map(|(m, r)| (ActionSet::from_mask(m as u64), r / z)).collect(),
    )
}

/// Zero-sum game with uniform payoffs in [-1, 1] and enumerated availability.
pub fn random_enumerable_game(n: usize, max_sets: usize, seed: u64) -> GameSpec {
    let mut rng = stream(seed, 0xfd, Purpose::Generate);
    let payoff = PayoffMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let p1 = random_enumerated(n, max_sets, &mut rng);
    let p2 = random_enumerated(n, max_sets, &mut rng);
    GameSpec::new(payoff, p1, p2).expect("generated game is valid")
}

/// 3x3 general-sum game in which each player ranks actions by strict
/// dominance, so every restricted game has a unique pure equilibrium that
/// depends on the own set only.
pub fn dominance_game() -> BimatrixGame {
    let a = PayoffMatrix::from_rows(vec![vec![0.9, 0.2, -0.3], vec![0.5, -0.1, -0.6], vec![0.1, -0.5, -0.9]]).unwrap();
    let b = PayoffMatrix::from_rows(vec![vec![0.1, -0.4, 0.6], vec![-0.2, -0.8, 0.3], vec![0.4, -0.1, 0.9]]).unwrap();
    let p1 = AvailabilityModel::enumerated(vec![
        (ActionSet::new(vec![0, 1, 2]), 0.4),
        (ActionSet::new(vec![1, 2]), 0.35),
        (ActionSet::new(vec![0, 2]), 0.25),
    ]);
    let p2 = AvailabilityModel::enumerated(vec![
        (ActionSet::new(vec![0, 1]), 0.5),
        (ActionSet::new(vec![1, 2]), 0.3),
        (ActionSet::new(vec![0, 1, 2]), 0.2),
    ]);
    BimatrixGame::new(a, b, p1, p2).unwrap()
}

/// True when every action is available somewhere and the graph linking
/// actions that share a set is connected, which is exactly when a compact
/// weight vector is determined by its policies.
pub fn weights_identified(n: usize, support: &[(ActionSet, f64)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(a) = stack.pop() {
        for (s, _) in support.iter().filter(|(s, _)| s.contains(a)) {
            for b in s.iter() {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    seen.iter().all(|&x| x)
}
