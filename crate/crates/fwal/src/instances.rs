//! Seeded generators for tiny random MDP instances and mixed policies.
//!
//! Used by the verification battery and by tests that sweep randomized
//! instances.

use crate::mdp::{DeterministicPolicy, MdpSpec, MixedPolicy};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_distribution(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Exponential draws normalized to the simplex, with the float residue
    // folded into the last entry so the row sums to 1 exactly.
    let mut row: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3)
        .collect();
    let total: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= total;
    }
    let residue = 1.0 - row.iter().sum::<f64>();
    row[len - 1] += residue;
    row
}

/// Random dense MDP with `2..=max_states` states and `2..=max_actions`
/// actions, features uniform in `[0,1]^k`.
pub fn random_tiny_mdp(
    seed: u64,
    max_states: usize,
    max_actions: usize,
    k: usize,
    gamma: f64,
) -> MdpSpec {
    let mut rng = rng::root(seed);
    let n_states = rng.random_range(2..=max_states);
    let n_actions = rng.random_range(2..=max_actions);
    let transitions = (0..n_actions)
        .map(|_| {
            (0..n_states)
                .map(|_| random_distribution(n_states, &mut rng))
                .collect()
        })
        .collect();
    let initial = random_distribution(n_states, &mut rng);
    let features = (0..n_states)
        .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
        .collect();
    MdpSpec::new(n_states, n_actions, gamma, transitions, initial, features)
        .expect("generated instance must validate")
}

/// Random deterministic policy for `mdp`.
pub fn random_policy(mdp: &MdpSpec, rng: &mut ChaCha8Rng) -> DeterministicPolicy {
    DeterministicPolicy {
        actions: (0..mdp.n_states)
            .map(|_| rng.random_range(0..mdp.n_actions))
            .collect(),
    }
}

/// Random mixed policy with up to `max_atoms` distinct atoms.
pub fn random_mixed_policy(mdp: &MdpSpec, seed: u64, max_atoms: usize) -> MixedPolicy {
    let mut rng = rng::root(seed);
    let n_atoms = rng.random_range(1..=max_atoms);
    let mut atoms: Vec<(DeterministicPolicy, f64)> = Vec::new();
    for _ in 0..n_atoms {
        let policy = random_policy(mdp, &mut rng);
        let weight = rng.random::<f64>() + 0.05;
        match atoms.iter_mut().find(|(p, _)| *p == policy) {
            Some((_, c)) => *c += weight,
            None => atoms.push((policy, weight)),
        }
    }
    let total: f64 = atoms.iter().map(|(_, c)| c).sum();
    for (_, c) in atoms.iter_mut() {
        *c /= total;
    }
    let residue = 1.0 - atoms.iter().map(|(_, c)| c).sum::<f64>();
    atoms.last_mut().expect("nonempty").1 += residue;
    MixedPolicy::new(atoms).expect("generated mixture must validate")
}

/// Random point in the convex hull of `vertices` (exponential weights).
pub fn random_hull_point(
    vertices: &[crate::mdp::FeatureVector],
    rng: &mut ChaCha8Rng,
) -> crate::mdp::FeatureVector {
    let weights = random_distribution(vertices.len(), rng);
    let k = vertices[0].len();
    let mut point = crate::mdp::FeatureVector::zeros(k);
    for (v, w) in vertices.iter().zip(&weights) {
        point = point.add_scaled(*w, v);
    }
    point
}
