//! Step simulators and Monte Carlo feature-expectation estimation.

use super::{DeterministicPolicy, FeatureVector, MdpSpec, StochasticPolicy};
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Black-box view of an environment: sample initial states and transitions,
/// observe per-state features.
pub trait Simulator: Sync {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn feature_dim(&self) -> usize;
    fn gamma(&self) -> f64;
    fn features(&self, state: usize) -> &[f64];
    fn sample_initial(&self, rng: &mut ChaCha8Rng) -> usize;
    fn step(&self, state: usize, action: usize, rng: &mut ChaCha8Rng) -> usize;
}

/// Samples an index from a probability row by inverse-CDF walk.
pub(crate) fn sample_categorical(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Simulator backed by an explicit transition tensor.
pub struct MatrixSimulator<'a> {
    mdp: &'a MdpSpec,
}

impl<'a> MatrixSimulator<'a> {
    pub fn new(mdp: &'a MdpSpec) -> Self {
        MatrixSimulator { mdp }
    }
}

impl Simulator for MatrixSimulator<'_> {
    fn n_states(&self) -> usize {
        self.mdp.n_states
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions
    }

    fn feature_dim(&self) -> usize {
        self.mdp.feature_dim()
    }

    fn gamma(&self) -> f64 {
        self.mdp.discount
    }

    fn features(&self, state: usize) -> &[f64] {
        &self.mdp.features[state]
    }

    fn sample_initial(&self, rng: &mut ChaCha8Rng) -> usize {
        sample_categorical(&self.mdp.initial_dist, rng)
    }

    fn step(&self, state: usize, action: usize, rng: &mut ChaCha8Rng) -> usize {
        sample_categorical(&self.mdp.transitions[action][state], rng)
    }
}

/// Anything that can pick an action in a state.
pub trait ActionSelector: Sync {
    fn select(&self, state: usize, rng: &mut ChaCha8Rng) -> usize;
}

impl ActionSelector for DeterministicPolicy {
    fn select(&self, state: usize, _rng: &mut ChaCha8Rng) -> usize {
        self.actions[state]
    }
}

impl ActionSelector for StochasticPolicy {
    fn select(&self, state: usize, rng: &mut ChaCha8Rng) -> usize {
        sample_categorical(&self.probs[state], rng)
    }
}

/// One rollout of `horizon` steps; returns `sum_t gamma^t phi(s_t)`.
pub fn discounted_feature_sum(
    sim: &dyn Simulator,
    policy: &dyn ActionSelector,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> FeatureVector {
    let k = sim.feature_dim();
    let gamma = sim.gamma();
    let mut sum = vec![0.0; k];
    let mut discount = 1.0;
    let mut state = sim.sample_initial(rng);
    for t in 0..horizon {
        for (j, f) in sim.features(state).iter().enumerate() {
            sum[j] += discount * f;
        }
        if t + 1 == horizon {
            break;
        }
        let action = policy.select(state, rng);
        state = sim.step(state, action, rng);
        discount *= gamma;
    }
    FeatureVector(sum)
}

/// Monte Carlo estimate of the `horizon`-truncated feature expectations.
///
/// Each rollout draws from its own substream, so the estimate is
/// reproducible for a given seed regardless of execution order; rollout sums
/// are combined by pairwise summation.
pub fn feature_expectations_mc(
    mdp: &MdpSpec,
    policy: &StochasticPolicy,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<FeatureVector> {
    let sim = MatrixSimulator::new(mdp);
    feature_expectations_mc_sim(&sim, policy, n_rollouts, horizon, seed)
}

/// As [`feature_expectations_mc`] but against any simulator and selector.
pub fn feature_expectations_mc_sim(
    sim: &dyn Simulator,
    policy: &dyn ActionSelector,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<FeatureVector> {
    if n_rollouts == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "n_rollouts and horizon must be at least 1".into(),
        ));
    }
    let sums: Vec<Vec<f64>> = (0..n_rollouts)
        .map(|i| {
            let mut stream = rng::substream(seed, i as u64);
            discounted_feature_sum(sim, policy, horizon, &mut stream).0
        })
        .collect();
    let total = rng::pairwise_sum(&sums, sim.feature_dim());
    Ok(FeatureVector(
        total.iter().map(|v| v / n_rollouts as f64).collect(),
    ))
}
