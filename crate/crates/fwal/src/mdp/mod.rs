//! Tabular MDP-without-reward representation and feature-expectation
//! computation.
//!
//! An [`MdpSpec`] carries dynamics, a discount factor, an initial-state
//! distribution and a per-state feature map, but no reward. Policies come in
//! three flavors: deterministic, stochastic, and mixed (a distribution over
//! deterministic policies executed by sampling one at time zero). Feature
//! expectations are computed either exactly, by solving the discounted
//! state-visitation linear system, or by Monte Carlo rollouts through a
//! [`Simulator`].

mod exact;
mod sampling;

pub use exact::{
    feature_expectations_exact, feature_expectations_exact_det, mixed_feature_expectations,
    mixed_to_stochastic, occupancy_measure, policy_value, visitation, MixedConversion,
};
pub use sampling::{
    discounted_feature_sum, feature_expectations_mc, ActionSelector, MatrixSimulator, Simulator,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Row-sum / distribution tolerance used when validating inputs.
pub const PROB_TOL: f64 = 1e-9;

/// A point in feature space: feature expectations, gradients, reward weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(k: usize) -> Self {
        FeatureVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &FeatureVector) -> FeatureVector {
        FeatureVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &FeatureVector) -> FeatureVector {
        FeatureVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> FeatureVector {
        FeatureVector(self.0.iter().map(|a| c * a).collect())
    }

    /// `self + c * other`, elementwise.
    pub fn add_scaled(&self, c: f64, other: &FeatureVector) -> FeatureVector {
        FeatureVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.sub(other).norm()
    }
}

/// A tabular MDP without reward.
///
/// Serialized form matches the documented JSON schema:
/// `{"n_states", "n_actions", "gamma", "transitions", "initial_dist", "features"}`
/// with `transitions` action-major (`transitions[a][s][s']`). All
/// probability rows are validated on construction and on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawMdpSpec")]
pub struct MdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    #[serde(rename = "gamma")]
    pub discount: f64,
    /// `transitions[a][s][s']`, each row a probability vector.
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// Initial-state distribution.
    pub initial_dist: Vec<f64>,
    /// `features[s]` in `[0,1]^k`.
    pub features: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawMdpSpec {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    transitions: Vec<Vec<Vec<f64>>>,
    initial_dist: Vec<f64>,
    features: Vec<Vec<f64>>,
}

impl TryFrom<RawMdpSpec> for MdpSpec {
    type Error = Error;

    fn try_from(raw: RawMdpSpec) -> Result<Self> {
        MdpSpec::new(
            raw.n_states,
            raw.n_actions,
            raw.gamma,
            raw.transitions,
            raw.initial_dist,
            raw.features,
        )
    }
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| *p < 0.0) {
        return Err(Error::InvalidMdp(format!("{what} has a negative entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidMdp(format!(
            "{what} sums to {sum}, expected 1 within {PROB_TOL}"
        )));
    }
    Ok(())
}

impl MdpSpec {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        discount: f64,
        transitions: Vec<Vec<Vec<f64>>>,
        initial_dist: Vec<f64>,
        features: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("need at least one state and action".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidMdp(format!(
                "discount must lie in [0,1), got {discount}"
            )));
        }
        if transitions.len() != n_actions {
            return Err(Error::InvalidMdp("transitions must be action-major".into()));
        }
        for (a, per_action) in transitions.iter().enumerate() {
            if per_action.len() != n_states {
                return Err(Error::InvalidMdp(format!(
                    "transitions[{a}] has {} rows, expected {n_states}",
                    per_action.len()
                )));
            }
            for (s, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::InvalidMdp(format!(
                        "transitions[{a}][{s}] has {} entries, expected {n_states}",
                        row.len()
                    )));
                }
                check_distribution(row, &format!("transition row P[{a}][{s}]"))?;
            }
        }
        if initial_dist.len() != n_states {
            return Err(Error::InvalidMdp("initial_dist length mismatch".into()));
        }
        check_distribution(&initial_dist, "initial distribution")?;
        if features.len() != n_states {
            return Err(Error::InvalidMdp("features must have one row per state".into()));
        }
        let k = features[0].len();
        if k == 0 {
            return Err(Error::InvalidMdp("feature dimension must be positive".into()));
        }
        for (s, row) in features.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMdp(format!(
                    "features[{s}] has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidMdp(format!(
                    "features[{s}] has an entry outside [0,1]"
                )));
            }
        }
        Ok(MdpSpec {
            n_states,
            n_actions,
            discount,
            transitions,
            initial_dist,
            features,
        })
    }

    /// Feature dimension `k`.
    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    /// Upper bound `1/(1-gamma)` on any feature-expectation entry.
    pub fn horizon_scale(&self) -> f64 {
        1.0 / (1.0 - self.discount)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeterministicPolicy {
    pub actions: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some(a) = actions.iter().find(|a| **a >= n_actions) {
            return Err(Error::InvalidPolicy(format!(
                "action index {a} out of range (n_actions = {n_actions})"
            )));
        }
        Ok(DeterministicPolicy { actions })
    }

    /// The all-action-0 policy.
    pub fn zeros(n_states: usize) -> Self {
        DeterministicPolicy {
            actions: vec![0; n_states],
        }
    }

    pub fn to_stochastic(&self, n_actions: usize) -> StochasticPolicy {
        let probs = self
            .actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        StochasticPolicy { probs }
    }
}

/// Action distribution per state; rows sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticPolicy {
    pub probs: Vec<Vec<f64>>,
}

impl StochasticPolicy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            if row.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidPolicy(format!("negative probability in state {s}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidPolicy(format!(
                    "action probabilities in state {s} sum to {sum}"
                )));
            }
        }
        Ok(StochasticPolicy { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        StochasticPolicy {
            probs: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }
}

/// A sparse distribution over deterministic policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPolicy {
    /// `(policy, coefficient)` pairs; coefficients form a distribution and
    /// policies are pairwise distinct.
    pub atoms: Vec<(DeterministicPolicy, f64)>,
}

impl MixedPolicy {
    pub fn new(atoms: Vec<(DeterministicPolicy, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPolicy("mixed policy needs at least one atom".into()));
        }
        if atoms.iter().any(|(_, c)| *c < 0.0) {
            return Err(Error::InvalidPolicy("mixed policy has a negative coefficient".into()));
        }
        let sum: f64 = atoms.iter().map(|(_, c)| c).sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidPolicy(format!(
                "mixed policy coefficients sum to {sum}"
            )));
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i].0 == atoms[j].0 {
                    return Err(Error::InvalidPolicy(format!(
                        "duplicate policy in atoms {i} and {j}; merge coefficients instead"
                    )));
                }
            }
        }
        Ok(MixedPolicy { atoms })
    }

    /// Single deterministic policy with coefficient 1.
    pub fn pure(policy: DeterministicPolicy) -> Self {
        MixedPolicy {
            atoms: vec![(policy, 1.0)],
        }
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }
}

/// Expected discounted state-action visitation counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    /// `x[s][a]`, nonnegative; total mass `1/(1-gamma)`.
    pub x: Vec<Vec<f64>>,
}

impl OccupancyMeasure {
    pub fn total_mass(&self) -> f64 {
        self.x.iter().flatten().sum()
    }

    /// State marginal `sum_a x[s][a]`.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.x.iter().map(|row| row.iter().sum()).collect()
    }
}
