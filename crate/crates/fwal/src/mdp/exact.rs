//! Exact (dynamic-programming) feature expectations and occupancy measures.
//!
//! The discounted state-visitation vector `d` solves `d = D + gamma * P_pi^T d`;
//! feature expectations are `Phi_j = sum_s d(s) * phi_j(s)`. The system is
//! solved by dense LU for `n_states <= 2000` and by fixed-point iteration to a
//! 1e-10 residual above that.

use super::{
    DeterministicPolicy, FeatureVector, MdpSpec, MixedPolicy, OccupancyMeasure, StochasticPolicy,
};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Largest state count solved by direct dense LU.
const DIRECT_SOLVE_LIMIT: usize = 2000;
const FIXED_POINT_RESIDUAL: f64 = 1e-10;

enum PolicyRef<'a> {
    Det(&'a DeterministicPolicy),
    Stoch(&'a StochasticPolicy),
}

impl PolicyRef<'_> {
    /// `P_pi[s][s'] = sum_a pi(a|s) P[a][s][s']`.
    fn transition_matrix(&self, mdp: &MdpSpec) -> Vec<Vec<f64>> {
        let n = mdp.n_states;
        let mut p = vec![vec![0.0; n]; n];
        for s in 0..n {
            match self {
                PolicyRef::Det(policy) => {
                    p[s].copy_from_slice(&mdp.transitions[policy.actions[s]][s]);
                }
                PolicyRef::Stoch(policy) => {
                    for a in 0..mdp.n_actions {
                        let w = policy.probs[s][a];
                        if w == 0.0 {
                            continue;
                        }
                        for (sp, q) in mdp.transitions[a][s].iter().enumerate() {
                            p[s][sp] += w * q;
                        }
                    }
                }
            }
        }
        p
    }
}

fn check_policy_shape(mdp: &MdpSpec, policy: &PolicyRef) -> Result<()> {
    match policy {
        PolicyRef::Det(p) => {
            if p.actions.len() != mdp.n_states {
                return Err(Error::InvalidPolicy("policy length != n_states".into()));
            }
            if p.actions.iter().any(|a| *a >= mdp.n_actions) {
                return Err(Error::InvalidPolicy("action index out of range".into()));
            }
        }
        PolicyRef::Stoch(p) => {
            if p.probs.len() != mdp.n_states || p.probs.iter().any(|r| r.len() != mdp.n_actions) {
                return Err(Error::InvalidPolicy("policy shape mismatch".into()));
            }
        }
    }
    Ok(())
}

fn visitation_impl(mdp: &MdpSpec, policy: PolicyRef) -> Result<Vec<f64>> {
    check_policy_shape(mdp, &policy)?;
    let n = mdp.n_states;
    let gamma = mdp.discount;
    let p_pi = policy.transition_matrix(mdp);

    if n <= DIRECT_SOLVE_LIMIT {
        // (I - gamma * P_pi^T) d = D
        let mut m = DMatrix::<f64>::identity(n, n);
        for s in 0..n {
            for sp in 0..n {
                m[(sp, s)] -= gamma * p_pi[s][sp];
            }
        }
        let rhs = DVector::from_column_slice(&mdp.initial_dist);
        let d = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("visitation system is singular".into()))?;
        Ok(d.iter().copied().collect())
    } else {
        let mut d = mdp.initial_dist.clone();
        let mut next = vec![0.0; n];
        for _ in 0..200_000 {
            for (sp, out) in next.iter_mut().enumerate() {
                *out = mdp.initial_dist[sp];
            }
            for s in 0..n {
                let ds = d[s];
                if ds == 0.0 {
                    continue;
                }
                for (sp, q) in p_pi[s].iter().enumerate() {
                    next[sp] += gamma * ds * q;
                }
            }
            let residual = d
                .iter()
                .zip(&next)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            std::mem::swap(&mut d, &mut next);
            if residual < FIXED_POINT_RESIDUAL {
                return Ok(d);
            }
        }
        Err(Error::Numerical("visitation fixed point did not converge".into()))
    }
}

/// Discounted state-visitation vector of a stochastic policy.
pub fn visitation(mdp: &MdpSpec, policy: &StochasticPolicy) -> Result<Vec<f64>> {
    visitation_impl(mdp, PolicyRef::Stoch(policy))
}

fn features_from_visitation(mdp: &MdpSpec, d: &[f64]) -> FeatureVector {
    let k = mdp.feature_dim();
    let mut phi = vec![0.0; k];
    for (s, ds) in d.iter().enumerate() {
        for (j, f) in mdp.features[s].iter().enumerate() {
            phi[j] += ds * f;
        }
    }
    FeatureVector(phi)
}

/// Exact feature expectations of a stochastic policy.
pub fn feature_expectations_exact(mdp: &MdpSpec, policy: &StochasticPolicy) -> Result<FeatureVector> {
    let d = visitation_impl(mdp, PolicyRef::Stoch(policy))?;
    Ok(features_from_visitation(mdp, &d))
}

/// Exact feature expectations of a deterministic policy.
pub fn feature_expectations_exact_det(
    mdp: &MdpSpec,
    policy: &DeterministicPolicy,
) -> Result<FeatureVector> {
    let d = visitation_impl(mdp, PolicyRef::Det(policy))?;
    Ok(features_from_visitation(mdp, &d))
}

/// Occupancy measure `x[s][a] = d(s) * pi(a|s)`.
pub fn occupancy_measure(mdp: &MdpSpec, policy: &StochasticPolicy) -> Result<OccupancyMeasure> {
    let d = visitation_impl(mdp, PolicyRef::Stoch(policy))?;
    let x = d
        .iter()
        .zip(&policy.probs)
        .map(|(ds, row)| row.iter().map(|p| ds * p).collect())
        .collect();
    Ok(OccupancyMeasure { x })
}

/// Coefficient-weighted sum of atom feature expectations.
pub fn mixed_feature_expectations(mdp: &MdpSpec, psi: &MixedPolicy) -> Result<FeatureVector> {
    let k = mdp.feature_dim();
    let mut phi = FeatureVector::zeros(k);
    for (policy, coeff) in &psi.atoms {
        let atom_phi = feature_expectations_exact_det(mdp, policy)?;
        phi = phi.add_scaled(*coeff, &atom_phi);
    }
    Ok(phi)
}

/// Result of collapsing a mixed policy into a single stochastic policy.
#[derive(Debug, Clone)]
pub struct MixedConversion {
    pub policy: StochasticPolicy,
    /// States with zero aggregate occupancy under every atom; their action
    /// distribution was set to uniform (the defining ratio is 0/0 there, and
    /// the choice cannot affect feature expectations).
    pub unreachable_states: Vec<usize>,
}

/// Occupancy cutoff below which a state counts as unreachable. True zeros
/// survive the linear solve only up to rounding noise (~1e-16 here).
const UNREACHABLE_TOL: f64 = 1e-12;

/// Converts a mixed policy into a stochastic policy with identical feature
/// expectations: `pi(a|s)` proportional to the psi-weighted occupancy mass.
pub fn mixed_to_stochastic(mdp: &MdpSpec, psi: &MixedPolicy) -> Result<MixedConversion> {
    let n = mdp.n_states;
    let n_actions = mdp.n_actions;
    let mut mass = vec![vec![0.0; n_actions]; n];
    for (policy, coeff) in &psi.atoms {
        let d = visitation_impl(mdp, PolicyRef::Det(policy))?;
        for s in 0..n {
            mass[s][policy.actions[s]] += coeff * d[s];
        }
    }
    let mut probs = vec![vec![0.0; n_actions]; n];
    let mut unreachable = Vec::new();
    for s in 0..n {
        let total: f64 = mass[s].iter().map(|v| v.max(0.0)).sum();
        if total <= UNREACHABLE_TOL {
            probs[s] = vec![1.0 / n_actions as f64; n_actions];
            unreachable.push(s);
        } else {
            for a in 0..n_actions {
                probs[s][a] = mass[s][a].max(0.0) / total;
            }
        }
    }
    Ok(MixedConversion {
        policy: StochasticPolicy::new(probs)?,
        unreachable_states: unreachable,
    })
}

/// `V^pi = w . Phi(pi)` under exact feature expectations.
pub fn policy_value(mdp: &MdpSpec, policy: &StochasticPolicy, w: &FeatureVector) -> Result<f64> {
    if w.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("reward weights must be finite".into()));
    }
    Ok(feature_expectations_exact(mdp, policy)?.dot(w))
}
