//! Explicit convex-combination representation of the solver iterate.

use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, FeatureVector, MixedPolicy};

/// Coefficients below this after an away step are treated as drop steps.
pub(crate) const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Atom {
    pub policy: DeterministicPolicy,
    /// Vertex value under the run's estimation mode; the representation
    /// tracks exactly these values.
    pub phi: FeatureVector,
    /// Exact dynamic-programming value when a tensor is available, for
    /// diagnostics.
    pub phi_exact: Option<FeatureVector>,
    pub coeff: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ActiveSet {
    pub atoms: Vec<Atom>,
}

impl ActiveSet {
    pub fn single(policy: DeterministicPolicy, phi: FeatureVector, phi_exact: Option<FeatureVector>) -> Self {
        ActiveSet {
            atoms: vec![Atom {
                policy,
                phi,
                phi_exact,
                coeff: 1.0,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn find(&self, policy: &DeterministicPolicy) -> Option<usize> {
        self.atoms.iter().position(|a| a.policy == *policy)
    }

    /// `sum_i alpha_i phi_i` under the representation values.
    pub fn combination(&self) -> FeatureVector {
        let k = self.atoms[0].phi.len();
        let mut x = FeatureVector::zeros(k);
        for atom in &self.atoms {
            x = x.add_scaled(atom.coeff, &atom.phi);
        }
        x
    }

    /// `sum_i alpha_i phi_exact_i`, when every atom carries an exact value.
    pub fn exact_combination(&self) -> Option<FeatureVector> {
        let k = self.atoms[0].phi.len();
        let mut x = FeatureVector::zeros(k);
        for atom in &self.atoms {
            x = x.add_scaled(atom.coeff, atom.phi_exact.as_ref()?);
        }
        Some(x)
    }

    pub fn coeff_sum(&self) -> f64 {
        self.atoms.iter().map(|a| a.coeff).sum()
    }

    /// Frank-Wolfe representation update: scale everything by `1 - gamma`
    /// and give the new vertex weight `gamma`, merging when the policy is
    /// already active. A full step (`gamma == 1`) resets the set.
    pub fn fw_update(
        &mut self,
        gamma: f64,
        policy: DeterministicPolicy,
        phi: FeatureVector,
        phi_exact: Option<FeatureVector>,
    ) {
        if gamma == 1.0 {
            self.atoms = vec![Atom {
                policy,
                phi,
                phi_exact,
                coeff: 1.0,
            }];
            return;
        }
        for atom in &mut self.atoms {
            atom.coeff *= 1.0 - gamma;
        }
        match self.find(&policy) {
            Some(i) => self.atoms[i].coeff += gamma,
            None => self.atoms.push(Atom {
                policy,
                phi,
                phi_exact,
                coeff: gamma,
            }),
        }
    }

    /// Away representation update against atom `z`: scale everything by
    /// `1 + gamma`, subtract `gamma` from `z`. Returns true when `z` left
    /// the set (a drop step, including coefficients pruned at [`PRUNE_TOL`]).
    pub fn away_update(&mut self, gamma: f64, z: usize) -> bool {
        for atom in &mut self.atoms {
            atom.coeff *= 1.0 + gamma;
        }
        self.atoms[z].coeff -= gamma;
        if self.atoms[z].coeff <= PRUNE_TOL {
            self.atoms.remove(z);
            true
        } else {
            false
        }
    }

    pub fn mixed_policy(&self) -> Result<MixedPolicy> {
        if self.atoms.is_empty() {
            return Err(Error::Numerical("empty active set".into()));
        }
        MixedPolicy::new(
            self.atoms
                .iter()
                .map(|a| (a.policy.clone(), a.coeff))
                .collect(),
        )
    }

    /// Sup-norm gap between the tracked iterate and the represented
    /// combination.
    pub fn drift(&self, x: &FeatureVector) -> f64 {
        self.combination().sub(x).norm_inf()
    }
}
