//! The optimization layer: Euclidean projection of target feature
//! expectations onto the feature-expectations polytope.
//!
//! All solvers minimize `h(x) = 0.5 ||x - Phi_E||^2` over the polytope using
//! the planning oracle as linear-minimization oracle, maintain the iterate as
//! an explicit convex combination of deterministic policies (the active set),
//! and emit a [`SolverTrace`] plus the final [`MixedPolicy`].

mod active_set;
mod ascg;
mod cg;
mod mwal;
mod sfw;
mod trace;

pub use ascg::solve_ascg;
pub use cg::solve_cg;
pub use mwal::{mwal_learning_rate, solve_mwal};
pub use sfw::{solve_sfw, SfwSchedule};
pub use trace::{SolverTrace, StepKind, TraceRow};

pub(crate) use active_set::{ActiveSet, Atom};

use crate::error::{Error, Result};
use crate::mdp::{
    feature_expectations_exact, mixed_feature_expectations, DeterministicPolicy, FeatureVector,
    MdpSpec, MixedPolicy, StochasticPolicy,
};
use crate::oracle::EnvView;
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The projection objective `h(x) = 0.5 ||x - Phi_E||^2`.
///
/// 1-smooth and 1-strongly convex; the gradient is `x - Phi_E`.
#[derive(Debug, Clone)]
pub struct Objective {
    pub phi_e: FeatureVector,
}

impl Objective {
    pub const BETA: f64 = 1.0;
    pub const SIGMA: f64 = 1.0;

    pub fn new(phi_e: FeatureVector) -> Self {
        Objective { phi_e }
    }

    pub fn h(&self, x: &FeatureVector) -> f64 {
        let d = x.sub(&self.phi_e);
        0.5 * d.dot(&d)
    }

    pub fn grad(&self, x: &FeatureVector) -> FeatureVector {
        x.sub(&self.phi_e)
    }

    pub fn dist(&self, x: &FeatureVector) -> f64 {
        x.sub(&self.phi_e).norm()
    }
}

/// Exact line search for the quadratic objective.
///
/// Returns the minimizer of `h(x + gamma d)` over `[0, gamma_max]`:
/// the ratio `(Phi_E - x) . d / (d . d)` clamped to the interval. Unclamped
/// it coincides with the classical projection-method step size.
pub fn line_search_quadratic(
    x: &FeatureVector,
    d: &FeatureVector,
    phi_e: &FeatureVector,
    gamma_max: f64,
) -> Result<f64> {
    let dd = d.dot(d);
    if dd == 0.0 {
        return Err(Error::InvalidArgument("zero direction in line search".into()));
    }
    if gamma_max <= 0.0 {
        return Err(Error::InvalidArgument("gamma_max must be positive".into()));
    }
    let ratio = phi_e.sub(x).dot(d) / dd;
    Ok(ratio.max(0.0).min(gamma_max))
}

/// Worst-case value gap over the L2 unit ball of reward weights:
/// `-||Phi(psi) - Phi_E||`. Zero exactly when the mixture matches the target.
pub fn al_margin(mdp: &MdpSpec, psi: &MixedPolicy, phi_e: &FeatureVector) -> Result<f64> {
    let phi = mixed_feature_expectations(mdp, psi)?;
    Ok(-phi.distance(phi_e))
}

/// How a solver picks its initial deterministic policy.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// The all-action-0 policy.
    #[default]
    Zero,
    /// Uniformly random action per state, drawn from the solver seed.
    Random,
    #[serde(skip)]
    Fixed(DeterministicPolicy),
}

/// Step-size rule for the plain conditional-gradient solver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    #[default]
    LineSearch,
    /// `2/(t+1)`.
    Harmonic,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Iteration budget T.
    pub iterations: usize,
    pub seed: u64,
    pub init: InitPolicy,
    pub step_rule: StepRule,
}

impl SolverOptions {
    pub fn new(iterations: usize) -> Self {
        SolverOptions {
            iterations,
            seed: 0,
            init: InitPolicy::Zero,
            step_rule: StepRule::LineSearch,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitPolicy) -> Self {
        self.init = init;
        self
    }

    pub fn with_step_rule(mut self, rule: StepRule) -> Self {
        self.step_rule = rule;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("need at least one iteration".into()));
        }
        Ok(())
    }
}

/// Everything a finished run exposes.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub mixed: MixedPolicy,
    pub trace: SolverTrace,
    /// Tracked iterate after each iteration (1-based, aligned with trace rows).
    pub iterates: Vec<FeatureVector>,
    pub initial_point: FeatureVector,
    pub initial_h: f64,
    pub final_point: FeatureVector,
    /// Largest observed `||sum_i alpha_i phi_i - x_t||_inf` across iterations.
    pub max_repr_drift: f64,
    /// Largest observed `|sum_i alpha_i - 1|` across iterations.
    pub max_coeff_err: f64,
}

impl SolverOutput {
    pub fn final_h(&self, objective: &Objective) -> f64 {
        objective.h(&self.final_point)
    }
}

/// Representation drift that aborts a run as an internal error.
pub(crate) const DRIFT_HARD_LIMIT: f64 = 1e-6;

pub(crate) const ORACLE_SEED_TAG: u64 = 0x0a_c1e0;
pub(crate) const INIT_SEED_TAG: u64 = 0x171_717;
pub(crate) const GRAD_SEED_TAG: u64 = 0x96ad;

pub(crate) fn initial_policy(n_states: usize, n_actions: usize, opts: &SolverOptions) -> DeterministicPolicy {
    match &opts.init {
        InitPolicy::Zero => DeterministicPolicy::zeros(n_states),
        InitPolicy::Random => {
            let mut rng = rng::substream(rng::mix(opts.seed, INIT_SEED_TAG), 0);
            DeterministicPolicy {
                actions: (0..n_states).map(|_| rng.random_range(0..n_actions)).collect(),
            }
        }
        InitPolicy::Fixed(p) => p.clone(),
    }
}

/// Exact feature expectations of the current active set, for diagnostics in
/// simulator mode. `None` when no tensor is available.
pub(crate) fn exact_eval_point(active: &ActiveSet) -> Option<FeatureVector> {
    active.exact_combination()
}

/// Point the trace's `h`/`dist` columns are computed from: the tracked
/// iterate in exact mode, the exact active-set combination when a tensor is
/// available for diagnostics, otherwise the tracked (estimated) iterate.
pub(crate) fn trace_eval_point(
    x: &FeatureVector,
    active: &ActiveSet,
    oracle_is_exact: bool,
    env: &EnvView,
) -> FeatureVector {
    if oracle_is_exact {
        x.clone()
    } else if env.mdp.is_some() {
        exact_eval_point(active).unwrap_or_else(|| x.clone())
    } else {
        x.clone()
    }
}

/// Mixes an expert policy's exact feature expectations with those of the
/// uniform random policy; `blend = 0` keeps the expert.
pub fn blended_target(
    mdp: &MdpSpec,
    expert: &StochasticPolicy,
    blend_uniform: f64,
) -> Result<FeatureVector> {
    let phi_expert = feature_expectations_exact(mdp, expert)?;
    if blend_uniform == 0.0 {
        return Ok(phi_expert);
    }
    let uniform = StochasticPolicy::uniform(mdp.n_states, mdp.n_actions);
    let phi_uniform = feature_expectations_exact(mdp, &uniform)?;
    Ok(phi_expert
        .scale(1.0 - blend_uniform)
        .add_scaled(blend_uniform, &phi_uniform))
}
