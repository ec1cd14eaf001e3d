//! The linear-minimization oracle: given reward weights `w`, find (an
//! approximation of) the optimal deterministic policy for reward
//! `r(s) = w . phi(s)` together with its feature expectations.
//!
//! Two backends: exact value iteration over an explicit transition tensor,
//! and tabular Q-learning against a step simulator with the feature
//! expectations of the greedy policy estimated by Monte Carlo.

use crate::error::{Error, Result};
use crate::mdp::{
    feature_expectations_exact_det, feature_expectations_mc_sim, DeterministicPolicy,
    FeatureVector, MdpSpec, Simulator,
};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How the oracle plans and how it reports feature expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Value iteration on the transition tensor; feature expectations by
    /// exact dynamic programming.
    ExactVi,
    /// Tabular Q-learning against the simulator; feature expectations by
    /// Monte Carlo rollouts.
    QLearning,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub mode: OracleMode,
    /// Value-function accuracy target for value iteration.
    pub vi_tolerance: f64,
    /// Q-learning step budget (N_RL).
    pub n_rl_steps: usize,
    pub epsilon_greedy: f64,
    /// Learning rate `lr_coeff / t^lr_exponent` at global step `t`.
    pub lr_coeff: f64,
    pub lr_exponent: f64,
    /// Steps before a Q-learning episode restarts from the initial
    /// distribution. The source setting leaves restart policy and Q
    /// initialization unspecified; we restart every `episode_horizon` steps
    /// and initialize Q to zero.
    pub episode_horizon: usize,
    /// Rollouts used to estimate feature expectations in simulator mode
    /// (N_Estimation).
    pub n_est_rollouts: usize,
    /// Rollout truncation horizon (H).
    pub horizon: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            mode: OracleMode::ExactVi,
            vi_tolerance: 1e-10,
            n_rl_steps: 300,
            epsilon_greedy: 0.05,
            lr_coeff: 0.2,
            lr_exponent: 0.75,
            episode_horizon: 50,
            n_est_rollouts: 300,
            horizon: 50,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vi_tolerance <= 0.0 {
            return Err(Error::InvalidConfig("vi_tolerance must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_greedy) {
            return Err(Error::InvalidConfig("epsilon_greedy must lie in [0,1]".into()));
        }
        if self.lr_coeff <= 0.0 || self.lr_exponent <= 0.0 {
            return Err(Error::InvalidConfig("learning-rate coefficients must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.seed = seed;
        cfg
    }
}

/// Best response returned by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub policy: DeterministicPolicy,
    /// Feature expectations of `policy` under the declared estimation mode.
    pub phi: FeatureVector,
    /// Planner work: value-iteration sweeps or Q-learning steps.
    pub planner_steps: usize,
    pub is_exact: bool,
}

/// What a solver can see of the environment: a step simulator, plus the
/// explicit tensor when one exists (exact planning and exact diagnostics).
#[derive(Clone, Copy)]
pub struct EnvView<'a> {
    pub mdp: Option<&'a MdpSpec>,
    pub sim: &'a dyn Simulator,
}

impl<'a> EnvView<'a> {
    pub fn new(mdp: Option<&'a MdpSpec>, sim: &'a dyn Simulator) -> Self {
        EnvView { mdp, sim }
    }

    pub fn require_mdp(&self) -> Result<&'a MdpSpec> {
        self.mdp.ok_or_else(|| {
            Error::InvalidConfig("this operation needs an explicit transition tensor".into())
        })
    }
}

/// Dispatches on `cfg.mode`.
pub fn best_response(env: &EnvView, w: &FeatureVector, cfg: &OracleConfig) -> Result<OracleResult> {
    match cfg.mode {
        OracleMode::ExactVi => best_response_exact(env.require_mdp()?, w, cfg),
        OracleMode::QLearning => best_response_q(env.sim, w, cfg),
    }
}

fn state_rewards(features: &[Vec<f64>], w: &FeatureVector) -> Vec<f64> {
    features
        .iter()
        .map(|row| row.iter().zip(&w.0).map(|(f, wi)| f * wi).sum())
        .collect()
}

/// Greedy argmax with lowest-index tie-breaking (strict improvement only).
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Optimal deterministic policy for reward `w . phi` by value iteration.
///
/// Stops when the sup-norm Bellman residual drops below
/// `vi_tolerance * (1 - gamma) / (2 gamma)`, which certifies the greedy
/// policy's value is within `vi_tolerance` of optimal. Ties break to the
/// lowest action index.
pub fn best_response_exact(mdp: &MdpSpec, w: &FeatureVector, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    if w.len() != mdp.feature_dim() {
        return Err(Error::InvalidArgument("weight dimension mismatch".into()));
    }
    let n = mdp.n_states;
    let gamma = mdp.discount;
    let rewards = state_rewards(&mdp.features, w);
    let threshold = if gamma > 0.0 {
        cfg.vi_tolerance * (1.0 - gamma) / (2.0 * gamma)
    } else {
        cfg.vi_tolerance
    };

    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut q = vec![0.0; mdp.n_actions];
    let mut sweeps = 0;
    const MAX_SWEEPS: usize = 1_000_000;
    loop {
        sweeps += 1;
        let mut residual = 0.0f64;
        for s in 0..n {
            for (a, qa) in q.iter_mut().enumerate() {
                let future: f64 = mdp.transitions[a][s]
                    .iter()
                    .zip(&v)
                    .map(|(p, vs)| p * vs)
                    .sum();
                *qa = rewards[s] + gamma * future;
            }
            next[s] = q[argmax(&q)];
            residual = residual.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if residual < threshold || gamma == 0.0 {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numerical("value iteration did not converge".into()));
        }
    }

    let mut actions = vec![0; n];
    for (s, slot) in actions.iter_mut().enumerate() {
        for (a, qa) in q.iter_mut().enumerate() {
            let future: f64 = mdp.transitions[a][s]
                .iter()
                .zip(&v)
                .map(|(p, vs)| p * vs)
                .sum();
            *qa = rewards[s] + gamma * future;
        }
        *slot = argmax(&q);
    }
    let policy = DeterministicPolicy { actions };
    let phi = feature_expectations_exact_det(mdp, &policy)?;
    Ok(OracleResult {
        policy,
        phi,
        planner_steps: sweeps,
        is_exact: true,
    })
}

/// Approximate best response by tabular Q-learning against a simulator.
///
/// Q is initialized to zero; episodes restart from the initial distribution
/// every `episode_horizon` steps. The greedy policy of the learned table is
/// returned with Monte Carlo feature expectations. Deterministic given
/// `cfg.seed`; quality degrades gracefully for small `n_rl_steps`.
pub fn best_response_q(sim: &dyn Simulator, w: &FeatureVector, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    if w.len() != sim.feature_dim() {
        return Err(Error::InvalidArgument("weight dimension mismatch".into()));
    }
    let n = sim.n_states();
    let n_actions = sim.n_actions();
    let gamma = sim.gamma();
    let mut q = vec![vec![0.0; n_actions]; n];

    let mut learn_rng = rng::substream(cfg.seed, 0);
    let mut state = sim.sample_initial(&mut learn_rng);
    let mut ep_len = 0usize;
    for t in 1..=cfg.n_rl_steps {
        let explore: f64 = learn_rng.random();
        let action = if explore < cfg.epsilon_greedy {
            learn_rng.random_range(0..n_actions)
        } else {
            argmax(&q[state])
        };
        let next = sim.step(state, action, &mut learn_rng);
        let reward: f64 = sim
            .features(state)
            .iter()
            .zip(&w.0)
            .map(|(f, wi)| f * wi)
            .sum();
        let target = reward + gamma * q[next][argmax(&q[next])];
        let lr = cfg.lr_coeff / (t as f64).powf(cfg.lr_exponent);
        q[state][action] += lr * (target - q[state][action]);

        ep_len += 1;
        if ep_len >= cfg.episode_horizon {
            state = sim.sample_initial(&mut learn_rng);
            ep_len = 0;
        } else {
            state = next;
        }
    }

    let policy = DeterministicPolicy {
        actions: q.iter().map(|row| argmax(row)).collect(),
    };
    let phi = feature_expectations_mc_sim(
        sim,
        &policy,
        cfg.n_est_rollouts.max(1),
        cfg.horizon.max(1),
        rng::mix(cfg.seed, 0x5eed_e571),
    )?;
    Ok(OracleResult {
        policy,
        phi,
        planner_steps: cfg.n_rl_steps,
        is_exact: false,
    })
}

/// Enumerates all deterministic policies of a tiny MDP in lexicographic
/// order (mixed-radix counter over per-state actions).
pub fn enumerate_policies(mdp: &MdpSpec) -> Result<Vec<DeterministicPolicy>> {
    let count = (mdp.n_actions as f64).powi(mdp.n_states as i32);
    if count > 1e6 {
        return Err(Error::SizeGuard(format!(
            "{}^{} deterministic policies exceeds the 10^6 enumeration guard",
            mdp.n_actions, mdp.n_states
        )));
    }
    let mut policies = Vec::with_capacity(count as usize);
    let mut actions = vec![0usize; mdp.n_states];
    loop {
        policies.push(DeterministicPolicy {
            actions: actions.clone(),
        });
        let mut s = 0;
        loop {
            if s == mdp.n_states {
                return Ok(policies);
            }
            actions[s] += 1;
            if actions[s] < mdp.n_actions {
                break;
            }
            actions[s] = 0;
            s += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_gridworld, GridworldConfig};
    use crate::instances::random_tiny_mdp;
    use crate::mdp::MatrixSimulator;
    use crate::rng;

    #[test]
    fn zero_weights_give_lowest_index_policy() {
        let mdp = random_tiny_mdp(2, 4, 3, 2, 0.9);
        let res = best_response_exact(&mdp, &FeatureVector::zeros(2), &OracleConfig::default()).unwrap();
        assert!(res.policy.actions.iter().all(|a| *a == 0));
        assert!(res.is_exact);
    }

    #[test]
    fn hand_built_two_state_optimum_matches_enumeration() {
        // Action 1 in state 0 jumps to the high-feature state 1 and stays.
        let mdp = MdpSpec::new(
            2,
            2,
            0.9,
            vec![
                vec![vec![1.0, 0.0], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            vec![1.0, 0.0],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap();
        let w = FeatureVector(vec![1.0]);
        let res = best_response_exact(&mdp, &w, &OracleConfig::default()).unwrap();
        assert_eq!(res.policy.actions, vec![1, 1]);

        let best_by_enumeration = enumerate_policies(&mdp)
            .unwrap()
            .into_iter()
            .map(|p| {
                let value = feature_expectations_exact_det(&mdp, &p).unwrap().dot(&w);
                (p, value)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(res.policy, best_by_enumeration.0);
    }

    #[test]
    fn exact_oracle_dominates_enumeration_on_random_instances() {
        let cfg = OracleConfig::default();
        for trial in 0..50 {
            let mdp = random_tiny_mdp(5000 + trial, 4, 3, 2, 0.9);
            let mut wrng = rng::root(9000 + trial);
            let w = FeatureVector(
                (0..2)
                    .map(|_| 2.0 * rand::Rng::random::<f64>(&mut wrng) - 1.0)
                    .collect(),
            );
            let res = best_response_exact(&mdp, &w, &cfg).unwrap();
            let oracle_value = res.phi.dot(&w);
            for p in enumerate_policies(&mdp).unwrap() {
                let value = feature_expectations_exact_det(&mdp, &p).unwrap().dot(&w);
                assert!(
                    oracle_value >= value - 1e-8,
                    "trial {trial}: oracle {oracle_value} < enumerated {value}"
                );
            }
        }
    }

    #[test]
    fn argmax_is_invariant_to_positive_scaling() {
        // Powers of two scale rewards exactly, so every intermediate float
        // scales exactly and the greedy argmax sequence is unchanged.
        let cfg = OracleConfig::default();
        for trial in 0..10 {
            let mdp = random_tiny_mdp(100 + trial, 4, 3, 2, 0.9);
            let mut wrng = rng::root(200 + trial);
            let w = FeatureVector(
                (0..2)
                    .map(|_| 2.0 * rand::Rng::random::<f64>(&mut wrng) - 1.0)
                    .collect(),
            );
            let base = best_response_exact(&mdp, &w, &cfg).unwrap();
            for c in [0.5, 2.0, 4.0] {
                let scaled = best_response_exact(&mdp, &w.scale(c), &cfg).unwrap();
                assert_eq!(base.policy, scaled.policy, "scale {c} changed the argmax");
            }
        }
    }

    #[test]
    fn oracle_results_are_bit_deterministic() {
        let mdp = random_tiny_mdp(77, 4, 3, 2, 0.9);
        let w = FeatureVector(vec![0.3, -0.7]);
        let cfg = OracleConfig::default();
        let a = best_response_exact(&mdp, &w, &cfg).unwrap();
        let b = best_response_exact(&mdp, &w, &cfg).unwrap();
        assert_eq!(a, b);

        let sim = MatrixSimulator::new(&mdp);
        let mut qcfg = cfg.clone();
        qcfg.mode = OracleMode::QLearning;
        qcfg.n_rl_steps = 200;
        qcfg.n_est_rollouts = 20;
        qcfg.horizon = 20;
        let qa = best_response_q(&sim, &w, &qcfg).unwrap();
        let qb = best_response_q(&sim, &w, &qcfg).unwrap();
        assert_eq!(qa, qb);
        assert!(!qa.is_exact);
    }

    #[test]
    fn q_learning_single_state_is_trivially_optimal() {
        let mdp = MdpSpec::new(
            1,
            1,
            0.5,
            vec![vec![vec![1.0]]],
            vec![1.0],
            vec![vec![1.0]],
        )
        .unwrap();
        let sim = MatrixSimulator::new(&mdp);
        let mut cfg = OracleConfig::default();
        cfg.mode = OracleMode::QLearning;
        cfg.n_rl_steps = 10;
        cfg.n_est_rollouts = 5;
        cfg.horizon = 30;
        let res = best_response_q(&sim, &FeatureVector(vec![1.0]), &cfg).unwrap();
        assert_eq!(res.policy.actions, vec![0]);
    }

    #[test]
    fn q_learning_phi_respects_feature_bounds_for_zero_weights() {
        let mdp = random_tiny_mdp(88, 4, 3, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let mut cfg = OracleConfig::default();
        cfg.mode = OracleMode::QLearning;
        cfg.n_rl_steps = 100;
        cfg.n_est_rollouts = 50;
        cfg.horizon = 40;
        let res = best_response_q(&sim, &FeatureVector::zeros(2), &cfg).unwrap();
        let bound = 1.0 / (1.0 - mdp.discount);
        for v in &res.phi.0 {
            assert!(*v >= 0.0 && *v <= bound + 1e-9);
        }
    }

    #[test]
    fn q_learning_finds_the_goal_on_the_gridworld() {
        // Reward +1 at the goal and a slight penalty elsewhere; the zero
        // initialization is then optimistic, which drives exploration.
        let (mdp, world) = build_gridworld(&GridworldConfig::default()).unwrap();
        let k = mdp.feature_dim();
        let goal = k - 1;
        let mut w = vec![-0.02; k];
        w[goal] = 1.0;
        let w = FeatureVector(w);

        let optimal = best_response_exact(&mdp, &w, &OracleConfig::default()).unwrap();
        let optimal_goal_mass = optimal.phi.0[goal];
        assert!(optimal_goal_mass > 0.0);

        let mut cfg = OracleConfig::default();
        cfg.mode = OracleMode::QLearning;
        cfg.n_rl_steps = 300;
        cfg.n_est_rollouts = 50;
        cfg.horizon = 50;
        let mut hits = 0;
        for seed in 0..10 {
            cfg.seed = seed;
            let learned = best_response_q(&world, &w, &cfg).unwrap();
            let goal_mass = feature_expectations_exact_det(&mdp, &learned.policy)
                .unwrap()
                .0[goal];
            if goal_mass >= 0.5 * optimal_goal_mass {
                hits += 1;
            }
        }
        assert!(hits >= 8, "goal-seeking policies in only {hits}/10 seeds");
    }

    #[test]
    fn enumeration_respects_size_guard() {
        let mdp = random_tiny_mdp(1, 4, 3, 2, 0.9);
        assert!(enumerate_policies(&mdp).is_ok());
        // 25 states and 4 actions would blow far past the guard.
        let (grid, _) = build_gridworld(&GridworldConfig::default()).unwrap();
        assert!(matches!(enumerate_policies(&grid), Err(Error::SizeGuard(_))));
    }
}
