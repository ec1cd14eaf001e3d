//! Stochastic conditional gradient for simulator-only access.
//!
//! The iterate is tracked through fresh Monte Carlo estimates: at iteration
//! `t` the newly returned policy is rolled out `m_t` times, the estimate is
//! folded in with the harmonic step `2/(t+1)`, and the next reward is the
//! negated gradient of the tracked estimate. The growing batch schedule
//! `m_t = (G (t+1) / (beta D^2))^2` keeps the overall error at the
//! deterministic `O(1/t)` rate.

use super::cg::{diag_exact_phi, resolve_vertex};
use super::{
    initial_policy, trace_eval_point, ActiveSet, Objective, SolverOptions, SolverOutput,
    SolverTrace, StepKind, TraceRow, DRIFT_HARD_LIMIT, GRAD_SEED_TAG, ORACLE_SEED_TAG,
};
use crate::error::{Error, Result};
use crate::mdp::feature_expectations_mc_sim;
use crate::oracle::{best_response, EnvView, OracleConfig, OracleMode};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Batch schedule for gradient estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SfwSchedule {
    /// Lipschitz constant G of the objective over the polytope.
    pub lipschitz: f64,
    /// Smoothness beta.
    pub smoothness: f64,
    /// Polytope diameter D.
    pub diameter: f64,
}

impl SfwSchedule {
    /// Defaults from the problem geometry: `D = sqrt(k)/(1-gamma)`, and
    /// `G = D` since the gradient norm `||x - Phi_E||` is at most the
    /// diameter when the target lies in the polytope; beta = 1.
    pub fn for_geometry(k: usize, gamma: f64) -> Self {
        let diameter = (k as f64).sqrt() / (1.0 - gamma);
        SfwSchedule {
            lipschitz: diameter,
            smoothness: 1.0,
            diameter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lipschitz <= 0.0 || self.smoothness <= 0.0 || self.diameter <= 0.0 {
            return Err(Error::InvalidConfig("schedule constants must be positive".into()));
        }
        Ok(())
    }

    /// The real-valued batch rule `(G (t+1) / (beta D^2))^2`, strictly
    /// increasing in `t`.
    pub fn raw_batch(&self, t: usize) -> f64 {
        let num = self.lipschitz * (t as f64 + 1.0);
        let den = self.smoothness * self.diameter * self.diameter;
        (num / den).powi(2)
    }

    /// Rollouts at iteration `t`: the raw rule rounded up, at least one.
    pub fn batch_size(&self, t: usize) -> usize {
        (self.raw_batch(t).ceil() as usize).max(1)
    }
}

pub fn solve_sfw(
    env: &EnvView,
    objective: &Objective,
    oracle_cfg: &OracleConfig,
    schedule: &SfwSchedule,
    opts: &SolverOptions,
) -> Result<SolverOutput> {
    opts.validate()?;
    oracle_cfg.validate()?;
    schedule.validate()?;
    let horizon = oracle_cfg.horizon.max(1);

    let init = initial_policy(env.sim.n_states(), env.sim.n_actions(), opts);
    let phi0 = feature_expectations_mc_sim(
        env.sim,
        &init,
        schedule.batch_size(0),
        horizon,
        rng::mix(opts.seed, GRAD_SEED_TAG),
    )?;
    let phi0_exact = diag_exact_phi(env, &init)?;
    let mut active = ActiveSet::single(init, phi0.clone(), phi0_exact);
    let mut x = phi0.clone();
    let initial_h = objective.h(&x);

    let mut trace = SolverTrace::default();
    let mut iterates = Vec::new();
    let mut max_drift = 0.0f64;
    let mut max_coeff_err = 0.0f64;

    for t in 1..=opts.iterations {
        let started = Instant::now();
        let w = objective.phi_e.sub(&x);
        let mut cfg_t = oracle_cfg.with_seed(rng::mix(opts.seed, ORACLE_SEED_TAG ^ t as u64));
        if cfg_t.mode == OracleMode::QLearning {
            // The oracle's own feature estimate is unused here; the batch
            // below supplies the fresh estimate.
            cfg_t.n_est_rollouts = 1;
        }
        let res = best_response(env, &w, &cfg_t)?;

        let m_t = schedule.batch_size(t);
        let (vertex_phi, vertex_exact) = if active.find(&res.policy).is_some() {
            resolve_vertex(&active, env, &res.policy, &res.phi, false)?
        } else {
            let est = feature_expectations_mc_sim(
                env.sim,
                &res.policy,
                m_t,
                horizon,
                rng::mix(opts.seed, GRAD_SEED_TAG ^ t as u64),
            )?;
            (est, diag_exact_phi(env, &res.policy)?)
        };

        let alpha = 2.0 / (t as f64 + 1.0);
        let d = vertex_phi.sub(&x);
        x = x.add_scaled(alpha, &d);
        active.fw_update(alpha, res.policy, vertex_phi, vertex_exact);

        let drift = active.drift(&x);
        max_drift = max_drift.max(drift);
        max_coeff_err = max_coeff_err.max((active.coeff_sum() - 1.0).abs());
        if drift > DRIFT_HARD_LIMIT {
            return Err(Error::Numerical(format!(
                "representation drift {drift} at iteration {t}"
            )));
        }

        let eval = trace_eval_point(&x, &active, false, env);
        trace.rows.push(TraceRow {
            t,
            h: objective.h(&eval),
            dist: objective.dist(&eval),
            step_kind: StepKind::Fw,
            gamma: alpha,
            active_set_size: active.len(),
            oracle_steps: res.planner_steps,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            w,
            gamma_max: 1.0,
            game_value: None,
            batch_size: Some(m_t),
        });
        iterates.push(x.clone());
    }

    Ok(SolverOutput {
        mixed: active.mixed_policy()?,
        trace,
        iterates,
        initial_point: phi0,
        initial_h,
        final_point: x,
        max_repr_drift: max_drift,
        max_coeff_err,
    })
}
