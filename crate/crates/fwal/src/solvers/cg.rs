//! Plain conditional gradient on the feature-expectations polytope.
//!
//! Each iteration plans against the reward `w_t = Phi_E - x_{t-1}`, then
//! moves toward the returned vertex with an exact line-search step (or the
//! harmonic `2/(t+1)` schedule), updating the mixed policy alongside the
//! iterate.

use super::{
    initial_policy, trace_eval_point, ActiveSet, Objective, SolverOptions, SolverOutput,
    SolverTrace, StepKind, StepRule, TraceRow, DRIFT_HARD_LIMIT, ORACLE_SEED_TAG,
};
use crate::error::{Error, Result};
use crate::mdp::{
    feature_expectations_exact_det, feature_expectations_mc_sim, DeterministicPolicy,
    FeatureVector,
};
use crate::oracle::{best_response, EnvView, OracleConfig, OracleMode};
use crate::rng;
use std::time::Instant;

/// Vertex values for a policy under the oracle's estimation mode, plus the
/// exact value when a tensor is available for diagnostics.
pub(crate) fn vertex_values(
    env: &EnvView,
    cfg: &OracleConfig,
    policy: &DeterministicPolicy,
    seed: u64,
) -> Result<(FeatureVector, Option<FeatureVector>)> {
    match cfg.mode {
        OracleMode::ExactVi => {
            let phi = feature_expectations_exact_det(env.require_mdp()?, policy)?;
            Ok((phi.clone(), Some(phi)))
        }
        OracleMode::QLearning => {
            let est = feature_expectations_mc_sim(
                env.sim,
                policy,
                cfg.n_est_rollouts.max(1),
                cfg.horizon.max(1),
                seed,
            )?;
            let exact = match env.mdp {
                Some(mdp) => Some(feature_expectations_exact_det(mdp, policy)?),
                None => None,
            };
            Ok((est, exact))
        }
    }
}

pub(crate) fn diag_exact_phi(
    env: &EnvView,
    policy: &DeterministicPolicy,
) -> Result<Option<FeatureVector>> {
    match env.mdp {
        Some(mdp) => Ok(Some(feature_expectations_exact_det(mdp, policy)?)),
        None => Ok(None),
    }
}

/// Resolves the vertex used for a step: when the oracle returns a policy
/// that is already active, the stored vertex value is reused so the
/// representation keeps tracking one value per vertex.
pub(crate) fn resolve_vertex(
    active: &ActiveSet,
    env: &EnvView,
    policy: &DeterministicPolicy,
    oracle_phi: &FeatureVector,
    oracle_is_exact: bool,
) -> Result<(FeatureVector, Option<FeatureVector>)> {
    if let Some(i) = active.find(policy) {
        let atom = &active.atoms[i];
        return Ok((atom.phi.clone(), atom.phi_exact.clone()));
    }
    let exact = if oracle_is_exact {
        Some(oracle_phi.clone())
    } else {
        diag_exact_phi(env, policy)?
    };
    Ok((oracle_phi.clone(), exact))
}

pub fn solve_cg(
    env: &EnvView,
    objective: &Objective,
    oracle_cfg: &OracleConfig,
    opts: &SolverOptions,
) -> Result<SolverOutput> {
    opts.validate()?;
    oracle_cfg.validate()?;
    let exact_mode = oracle_cfg.mode == OracleMode::ExactVi;

    let init = initial_policy(env.sim.n_states(), env.sim.n_actions(), opts);
    let (phi0, phi0_exact) = vertex_values(env, oracle_cfg, &init, rng::mix(opts.seed, ORACLE_SEED_TAG))?;
    let mut active = ActiveSet::single(init, phi0.clone(), phi0_exact);
    let mut x = phi0.clone();
    let initial_h = objective.h(&x);

    let mut trace = SolverTrace::default();
    let mut iterates = Vec::new();
    let mut max_drift = 0.0f64;
    let mut max_coeff_err = 0.0f64;

    if initial_h == 0.0 {
        // Already at the target; nothing to iterate.
        return Ok(SolverOutput {
            mixed: active.mixed_policy()?,
            trace,
            iterates,
            initial_point: phi0.clone(),
            initial_h,
            final_point: x,
            max_repr_drift: 0.0,
            max_coeff_err: 0.0,
        });
    }

    for t in 1..=opts.iterations {
        let started = Instant::now();
        let w = objective.phi_e.sub(&x);
        let cfg_t = oracle_cfg.with_seed(rng::mix(opts.seed, ORACLE_SEED_TAG ^ t as u64));
        let res = best_response(env, &w, &cfg_t)?;
        let (vertex_phi, vertex_exact) =
            resolve_vertex(&active, env, &res.policy, &res.phi, res.is_exact)?;
        let d = vertex_phi.sub(&x);

        let gamma = match opts.step_rule {
            StepRule::LineSearch => {
                if d.dot(&d) == 0.0 {
                    0.0
                } else {
                    super::line_search_quadratic(&x, &d, &objective.phi_e, 1.0)?
                }
            }
            StepRule::Harmonic => 2.0 / (t as f64 + 1.0),
        };

        x = x.add_scaled(gamma, &d);
        active.fw_update(gamma, res.policy, vertex_phi, vertex_exact);

        let drift = active.drift(&x);
        max_drift = max_drift.max(drift);
        max_coeff_err = max_coeff_err.max((active.coeff_sum() - 1.0).abs());
        if drift > DRIFT_HARD_LIMIT {
            return Err(Error::Numerical(format!(
                "representation drift {drift} at iteration {t}"
            )));
        }

        let eval = trace_eval_point(&x, &active, exact_mode, env);
        trace.rows.push(TraceRow {
            t,
            h: objective.h(&eval),
            dist: objective.dist(&eval),
            step_kind: StepKind::Fw,
            gamma,
            active_set_size: active.len(),
            oracle_steps: res.planner_steps,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            w,
            gamma_max: 1.0,
            game_value: None,
            batch_size: None,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::random_tiny_mdp;
    use crate::mdp::MatrixSimulator;
    use crate::polytope::enumerate_polytope;

    fn exact_env<'a>(mdp: &'a crate::mdp::MdpSpec, sim: &'a MatrixSimulator<'a>) -> EnvView<'a> {
        EnvView::new(Some(mdp), sim)
    }

    #[test]
    fn target_equal_to_initial_point_terminates_immediately() {
        let mdp = random_tiny_mdp(31, 3, 2, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = exact_env(&mdp, &sim);
        let init = DeterministicPolicy::zeros(mdp.n_states);
        let phi0 = feature_expectations_exact_det(&mdp, &init).unwrap();
        let out = solve_cg(
            &env,
            &Objective::new(phi0.clone()),
            &OracleConfig::default(),
            &SolverOptions::new(50),
        )
        .unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.initial_h, 0.0);
        assert_eq!(out.final_point, phi0);
    }

    #[test]
    fn vertex_target_converges_fast() {
        let mdp = random_tiny_mdp(32, 2, 2, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = exact_env(&mdp, &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        let target = model.vertices.last().unwrap().phi.clone();
        let out = solve_cg(
            &env,
            &Objective::new(target.clone()),
            &OracleConfig::default(),
            &SolverOptions::new(50),
        )
        .unwrap();
        let final_h = Objective::new(target).h(&out.final_point);
        assert!(final_h <= 1e-10, "h = {final_h}");
    }

    #[test]
    fn midpoint_target_matches_brute_force_projection() {
        let mdp = random_tiny_mdp(33, 2, 2, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = exact_env(&mdp, &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        assert!(model.vertices.len() >= 2);
        let target = model.vertices[0]
            .phi
            .scale(0.5)
            .add_scaled(0.5, &model.vertices[1].phi);
        let objective = Objective::new(target.clone());
        let out = solve_cg(&env, &objective, &OracleConfig::default(), &SolverOptions::new(400)).unwrap();
        let (projection, _) = crate::polytope::project_onto_hull(&model, &target).unwrap();
        assert!(
            out.final_point.distance(&projection) <= 1e-6,
            "limit {:?} vs projection {:?}",
            out.final_point,
            projection
        );
    }

    #[test]
    fn descent_is_monotone_with_line_search() {
        let mdp = random_tiny_mdp(34, 4, 3, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = exact_env(&mdp, &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        let mut rng = rng::root(9);
        let target = crate::instances::random_hull_point(&model.vertex_points(), &mut rng);
        let objective = Objective::new(target);
        let out = solve_cg(&env, &objective, &OracleConfig::default(), &SolverOptions::new(100)).unwrap();
        let mut prev = out.initial_h;
        for row in &out.trace.rows {
            assert!(row.h <= prev + 1e-12, "h rose from {prev} to {}", row.h);
            prev = row.h;
        }
        assert!(out.max_repr_drift <= 1e-8);
        assert!(out.max_coeff_err <= 1e-9);
    }

    #[test]
    fn mixed_policy_reproduces_final_iterate() {
        let mdp = random_tiny_mdp(35, 3, 3, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = exact_env(&mdp, &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        let mut rng = rng::root(10);
        let target = crate::instances::random_hull_point(&model.vertex_points(), &mut rng);
        let out = solve_cg(
            &env,
            &Objective::new(target),
            &OracleConfig::default(),
            &SolverOptions::new(60),
        )
        .unwrap();
        let phi_mixed = crate::mdp::mixed_feature_expectations(&mdp, &out.mixed).unwrap();
        assert!(phi_mixed.sub(&out.final_point).norm_inf() <= 1e-8);
    }
}
