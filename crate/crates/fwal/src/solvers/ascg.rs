//! Conditional gradient with away steps.
//!
//! Alongside the usual toward-vertex step, each iteration considers removing
//! weight from the active-set vertex most aligned with the gradient. The
//! away step size is capped at `alpha_z / (1 - alpha_z)` so the coefficients
//! stay a distribution; hitting the cap removes the vertex (a drop step).
//! On polytopes this closes the zig-zagging that keeps plain conditional
//! gradient sublinear, and the error decreases geometrically.

use super::cg::{resolve_vertex, vertex_values};
use super::{
    initial_policy, line_search_quadratic, trace_eval_point, ActiveSet, Objective, SolverOptions,
    SolverOutput, SolverTrace, StepKind, TraceRow, DRIFT_HARD_LIMIT, ORACLE_SEED_TAG,
};
use crate::error::{Error, Result};
use crate::oracle::{best_response, EnvView, OracleConfig, OracleMode};
use crate::rng;
use std::time::Instant;

pub fn solve_ascg(
    env: &EnvView,
    objective: &Objective,
    oracle_cfg: &OracleConfig,
    opts: &SolverOptions,
) -> Result<SolverOutput> {
    opts.validate()?;
    oracle_cfg.validate()?;
    let exact_mode = oracle_cfg.mode == OracleMode::ExactVi;

    let init = initial_policy(env.sim.n_states(), env.sim.n_actions(), opts);
    let (phi0, phi0_exact) =
        vertex_values(env, oracle_cfg, &init, rng::mix(opts.seed, ORACLE_SEED_TAG))?;
    let mut active = ActiveSet::single(init, phi0.clone(), phi0_exact);
    let mut x = phi0.clone();
    let initial_h = objective.h(&x);

    let mut trace = SolverTrace::default();
    let mut iterates = Vec::new();
    let mut max_drift = 0.0f64;
    let mut max_coeff_err = 0.0f64;

    if initial_h == 0.0 {
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
        let grad = objective.grad(&x);
        let w = grad.scale(-1.0);
        let cfg_t = oracle_cfg.with_seed(rng::mix(opts.seed, ORACLE_SEED_TAG ^ t as u64));
        let res = best_response(env, &w, &cfg_t)?;
        let (fw_phi, fw_exact) = resolve_vertex(&active, env, &res.policy, &res.phi, res.is_exact)?;
        let d_fw = fw_phi.sub(&x);

        // Away candidate: the active vertex most aligned with the gradient.
        let mut z = 0;
        let mut z_score = grad.dot(&active.atoms[0].phi);
        for (i, atom) in active.atoms.iter().enumerate().skip(1) {
            let score = grad.dot(&atom.phi);
            if score > z_score {
                z_score = score;
                z = i;
            }
        }
        let d_as = x.sub(&active.atoms[z].phi);

        let fw_slope = grad.dot(&d_fw);
        let as_slope = grad.dot(&d_as);
        let take_fw = fw_slope < as_slope;

        let (step_kind, gamma, gamma_max);
        if take_fw {
            gamma_max = 1.0;
            gamma = if d_fw.dot(&d_fw) == 0.0 {
                0.0
            } else {
                line_search_quadratic(&x, &d_fw, &objective.phi_e, gamma_max)?
            };
            x = x.add_scaled(gamma, &d_fw);
            active.fw_update(gamma, res.policy.clone(), fw_phi, fw_exact);
            step_kind = StepKind::Fw;
        } else {
            let alpha_z = active.atoms[z].coeff;
            gamma_max = alpha_z / (1.0 - alpha_z);
            if d_as.dot(&d_as) == 0.0 {
                // Degenerate set (single vertex): stay put.
                gamma = 0.0;
                step_kind = StepKind::Away;
            } else {
                gamma = line_search_quadratic(&x, &d_as, &objective.phi_e, gamma_max)?;
                x = x.add_scaled(gamma, &d_as);
                let dropped = active.away_update(gamma, z);
                step_kind = if dropped { StepKind::Drop } else { StepKind::Away };
            }
        }

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
            step_kind,
            gamma,
            active_set_size: active.len(),
            oracle_steps: res.planner_steps,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            w,
            gamma_max,
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
    use crate::instances::{random_hull_point, random_tiny_mdp};
    use crate::mdp::{MatrixSimulator, MdpSpec};
    use crate::polytope::enumerate_polytope;
    use crate::solvers::solve_cg;

    #[test]
    fn interior_target_beats_plain_cg() {
        let mdp = random_tiny_mdp(51, 4, 3, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = EnvView::new(Some(&mdp), &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        let mut rng = rng::root(4);
        let target = random_hull_point(&model.vertex_points(), &mut rng);
        let objective = Objective::new(target);
        let opts = SolverOptions::new(300);
        let ascg = solve_ascg(&env, &objective, &OracleConfig::default(), &opts).unwrap();
        let cg = solve_cg(&env, &objective, &OracleConfig::default(), &opts).unwrap();

        let ascg_hit = ascg
            .trace
            .rows
            .iter()
            .find(|r| r.h <= 1e-9)
            .map(|r| r.t)
            .unwrap_or(usize::MAX);
        let cg_hit = cg
            .trace
            .rows
            .iter()
            .find(|r| r.h <= 1e-4)
            .map(|r| r.t)
            .unwrap_or(usize::MAX);
        assert!(
            ascg_hit <= cg_hit,
            "away steps reached 1e-9 at t={ascg_hit}, plain CG reached 1e-4 at t={cg_hit}"
        );
    }

    #[test]
    fn constructed_instance_triggers_an_away_step() {
        // Three-vertex polytope with the target on the far edge: the initial
        // vertex keeps residual weight that only an away step removes fast.
        let mdp = random_tiny_mdp(52, 2, 3, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = EnvView::new(Some(&mdp), &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        assert!(model.vertices.len() >= 3, "need a genuine polygon");
        let target = model.vertices[1]
            .phi
            .scale(0.5)
            .add_scaled(0.5, &model.vertices[2].phi);
        let opts = SolverOptions::new(40)
            .with_init(crate::solvers::InitPolicy::Fixed(
                model.vertices[0].policies[0].clone(),
            ));
        let out = solve_ascg(&env, &Objective::new(target), &OracleConfig::default(), &opts).unwrap();
        assert!(
            out.trace
                .rows
                .iter()
                .any(|r| matches!(r.step_kind, StepKind::Away | StepKind::Drop)),
            "no away/drop step in trace: {:?}",
            out.trace.rows.iter().map(|r| r.step_kind).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_vertex_polytope_stays_put() {
        // Identical actions: one policy value; the set degenerates to a point.
        let mdp = MdpSpec::new(
            1,
            2,
            0.5,
            vec![vec![vec![1.0]], vec![vec![1.0]]],
            vec![1.0],
            vec![vec![1.0, 0.0]],
        )
        .unwrap();
        let sim = MatrixSimulator::new(&mdp);
        let env = EnvView::new(Some(&mdp), &sim);
        // Target off the polytope: h stays constant at its initial value.
        let objective = Objective::new(crate::mdp::FeatureVector(vec![0.0, 1.0]));
        let out = solve_ascg(&env, &objective, &OracleConfig::default(), &SolverOptions::new(10)).unwrap();
        assert_eq!(out.trace.len(), 10);
        for row in &out.trace.rows {
            assert_eq!(row.gamma, 0.0);
            assert_eq!(row.h, out.initial_h);
        }
    }

    #[test]
    fn away_steps_respect_their_cap_and_keep_a_distribution() {
        let mdp = random_tiny_mdp(53, 4, 3, 2, 0.9);
        let sim = MatrixSimulator::new(&mdp);
        let env = EnvView::new(Some(&mdp), &sim);
        let model = enumerate_polytope(&mdp).unwrap();
        let mut rng = rng::root(6);
        let target = random_hull_point(&model.vertex_points(), &mut rng);
        let out = solve_ascg(
            &env,
            &Objective::new(target),
            &OracleConfig::default(),
            &SolverOptions::new(200),
        )
        .unwrap();
        for row in &out.trace.rows {
            if matches!(row.step_kind, StepKind::Away | StepKind::Drop) {
                assert!(row.gamma <= row.gamma_max, "gamma {} above cap {}", row.gamma, row.gamma_max);
            }
        }
        assert!(out.max_coeff_err <= 1e-9);
        assert!(out.max_repr_drift <= 1e-8);
        // Monotone descent with exact line search.
        let mut prev = out.initial_h;
        for row in &out.trace.rows {
            assert!(row.h <= prev + 1e-12);
            prev = row.h;
        }
    }
}
