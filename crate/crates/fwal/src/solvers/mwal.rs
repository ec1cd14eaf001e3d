//! Multiplicative-weights baseline: a no-regret reward player over the
//! feature simplex against a best-response policy player.
//!
//! Round `t` plays the Hedge distribution `w_t` over features, the policy
//! player answers with the optimal policy for reward `w_t . phi`, and the
//! losses `Phi(pi_t) - Phi_E` feed back into the weights. The returned
//! mixture is uniform over the `T` best responses; its convergence is the
//! no-regret `O(sqrt(log k / T))` rather than the conditional-gradient
//! rates.

use super::cg::vertex_values;
use super::{
    initial_policy, trace_eval_point, ActiveSet, Objective, SolverOptions, SolverOutput,
    SolverTrace, StepKind, TraceRow, DRIFT_HARD_LIMIT, ORACLE_SEED_TAG,
};
use crate::error::{Error, Result};
use crate::mdp::{MatrixSimulator, MdpSpec};
use crate::oracle::{best_response, EnvView, OracleConfig, OracleMode};
use crate::rng;
use std::time::Instant;

/// Standard Hedge tuning `sqrt(8 ln k / T)`. The no-regret reward player is
/// specified without parameters upstream; this is the textbook choice.
pub fn mwal_learning_rate(k: usize, iterations: usize) -> f64 {
    (8.0 * (k as f64).ln() / iterations as f64).sqrt()
}

pub fn solve_mwal(
    mdp: &MdpSpec,
    objective: &Objective,
    oracle_cfg: &OracleConfig,
    opts: &SolverOptions,
) -> Result<SolverOutput> {
    opts.validate()?;
    oracle_cfg.validate()?;
    let sim = MatrixSimulator::new(mdp);
    let env = EnvView::new(Some(mdp), &sim);
    let exact_mode = oracle_cfg.mode == OracleMode::ExactVi;
    let k = mdp.feature_dim();
    let eta = mwal_learning_rate(k, opts.iterations);

    // Initial point for reporting only; the mixture is built purely from
    // best responses.
    let init = initial_policy(mdp.n_states, mdp.n_actions, opts);
    let (phi0, _) = vertex_values(&env, oracle_cfg, &init, rng::mix(opts.seed, ORACLE_SEED_TAG))?;
    let initial_h = objective.h(&phi0);

    let mut cumulative_loss = vec![0.0f64; k];
    let mut active: Option<ActiveSet> = None;
    let mut x = phi0.clone();
    let mut trace = SolverTrace::default();
    let mut iterates = Vec::new();
    let mut max_drift = 0.0f64;
    let mut max_coeff_err = 0.0f64;

    for t in 1..=opts.iterations {
        let started = Instant::now();
        // Hedge distribution over features, stabilized by the max exponent.
        let max_exp = cumulative_loss
            .iter()
            .map(|l| -eta * l)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = cumulative_loss
            .iter()
            .map(|l| (-eta * l - max_exp).exp())
            .collect();
        let total: f64 = w.iter().sum();
        for wi in w.iter_mut() {
            *wi /= total;
        }
        let w = crate::mdp::FeatureVector(w);

        let cfg_t = oracle_cfg.with_seed(rng::mix(opts.seed, ORACLE_SEED_TAG ^ t as u64));
        let res = best_response(&env, &w, &cfg_t)?;
        let loss = res.phi.sub(&objective.phi_e);
        let game_value = w.dot(&loss);
        for (l, dl) in cumulative_loss.iter_mut().zip(&loss.0) {
            *l += dl;
        }

        // Uniform mixture over rounds: fold the new response in with 1/t.
        let gamma = 1.0 / t as f64;
        let (vertex_phi, vertex_exact) = match active.as_ref().and_then(|s| s.find(&res.policy)) {
            Some(i) => {
                let set = active.as_ref().expect("set exists");
                (set.atoms[i].phi.clone(), set.atoms[i].phi_exact.clone())
            }
            None => (res.phi.clone(), if res.is_exact { Some(res.phi.clone()) } else { None }),
        };
        match active.as_mut() {
            None => {
                x = vertex_phi.clone();
                active = Some(ActiveSet::single(res.policy, vertex_phi, vertex_exact));
            }
            Some(set) => {
                let d = vertex_phi.sub(&x);
                x = x.add_scaled(gamma, &d);
                set.fw_update(gamma, res.policy, vertex_phi, vertex_exact);
            }
        }

        let set = active.as_ref().expect("set exists");
        let drift = set.drift(&x);
        max_drift = max_drift.max(drift);
        max_coeff_err = max_coeff_err.max((set.coeff_sum() - 1.0).abs());
        if drift > DRIFT_HARD_LIMIT {
            return Err(Error::Numerical(format!(
                "representation drift {drift} at round {t}"
            )));
        }

        let eval = trace_eval_point(&x, set, exact_mode, &env);
        trace.rows.push(TraceRow {
            t,
            h: objective.h(&eval),
            dist: objective.dist(&eval),
            step_kind: StepKind::Fw,
            gamma,
            active_set_size: set.len(),
            oracle_steps: res.planner_steps,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            w,
            gamma_max: 1.0,
            game_value: Some(game_value),
            batch_size: None,
        });
        iterates.push(x.clone());
    }

    let set = active.ok_or_else(|| Error::Numerical("no rounds played".into()))?;
    Ok(SolverOutput {
        mixed: set.mixed_policy()?,
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
    use crate::mdp::{mixed_feature_expectations, FeatureVector};

    /// Two states with partition-of-unity features; policies can hold the
    /// chain in either state, so the polytope is a genuine segment.
    fn two_feature_mdp() -> MdpSpec {
        MdpSpec::new(
            2,
            2,
            0.5,
            vec![
                // action 0: stay
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                // action 1: switch
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            ],
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn learning_rate_arithmetic() {
        let eta = mwal_learning_rate(2, 100);
        let expected = (8.0 * 2f64.ln() / 100.0).sqrt();
        assert_eq!(eta, expected);
        assert!((eta - 0.2355).abs() < 5e-5, "eta = {eta}");
    }

    #[test]
    fn achievable_vertex_target_drives_game_value_down() {
        let mdp = two_feature_mdp();
        // Target: feature expectations of the stay-everywhere policy.
        let stay = crate::mdp::DeterministicPolicy { actions: vec![0, 0] };
        let target = crate::mdp::feature_expectations_exact_det(&mdp, &stay).unwrap();
        let objective = Objective::new(target);
        let cfg = OracleConfig::default();

        let short = solve_mwal(&mdp, &objective, &cfg, &SolverOptions::new(16)).unwrap();
        let long = solve_mwal(&mdp, &objective, &cfg, &SolverOptions::new(512)).unwrap();
        let mean_gv = |out: &SolverOutput| {
            let vals: Vec<f64> = out.trace.rows.iter().filter_map(|r| r.game_value).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let short_gv = mean_gv(&short);
        let long_gv = mean_gv(&long);
        // Certificates are nonnegative when the target is achievable, and
        // the average shrinks toward the zero game value.
        assert!(short_gv >= -1e-12);
        assert!(long_gv >= -1e-12);
        assert!(long_gv <= 0.5 * short_gv + 1e-12, "{long_gv} vs {short_gv}");
    }

    #[test]
    fn margin_decays_at_no_regret_rate() {
        let mdp = two_feature_mdp();
        // Interior target: a strict mixture of the two stay policies.
        let a = crate::mdp::DeterministicPolicy { actions: vec![0, 0] };
        let b = crate::mdp::DeterministicPolicy { actions: vec![1, 1] };
        let phi_a = crate::mdp::feature_expectations_exact_det(&mdp, &a).unwrap();
        let phi_b = crate::mdp::feature_expectations_exact_det(&mdp, &b).unwrap();
        let target = phi_a.scale(0.3).add_scaled(0.7, &phi_b);
        let objective = Objective::new(target.clone());
        let cfg = OracleConfig::default();

        let mut logs = Vec::new();
        for exp in 5..=10 {
            let t = 1usize << exp; // 32 .. 1024
            let out = solve_mwal(&mdp, &objective, &cfg, &SolverOptions::new(t)).unwrap();
            let phi = mixed_feature_expectations(&mdp, &out.mixed).unwrap();
            let margin = phi.sub(&target).norm_inf().max(1e-12);
            logs.push(((t as f64).ln(), margin.ln()));
        }
        // Least-squares slope of log margin against log T.
        let n = logs.len() as f64;
        let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = logs
            .iter()
            .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
            .sum::<f64>()
            / logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum::<f64>();
        assert!(slope <= -0.4, "decay exponent {slope} too slow: {logs:?}");
    }

    #[test]
    fn mixture_is_uniform_over_distinct_rounds() {
        let mdp = two_feature_mdp();
        let objective = Objective::new(FeatureVector(vec![1.0, 1.0]));
        let out = solve_mwal(&mdp, &objective, &OracleConfig::default(), &SolverOptions::new(64)).unwrap();
        // Every coefficient is a multiple of 1/T.
        for (_, c) in &out.mixed.atoms {
            let rounds = c * 64.0;
            assert!((rounds - rounds.round()).abs() < 1e-9, "coefficient {c} not a multiple of 1/64");
        }
        assert!(out.max_repr_drift <= 1e-8);
    }
}
