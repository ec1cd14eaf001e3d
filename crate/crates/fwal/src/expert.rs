//! Expert trajectory sampling and target estimation.
//!
//! Covers the Hoeffding sample-budget calculator, the fixed-horizon
//! (truncated, slightly biased) estimator, and the geometric-termination
//! estimator that stops each trajectory with probability `1 - gamma` per
//! step and sums undiscounted features, which is unbiased for the
//! untruncated feature expectations.

use crate::error::{Error, Result};
use crate::mdp::{ActionSelector, FeatureVector, Simulator};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Trajectories needed so the averaged estimate lands within `epsilon_m`
/// (L2) of the truth with probability `1 - delta`:
/// `m = ceil(2k ln(2k/delta) / epsilon_m^2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBudget {
    pub epsilon_m: f64,
    pub delta: f64,
    pub k: usize,
    pub m: usize,
}

/// Computes the Hoeffding budget; errors outside `epsilon_m > 0`,
/// `delta in (0,1)`.
pub fn sample_budget(epsilon_m: f64, delta: f64, k: usize) -> Result<SampleBudget> {
    if epsilon_m <= 0.0 {
        return Err(Error::InvalidArgument("epsilon_m must be positive".into()));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidArgument("delta must lie in (0,1)".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let raw = 2.0 * k as f64 * (2.0 * k as f64 / delta).ln() / (epsilon_m * epsilon_m);
    let m = (raw.ceil() as usize).max(1);
    Ok(SampleBudget {
        epsilon_m,
        delta,
        k,
        m,
    })
}

/// How trajectories are cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// Discounted sums over exactly `H` steps; biased by at most
    /// `gamma^H / (1 - gamma)` per coordinate.
    FixedHorizon,
    /// Stop with probability `1 - gamma` each step, sum undiscounted
    /// features: unbiased for the infinite-horizon expectations.
    GeometricTermination,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub epsilon_h: f64,
    /// `ceil((1/(1-gamma)) ln(1/(epsilon_h (1-gamma))))`, at least 1.
    pub horizon: usize,
    pub mode: TruncationMode,
}

impl TruncationPlan {
    /// Horizon guaranteeing truncation error at most `epsilon_h`.
    pub fn fixed(epsilon_h: f64, gamma: f64) -> Result<Self> {
        if epsilon_h <= 0.0 || !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(
                "need epsilon_h > 0 and gamma in [0,1)".into(),
            ));
        }
        let raw = (1.0 / (epsilon_h * (1.0 - gamma))).ln() / (1.0 - gamma);
        let horizon = (raw.ceil() as usize).max(1);
        Ok(TruncationPlan {
            epsilon_h,
            horizon,
            mode: TruncationMode::FixedHorizon,
        })
    }

    pub fn geometric() -> Self {
        TruncationPlan {
            epsilon_h: 0.0,
            horizon: 1,
            mode: TruncationMode::GeometricTermination,
        }
    }
}

/// One geometric-termination trajectory: undiscounted feature totals and the
/// number of states visited. The continuation coin is drawn after the
/// state's features are recorded.
pub fn geometric_feature_sum(
    sim: &dyn Simulator,
    policy: &dyn ActionSelector,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (FeatureVector, usize) {
    let gamma = sim.gamma();
    let mut sum = vec![0.0; sim.feature_dim()];
    let mut state = sim.sample_initial(rng);
    let mut steps = 0usize;
    loop {
        for (j, f) in sim.features(state).iter().enumerate() {
            sum[j] += f;
        }
        steps += 1;
        if rng.random::<f64>() >= gamma {
            return (FeatureVector(sum), steps);
        }
        let action = policy.select(state, rng);
        state = sim.step(state, action, rng);
    }
}

/// Per-trajectory feature sums (and lengths) under the plan. Each trajectory
/// draws from its own substream.
pub fn collect_trajectory_sums(
    sim: &dyn Simulator,
    policy: &dyn ActionSelector,
    m: usize,
    plan: &TruncationPlan,
    seed: u64,
) -> Result<Vec<(FeatureVector, usize)>> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    Ok((0..m)
        .map(|i| {
            let mut stream = rng::substream(seed, i as u64);
            match plan.mode {
                TruncationMode::FixedHorizon => (
                    crate::mdp::discounted_feature_sum(sim, policy, plan.horizon, &mut stream),
                    plan.horizon,
                ),
                TruncationMode::GeometricTermination => {
                    geometric_feature_sum(sim, policy, &mut stream)
                }
            }
        })
        .collect())
}

/// Averaged estimate of the expert's feature expectations from `m`
/// trajectories; pairwise summation keeps the result independent of
/// evaluation order.
pub fn estimate_phi_e(
    sim: &dyn Simulator,
    expert: &dyn ActionSelector,
    m: usize,
    plan: &TruncationPlan,
    seed: u64,
) -> Result<FeatureVector> {
    let sums = collect_trajectory_sums(sim, expert, m, plan, seed)?;
    let raw: Vec<Vec<f64>> = sums.into_iter().map(|(v, _)| v.0).collect();
    let total = rng::pairwise_sum(&raw, sim.feature_dim());
    Ok(FeatureVector(
        total.iter().map(|v| v / m as f64).collect(),
    ))
}

/// Writes one row per trajectory: the k feature sums then the length.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    rows: &[(FeatureVector, usize)],
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no trajectories to write".into()));
    }
    let k = rows[0].0.len();
    let headers: Vec<String> = (0..k).map(|j| format!("phi_{j}")).collect();
    writeln!(out, "{},length", headers.join(","))?;
    for (sum, len) in rows {
        let fields: Vec<String> = sum.0.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{}", fields.join(","), len)?;
    }
    Ok(())
}

/// Reads a dataset produced by [`write_trajectory_csv`].
pub fn read_trajectory_csv(text: &str) -> Result<Vec<(FeatureVector, usize)>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory file".into()))?;
    let k = header.split(',').count() - 1;
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 1 {
            return Err(Error::InvalidArgument("trajectory row width mismatch".into()));
        }
        let values = fields[..k]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string())))
            .collect::<Result<Vec<f64>>>()?;
        let len = fields[k]
            .parse::<usize>()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        rows.push((FeatureVector(values), len));
    }
    Ok(rows)
}
