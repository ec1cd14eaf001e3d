//! Experiment harness: config loading, seeded solver sweeps, CSV traces,
//! summary statistics and SVG convergence plots.

mod plot;
pub mod verify;

pub use plot::{parse_summary_csv, write_convergence_svg, SummarySeries};
pub use verify::{
    reference_projection_iterates, verify_suite, CheckKind, CheckReport, VerifyConfig,
    VerifyReport, Violation,
};

use crate::envs::{build_carsim, build_gridworld, CarSimConfig, GridworldConfig};
use crate::error::{Error, Result};
use crate::expert::{
    estimate_phi_e, sample_budget, write_trajectory_csv, TruncationMode, TruncationPlan,
};
use crate::mdp::{
    ActionSelector, FeatureVector, MatrixSimulator, MdpSpec, Simulator, StochasticPolicy,
};
use crate::oracle::{best_response_exact, EnvView, OracleConfig};
use crate::rng;
use crate::solvers::{
    blended_target, solve_ascg, solve_cg, solve_mwal, solve_sfw, InitPolicy, Objective,
    SfwSchedule, SolverOptions, SolverOutput, SolverTrace, StepRule,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Which environment an experiment runs in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Gridworld(GridworldConfig),
    Carsim(CarSimConfig),
    /// Any MDP loaded from its JSON form.
    MdpFile { path: String },
}

/// How the target feature expectations are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertEstimation {
    /// Exact dynamic programming on the expert policy.
    Exact,
    /// Averaged sampled trajectories of the expert.
    Sampled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertSpec {
    /// Reward weights the expert optimizes; `None` uses the environment's
    /// built-in weights.
    pub true_w: Option<Vec<f64>>,
    /// Mixes the expert's feature expectations toward the uniform policy's,
    /// moving the target off the boundary.
    pub blend_uniform: f64,
    pub estimation: ExpertEstimation,
    /// Trajectory count for sampled estimation; computed from
    /// `epsilon_m`/`delta` when absent.
    pub m: Option<usize>,
    pub epsilon_m: Option<f64>,
    pub delta: Option<f64>,
    pub truncation: TruncationMode,
    /// Fixed-horizon length; derived from `epsilon_h` when absent.
    pub horizon: Option<usize>,
    pub epsilon_h: Option<f64>,
}

impl Default for ExpertSpec {
    fn default() -> Self {
        ExpertSpec {
            true_w: None,
            blend_uniform: 0.0,
            estimation: ExpertEstimation::Exact,
            m: None,
            epsilon_m: None,
            delta: None,
            truncation: TruncationMode::FixedHorizon,
            horizon: None,
            epsilon_h: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SolverSpec {
    Cg {
        #[serde(default)]
        step_rule: StepRule,
    },
    Ascg {},
    Sfw {
        #[serde(default)]
        lipschitz: Option<f64>,
        #[serde(default)]
        smoothness: Option<f64>,
        #[serde(default)]
        diameter: Option<f64>,
    },
    Mwal {},
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Cg { .. } => "cg",
            SolverSpec::Ascg {} => "ascg",
            SolverSpec::Sfw { .. } => "sfw",
            SolverSpec::Mwal {} => "mwal",
        }
    }

    /// Parses a comma-separated list like `cg,ascg,sfw,mwal`.
    pub fn parse_list(text: &str) -> Result<Vec<SolverSpec>> {
        text.split(',')
            .map(|name| match name.trim() {
                "cg" => Ok(SolverSpec::Cg {
                    step_rule: StepRule::LineSearch,
                }),
                "ascg" => Ok(SolverSpec::Ascg {}),
                "sfw" => Ok(SolverSpec::Sfw {
                    lipschitz: None,
                    smoothness: None,
                    diameter: None,
                }),
                "mwal" => Ok(SolverSpec::Mwal {}),
                other => Err(Error::InvalidConfig(format!("unknown solver {other:?}"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub solvers: Vec<SolverSpec>,
    /// Iterations per solver run.
    pub iterations: usize,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub init: InitPolicy,
    #[serde(default)]
    pub expert: ExpertSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Record real per-iteration wall time in trace CSVs. Off by default so
    /// identical configurations produce byte-identical output files.
    #[serde(default)]
    pub timing: bool,
}

fn default_n_seeds() -> usize {
    1
}

fn default_output_dir() -> String {
    "runs/experiment".into()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.n_seeds == 0 {
            return Err(Error::InvalidConfig("n_seeds must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("need at least one solver".into()));
        }
        self.oracle.validate()?;
        if !(0.0..=1.0).contains(&self.expert.blend_uniform) {
            return Err(Error::InvalidConfig("blend_uniform must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// A built environment: the tensor plus a native simulator view.
pub struct BuiltEnv {
    pub mdp: MdpSpec,
    sim: SimKind,
    /// Environment-default expert reward weights, when defined.
    pub default_weights: Option<FeatureVector>,
}

enum SimKind {
    Grid(crate::envs::Gridworld),
    Car(crate::envs::CarSim),
    Matrix,
}

impl BuiltEnv {
    pub fn simulator(&self) -> Box<dyn Simulator + '_> {
        match &self.sim {
            SimKind::Grid(g) => Box::new(BorrowSim(g)),
            SimKind::Car(c) => Box::new(BorrowSim(c)),
            SimKind::Matrix => Box::new(MatrixSimulator::new(&self.mdp)),
        }
    }
}

/// Wrapper so boxed borrowed simulators satisfy the trait uniformly.
struct BorrowSim<'a, S: Simulator>(&'a S);

impl<S: Simulator> Simulator for BorrowSim<'_, S> {
    fn n_states(&self) -> usize {
        self.0.n_states()
    }
    fn n_actions(&self) -> usize {
        self.0.n_actions()
    }
    fn feature_dim(&self) -> usize {
        self.0.feature_dim()
    }
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }
    fn features(&self, state: usize) -> &[f64] {
        self.0.features(state)
    }
    fn sample_initial(&self, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        self.0.sample_initial(rng)
    }
    fn step(&self, state: usize, action: usize, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        self.0.step(state, action, rng)
    }
}

pub fn build_env(spec: &EnvSpec) -> Result<BuiltEnv> {
    match spec {
        EnvSpec::Gridworld(cfg) => {
            let (mdp, world) = build_gridworld(cfg)?;
            let w = world.expert_weights();
            Ok(BuiltEnv {
                mdp,
                sim: SimKind::Grid(world),
                default_weights: Some(w),
            })
        }
        EnvSpec::Carsim(cfg) => {
            let (mdp, world) = build_carsim(cfg)?;
            let w = world.expert_weights();
            Ok(BuiltEnv {
                mdp,
                sim: SimKind::Car(world),
                default_weights: Some(w),
            })
        }
        EnvSpec::MdpFile { path } => {
            let text = fs::read_to_string(path)?;
            let mdp = MdpSpec::from_json(&text)?;
            Ok(BuiltEnv {
                mdp,
                sim: SimKind::Matrix,
                default_weights: None,
            })
        }
    }
}

/// The resolved experiment target.
pub struct ExpertTarget {
    pub phi_e: FeatureVector,
    pub expert_policy: StochasticPolicy,
    /// Per-trajectory sums when estimation was sampled (for persistence).
    pub dataset: Option<Vec<(FeatureVector, usize)>>,
}

/// Builds the expert policy (optimal for the true weights) and the target
/// feature expectations per the spec. Sampled estimation rolls the expert
/// (blended per trajectory with the uniform policy) through the simulator.
pub fn expert_target(
    built: &BuiltEnv,
    spec: &ExpertSpec,
    oracle: &OracleConfig,
    seed: u64,
) -> Result<ExpertTarget> {
    let mdp = &built.mdp;
    let weights = match (&spec.true_w, &built.default_weights) {
        (Some(w), _) => FeatureVector(w.clone()),
        (None, Some(w)) => w.clone(),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "this environment has no default expert weights; set expert.true_w".into(),
            ))
        }
    };
    if weights.len() != mdp.feature_dim() {
        return Err(Error::InvalidConfig("expert.true_w dimension mismatch".into()));
    }
    let expert = best_response_exact(mdp, &weights, oracle)?;
    let expert_policy = expert.policy.to_stochastic(mdp.n_actions);

    match spec.estimation {
        ExpertEstimation::Exact => {
            let phi_e = blended_target(mdp, &expert_policy, spec.blend_uniform)?;
            Ok(ExpertTarget {
                phi_e,
                expert_policy,
                dataset: None,
            })
        }
        ExpertEstimation::Sampled => {
            let m = match (spec.m, spec.epsilon_m, spec.delta) {
                (Some(m), _, _) => m,
                (None, Some(eps), Some(delta)) => sample_budget(eps, delta, mdp.feature_dim())?.m,
                _ => {
                    return Err(Error::InvalidConfig(
                        "sampled expert needs m or (epsilon_m, delta)".into(),
                    ))
                }
            };
            let plan = match spec.truncation {
                TruncationMode::GeometricTermination => TruncationPlan::geometric(),
                TruncationMode::FixedHorizon => match (spec.horizon, spec.epsilon_h) {
                    (Some(h), _) => TruncationPlan {
                        epsilon_h: spec.epsilon_h.unwrap_or(0.0),
                        horizon: h.max(1),
                        mode: TruncationMode::FixedHorizon,
                    },
                    (None, Some(eps_h)) => TruncationPlan::fixed(eps_h, mdp.discount)?,
                    (None, None) => TruncationPlan {
                        epsilon_h: 0.0,
                        horizon: oracle.horizon.max(1),
                        mode: TruncationMode::FixedHorizon,
                    },
                },
            };
            let sim = built.simulator();
            let uniform = StochasticPolicy::uniform(mdp.n_states, mdp.n_actions);
            let mut dataset = Vec::with_capacity(m);
            for i in 0..m {
                let mut stream = rng::substream(rng::mix(seed, 0xe8_9e87), i as u64);
                let use_uniform = spec.blend_uniform > 0.0
                    && stream.random::<f64>() < spec.blend_uniform;
                let policy: &dyn ActionSelector = if use_uniform {
                    &uniform
                } else {
                    &expert_policy
                };
                let row = match plan.mode {
                    TruncationMode::FixedHorizon => (
                        crate::mdp::discounted_feature_sum(
                            sim.as_ref(),
                            policy,
                            plan.horizon,
                            &mut stream,
                        ),
                        plan.horizon,
                    ),
                    TruncationMode::GeometricTermination => {
                        crate::expert::geometric_feature_sum(sim.as_ref(), policy, &mut stream)
                    }
                };
                dataset.push(row);
            }
            let raw: Vec<Vec<f64>> = dataset.iter().map(|(v, _)| v.0.clone()).collect();
            let total = rng::pairwise_sum(&raw, mdp.feature_dim());
            let phi_e = FeatureVector(total.iter().map(|v| v / m as f64).collect());
            Ok(ExpertTarget {
                phi_e,
                expert_policy,
                dataset: Some(dataset),
            })
        }
    }
}

/// One (solver, seed) cell of the sweep.
#[derive(Debug)]
pub struct RunResult {
    pub solver: &'static str,
    pub seed_index: usize,
    pub seed: u64,
    pub output: SolverOutput,
}

/// Runs the full sweep and writes all artifacts into the run directory.
/// Returns the directory path.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let built = build_env(&cfg.env)?;
    let target = expert_target(&built, &cfg.expert, &cfg.oracle, cfg.base_seed)?;
    let objective = Objective::new(target.phi_e.clone());

    let out_dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out_dir)?;

    write_atomic(
        &out_dir.join("config_resolved.json"),
        serde_json::to_string_pretty(cfg)?.as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("phi_e.json"),
        serde_json::to_string_pretty(&target.phi_e)?.as_bytes(),
    )?;
    if let Some(dataset) = &target.dataset {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, dataset)?;
        write_atomic(&out_dir.join("expert_dataset.csv"), &buf)?;
    }

    // Dispatch solver x seed cells in parallel; the cells are independent
    // and seeded, so ordering cannot change results.
    let cells: Vec<(usize, usize)> = (0..cfg.solvers.len())
        .flat_map(|s| (0..cfg.n_seeds).map(move |i| (s, i)))
        .collect();
    let results: Vec<Result<RunResult>> = cells
        .par_iter()
        .map(|&(solver_idx, seed_idx)| {
            let sim = built.simulator();
            let env = EnvView::new(Some(&built.mdp), sim.as_ref());
            let seed = cfg.base_seed.wrapping_add(seed_idx as u64);
            let opts = SolverOptions {
                iterations: cfg.iterations,
                seed,
                init: cfg.init.clone(),
                step_rule: match &cfg.solvers[solver_idx] {
                    SolverSpec::Cg { step_rule } => *step_rule,
                    _ => StepRule::LineSearch,
                },
            };
            let spec = &cfg.solvers[solver_idx];
            let output = match spec {
                SolverSpec::Cg { .. } => solve_cg(&env, &objective, &cfg.oracle, &opts)?,
                SolverSpec::Ascg {} => solve_ascg(&env, &objective, &cfg.oracle, &opts)?,
                SolverSpec::Sfw {
                    lipschitz,
                    smoothness,
                    diameter,
                } => {
                    let mut schedule = SfwSchedule::for_geometry(
                        built.mdp.feature_dim(),
                        built.mdp.discount,
                    );
                    if let Some(g) = lipschitz {
                        schedule.lipschitz = *g;
                    }
                    if let Some(b) = smoothness {
                        schedule.smoothness = *b;
                    }
                    if let Some(d) = diameter {
                        schedule.diameter = *d;
                    }
                    solve_sfw(&env, &objective, &cfg.oracle, &schedule, &opts)?
                }
                SolverSpec::Mwal {} => solve_mwal(&built.mdp, &objective, &cfg.oracle, &opts)?,
            };
            Ok(RunResult {
                solver: spec.name(),
                seed_index: seed_idx,
                seed,
                output,
            })
        })
        .collect();

    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }

    for run in &runs {
        let mut buf = Vec::new();
        run.output.trace.write_csv(&mut buf, !cfg.timing)?;
        let name = format!("trace_{}_seed{}.csv", run.solver, run.seed_index);
        write_atomic(&out_dir.join(name), &buf)?;
    }

    let summary = summarize(cfg, &runs);
    write_atomic(&out_dir.join("summary.csv"), summary.as_bytes())?;

    // The plot is rendered from the summary CSV text it just wrote, never
    // from the in-memory traces.
    let series = parse_summary_csv(&summary)?;
    let svg = plot::render_convergence_svg(&series, "distance to target per iteration");
    write_atomic(&out_dir.join("convergence.svg"), svg.as_bytes())?;

    Ok(out_dir)
}

/// Per-iteration mean and standard deviation of the distance column across
/// seeds, one block per solver.
fn summarize(cfg: &ExperimentConfig, runs: &[RunResult]) -> String {
    let mut out = String::from("solver,t,mean_dist,std_dist,n_seeds\n");
    for spec in &cfg.solvers {
        let solver = spec.name();
        let traces: Vec<&SolverTrace> = runs
            .iter()
            .filter(|r| r.solver == solver)
            .map(|r| &r.output.trace)
            .collect();
        let t_max = traces.iter().map(|tr| tr.len()).max().unwrap_or(0);
        for t in 1..=t_max {
            let dists: Vec<f64> = traces
                .iter()
                .filter_map(|tr| tr.rows.get(t - 1).map(|r| r.dist))
                .collect();
            if dists.is_empty() {
                continue;
            }
            let n = dists.len() as f64;
            let mean = dists.iter().sum::<f64>() / n;
            let std = if dists.len() > 1 {
                (dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push_str(&format!("{solver},{t},{mean},{std},{}\n", dists.len()));
        }
    }
    out
}

/// Writes through a temp file and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
