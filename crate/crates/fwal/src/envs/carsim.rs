//! Three-lane highway driving domain.
//!
//! The agent (car A) occupies one of five horizontal slots — three lanes
//! plus an off-road strip on each side — at a fixed row at the bottom of the
//! frame, and drives at one of several speed levels. A slower car B descends
//! one row per step in its lane; when it leaves the frame it respawns at the
//! top in a uniformly random lane (the only stochasticity in the domain).
//! Features are `(speed, collision, off-road)`, each in `[0,1]`; a collision
//! fires whenever both cars share a cell.
//!
//! The exact frame geometry and speed discretization are reconstructions
//! and are configurable.

use crate::error::{Error, Result};
use crate::mdp::{FeatureVector, MdpSpec, Simulator};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const N_LANES: usize = 3;
/// Slots: 0 = off-road left, 1..=3 = lanes, 4 = off-road right.
const N_SLOTS: usize = N_LANES + 2;
/// left, right, faster, slower, keep.
const CAR_ACTIONS: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CarSimConfig {
    /// Rows in the frame; car B travels from row 0 to `n_rows - 1`.
    pub n_rows: usize,
    /// Discrete speed levels for the agent.
    pub n_speeds: usize,
    pub gamma: f64,
}

impl Default for CarSimConfig {
    fn default() -> Self {
        CarSimConfig {
            n_rows: 5,
            n_speeds: 3,
            gamma: 0.9,
        }
    }
}

impl CarSimConfig {
    fn validate(&self) -> Result<()> {
        if self.n_rows < 2 || self.n_speeds < 2 {
            return Err(Error::InvalidConfig(
                "car simulator needs at least 2 rows and 2 speed levels".into(),
            ));
        }
        let n_states = N_SLOTS * self.n_speeds * N_LANES * self.n_rows;
        if n_states > 2000 {
            return Err(Error::InvalidConfig(format!(
                "car discretization yields {n_states} states; keep it at or below 2000 \
                 so exact planning stays available"
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig("gamma must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Native step simulator for the driving domain.
pub struct CarSim {
    n_rows: usize,
    n_speeds: usize,
    gamma: f64,
    features: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CarState {
    slot: usize,
    speed: usize,
    b_lane: usize,
    b_row: usize,
}

impl CarSim {
    fn encode(&self, s: CarState) -> usize {
        ((s.slot * self.n_speeds + s.speed) * N_LANES + s.b_lane) * self.n_rows + s.b_row
    }

    fn decode(&self, idx: usize) -> CarState {
        let b_row = idx % self.n_rows;
        let rest = idx / self.n_rows;
        let b_lane = rest % N_LANES;
        let rest = rest / N_LANES;
        let speed = rest % self.n_speeds;
        let slot = rest / self.n_speeds;
        CarState {
            slot,
            speed,
            b_lane,
            b_row,
        }
    }

    /// Row occupied by the agent.
    fn agent_row(&self) -> usize {
        self.n_rows - 1
    }

    fn is_offroad(slot: usize) -> bool {
        slot == 0 || slot == N_SLOTS - 1
    }

    fn collides(&self, s: CarState) -> bool {
        !Self::is_offroad(s.slot) && s.b_row == self.agent_row() && s.b_lane == s.slot - 1
    }

    fn feature_row(&self, s: CarState) -> Vec<f64> {
        vec![
            s.speed as f64 / (self.n_speeds - 1) as f64,
            if self.collides(s) { 1.0 } else { 0.0 },
            if Self::is_offroad(s.slot) { 1.0 } else { 0.0 },
        ]
    }

    /// Agent part of the transition (deterministic).
    fn apply_action(&self, s: CarState, action: usize) -> CarState {
        let mut next = s;
        match action {
            0 => next.slot = s.slot.saturating_sub(1),
            1 => next.slot = (s.slot + 1).min(N_SLOTS - 1),
            2 => next.speed = (s.speed + 1).min(self.n_speeds - 1),
            3 => next.speed = s.speed.saturating_sub(1),
            _ => {}
        }
        next
    }

    /// Whether car B exits the frame this step (triggering the respawn).
    fn b_exits(&self, s: CarState) -> bool {
        s.b_row + 1 >= self.n_rows
    }

    /// The hidden reward weights the expert optimizes, trading off speed
    /// against collisions and off-road driving.
    pub fn expert_weights(&self) -> FeatureVector {
        let raw = [0.6, -1.0, -0.4];
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        FeatureVector(raw.iter().map(|v| v / norm).collect())
    }

    /// States the episode may start in: middle lane, middle speed, car B at
    /// the top of each lane.
    fn initial_states(&self) -> Vec<usize> {
        (0..N_LANES)
            .map(|lane| {
                self.encode(CarState {
                    slot: (N_SLOTS - 1) / 2,
                    speed: (self.n_speeds - 1) / 2,
                    b_lane: lane,
                    b_row: 0,
                })
            })
            .collect()
    }
}

impl Simulator for CarSim {
    fn n_states(&self) -> usize {
        N_SLOTS * self.n_speeds * N_LANES * self.n_rows
    }

    fn n_actions(&self) -> usize {
        CAR_ACTIONS
    }

    fn feature_dim(&self) -> usize {
        3
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn features(&self, state: usize) -> &[f64] {
        &self.features[state]
    }

    fn sample_initial(&self, rng: &mut ChaCha8Rng) -> usize {
        let starts = self.initial_states();
        starts[rng.random_range(0..N_LANES)]
    }

    fn step(&self, state: usize, action: usize, rng: &mut ChaCha8Rng) -> usize {
        let s = self.decode(state);
        let mut next = self.apply_action(s, action);
        if self.b_exits(s) {
            next.b_row = 0;
            next.b_lane = rng.random_range(0..N_LANES);
        } else {
            next.b_row = s.b_row + 1;
        }
        self.encode(next)
    }
}

/// Builds the explicit tensor and the native simulator view.
pub fn build_carsim(cfg: &CarSimConfig) -> Result<(MdpSpec, CarSim)> {
    cfg.validate()?;
    let sim = CarSim {
        n_rows: cfg.n_rows,
        n_speeds: cfg.n_speeds,
        gamma: cfg.gamma,
        features: Vec::new(),
    };
    let n = sim.n_states();
    let features: Vec<Vec<f64>> = (0..n).map(|idx| sim.feature_row(sim.decode(idx))).collect();

    let mut transitions = vec![vec![vec![0.0; n]; n]; CAR_ACTIONS];
    for (a, per_action) in transitions.iter_mut().enumerate() {
        for (idx, row) in per_action.iter_mut().enumerate() {
            let s = sim.decode(idx);
            let moved = sim.apply_action(s, a);
            if sim.b_exits(s) {
                for lane in 0..N_LANES {
                    let next = sim.encode(CarState {
                        b_lane: lane,
                        b_row: 0,
                        ..moved
                    });
                    row[next] += 1.0 / N_LANES as f64;
                }
                // Fold rounding residue into the last lane so rows sum to 1.
                let residue = 1.0 - row.iter().sum::<f64>();
                let last = sim.encode(CarState {
                    b_lane: N_LANES - 1,
                    b_row: 0,
                    ..moved
                });
                row[last] += residue;
            } else {
                let next = sim.encode(CarState {
                    b_row: s.b_row + 1,
                    ..moved
                });
                row[next] = 1.0;
            }
        }
    }

    let mut initial = vec![0.0; n];
    for idx in sim.initial_states() {
        initial[idx] += 1.0 / N_LANES as f64;
    }
    let first = sim.initial_states()[0];
    initial[first] += 1.0 - initial.iter().sum::<f64>();

    let mdp = MdpSpec::new(n, CAR_ACTIONS, cfg.gamma, transitions, initial, features.clone())?;
    let world = CarSim { features, ..sim };
    Ok((mdp, world))
}
