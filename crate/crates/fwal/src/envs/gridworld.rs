//! Square gridworld with one-hot cell features.
//!
//! The agent moves up/down/left/right; moves off the edge keep it in place.
//! Reaching the goal cell restarts the episode from the initial cell on the
//! next step. The true (hidden) reward used to construct experts is +1 at
//! the goal; features are one-hot cell indicators, so that reward is linear
//! in the features.

use crate::error::{Error, Result};
use crate::mdp::{FeatureVector, MdpSpec, Simulator};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridworldConfig {
    pub size: usize,
    /// (row, col) the agent restarts from.
    pub start: (usize, usize),
    /// (row, col) carrying the positive reward.
    pub goal: (usize, usize),
    pub gamma: f64,
}

impl Default for GridworldConfig {
    fn default() -> Self {
        GridworldConfig {
            size: 5,
            start: (0, 0),
            goal: (4, 4),
            gamma: 0.9,
        }
    }
}

impl GridworldConfig {
    fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidConfig("grid size must be positive".into()));
        }
        for (what, cell) in [("start", self.start), ("goal", self.goal)] {
            if cell.0 >= self.size || cell.1 >= self.size {
                return Err(Error::InvalidConfig(format!("{what} cell outside the grid")));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig("gamma must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Native step simulator for the gridworld.
pub struct Gridworld {
    size: usize,
    start: usize,
    goal: usize,
    gamma: f64,
    features: Vec<Vec<f64>>,
}

pub const GRID_ACTIONS: usize = 4; // up, down, left, right

impl Gridworld {
    fn cell(&self, row: usize, col: usize) -> usize {
        row * self.size + col
    }

    fn move_from(&self, state: usize, action: usize) -> usize {
        if state == self.goal {
            return self.start;
        }
        let (row, col) = (state / self.size, state % self.size);
        let (nr, nc) = match action {
            0 => (row.saturating_sub(1), col),
            1 => ((row + 1).min(self.size - 1), col),
            2 => (row, col.saturating_sub(1)),
            _ => (row, (col + 1).min(self.size - 1)),
        };
        self.cell(nr, nc)
    }

    /// Index of the goal cell (also the index of its one-hot feature).
    pub fn goal_state(&self) -> usize {
        self.goal
    }

    /// The hidden reward weights the expert optimizes: +1 on the goal cell.
    pub fn expert_weights(&self) -> FeatureVector {
        let mut w = vec![0.0; self.size * self.size];
        w[self.goal] = 1.0;
        FeatureVector(w)
    }
}

impl Simulator for Gridworld {
    fn n_states(&self) -> usize {
        self.size * self.size
    }

    fn n_actions(&self) -> usize {
        GRID_ACTIONS
    }

    fn feature_dim(&self) -> usize {
        self.size * self.size
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn features(&self, state: usize) -> &[f64] {
        &self.features[state]
    }

    fn sample_initial(&self, _rng: &mut ChaCha8Rng) -> usize {
        self.start
    }

    fn step(&self, state: usize, action: usize, _rng: &mut ChaCha8Rng) -> usize {
        self.move_from(state, action)
    }
}

/// Builds the explicit tensor and the native simulator view.
pub fn build_gridworld(cfg: &GridworldConfig) -> Result<(MdpSpec, Gridworld)> {
    cfg.validate()?;
    let size = cfg.size;
    let n = size * size;
    let start = cfg.start.0 * size + cfg.start.1;
    let goal = cfg.goal.0 * size + cfg.goal.1;
    let features: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut row = vec![0.0; n];
            row[s] = 1.0;
            row
        })
        .collect();

    // The tensor is assembled from the movement rules directly; the
    // simulator below recomputes moves step by step.
    let mut transitions = vec![vec![vec![0.0; n]; n]; GRID_ACTIONS];
    for (a, per_action) in transitions.iter_mut().enumerate() {
        for (s, row) in per_action.iter_mut().enumerate() {
            let next = if s == goal {
                start
            } else {
                let (r, c) = (s / size, s % size);
                let (nr, nc) = match a {
                    0 => (r.saturating_sub(1), c),
                    1 => ((r + 1).min(size - 1), c),
                    2 => (r, c.saturating_sub(1)),
                    _ => (r, (c + 1).min(size - 1)),
                };
                nr * size + nc
            };
            row[next] = 1.0;
        }
    }
    let mut initial = vec![0.0; n];
    initial[start] = 1.0;

    let mdp = MdpSpec::new(n, GRID_ACTIONS, cfg.gamma, transitions, initial, features.clone())?;
    let world = Gridworld {
        size,
        start,
        goal,
        gamma: cfg.gamma,
        features,
    };
    Ok((mdp, world))
}
