//! Per-iteration solver records and their CSV form.

use crate::error::{Error, Result};
use crate::mdp::FeatureVector;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Fw,
    Away,
    Drop,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Fw => "fw",
            StepKind::Away => "away",
            StepKind::Drop => "drop",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        match text {
            "fw" => Ok(StepKind::Fw),
            "away" => Ok(StepKind::Away),
            "drop" => Ok(StepKind::Drop),
            other => Err(Error::InvalidArgument(format!("unknown step kind {other:?}"))),
        }
    }
}

/// One solver iteration.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: usize,
    pub h: f64,
    pub dist: f64,
    pub step_kind: StepKind,
    pub gamma: f64,
    pub active_set_size: usize,
    pub oracle_steps: usize,
    pub wall_ms: f64,
    /// Reward weights handed to the oracle this iteration (not serialized).
    pub w: FeatureVector,
    /// Step-size cap in effect (not serialized; 1 for FW steps).
    pub gamma_max: f64,
    /// Game-value certificate `w_t . (Phi(pi_t) - Phi_E)` for the
    /// multiplicative-weights baseline (not serialized).
    pub game_value: Option<f64>,
    /// Gradient-estimation batch size, for the stochastic solver
    /// (not serialized).
    pub batch_size: Option<usize>,
}

pub const TRACE_CSV_HEADER: &str = "t,h,dist,step_kind,gamma,active_set_size,oracle_steps,wall_ms";

#[derive(Debug, Clone, Default)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last_h(&self) -> Option<f64> {
        self.rows.last().map(|r| r.h)
    }

    pub fn last_dist(&self) -> Option<f64> {
        self.rows.last().map(|r| r.dist)
    }

    /// First iteration index whose distance drops to `threshold`, if any.
    pub fn first_dist_below(&self, threshold: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.dist <= threshold).map(|r| r.t)
    }

    /// Writes the fixed-header CSV. With `deterministic_timing` the wall_ms
    /// column is zeroed so identical runs serialize byte-identically.
    pub fn write_csv<W: Write>(&self, out: &mut W, deterministic_timing: bool) -> Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.rows {
            let wall = if deterministic_timing { 0.0 } else { r.wall_ms };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t,
                r.h,
                r.dist,
                r.step_kind.as_str(),
                r.gamma,
                r.active_set_size,
                r.oracle_steps,
                wall
            )?;
        }
        Ok(())
    }

    /// Parses a CSV produced by [`write_csv`](Self::write_csv). Fields that
    /// are not serialized come back empty.
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == TRACE_CSV_HEADER => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "bad trace header: {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(Error::InvalidArgument(format!(
                    "trace line {} has {} fields",
                    i + 2,
                    fields.len()
                )));
            }
            let parse_f = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad float {s:?}: {e}")))
            };
            let parse_u = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("bad count {s:?}: {e}")))
            };
            rows.push(TraceRow {
                t: parse_u(fields[0])?,
                h: parse_f(fields[1])?,
                dist: parse_f(fields[2])?,
                step_kind: StepKind::parse(fields[3])?,
                gamma: parse_f(fields[4])?,
                active_set_size: parse_u(fields[5])?,
                oracle_steps: parse_u(fields[6])?,
                wall_ms: parse_f(fields[7])?,
                w: FeatureVector(vec![]),
                gamma_max: f64::NAN,
                game_value: None,
                batch_size: None,
            });
        }
        Ok(SolverTrace { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize, h: f64) -> TraceRow {
        TraceRow {
            t,
            h,
            dist: (2.0 * h).sqrt(),
            step_kind: StepKind::Fw,
            gamma: 0.5,
            active_set_size: 2,
            oracle_steps: 11,
            wall_ms: 1.25,
            w: FeatureVector(vec![0.0]),
            gamma_max: 1.0,
            game_value: None,
            batch_size: None,
        }
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let trace = SolverTrace {
            rows: vec![row(1, 0.125), row(2, 1e-13)],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = SolverTrace::read_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.rows[0].h, 0.125);
        assert_eq!(back.rows[1].h, 1e-13);
        assert_eq!(back.rows[1].step_kind, StepKind::Fw);
        assert_eq!(back.rows[0].wall_ms, 1.25);
    }

    #[test]
    fn deterministic_mode_zeroes_wall_time() {
        let trace = SolverTrace { rows: vec![row(1, 0.5)] };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",0"));
    }

    #[test]
    fn rejects_malformed_header() {
        assert!(SolverTrace::read_csv("nope\n1,2").is_err());
    }
}
