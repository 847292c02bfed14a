//! JSON scenarios. Matrices are row-major nested arrays; `X0` has one column per agent.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, WeightedDigraph};
use crate::pencil::MatrixPencil;
use crate::Tolerances;

pub const DEFAULT_SAMPLES: usize = 400;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Consensus,
    SwarmStable,
    SwarmUnstable,
}

impl std::str::FromStr for Expectation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consensus" => Ok(Expectation::Consensus),
            "swarm_stable" => Ok(Expectation::SwarmStable),
            "swarm_unstable" => Ok(Expectation::SwarmUnstable),
            other => Err(format!(
                "unknown verdict '{other}' (expected consensus, swarm_stable or swarm_unstable)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "X0")]
    pub x0: Vec<Vec<f64>>,
    pub t_span: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// Problems with one matrix's shape, or `None` with its dimensions when it is rectangular
/// and nonempty.
fn shape_of(name: &str, rows: &[Vec<f64>], errors: &mut Vec<String>) -> Option<(usize, usize)> {
    if rows.is_empty() || rows[0].is_empty() {
        errors.push(format!("{name} is empty"));
        return None;
    }
    let cols = rows[0].len();
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            errors.push(format!(
                "{name} row {} has {} entries, expected {cols}",
                i + 1,
                row.len()
            ));
            ok = false;
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                errors.push(format!("{name}[{},{}] is not finite", i + 1, j + 1));
                ok = false;
            }
        }
    }
    ok.then_some((rows.len(), cols))
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

impl Scenario {
    /// Every problem found, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let e = shape_of("E", &self.e, &mut errors);
        let f = shape_of("F", &self.f, &mut errors);
        let w = shape_of("W", &self.w, &mut errors);
        let x0 = shape_of("X0", &self.x0, &mut errors);
        if let Some((r, c)) = e {
            if r != c {
                errors.push(format!("E is {r}x{c}, expected a square matrix"));
            }
        }
        if let (Some(e), Some(f)) = (e, f) {
            if e != f {
                errors.push(format!(
                    "F is {}x{}, expected {}x{} to match E",
                    f.0, f.1, e.0, e.1
                ));
            }
        }
        if let Some((r, c)) = w {
            if r != c {
                errors.push(format!("W is {r}x{c}, expected a square matrix"));
            } else {
                errors.extend(graph::validate_weights(&to_matrix(&self.w)));
            }
        }
        if let (Some((n, _)), Some((m, _)), Some((xr, xc))) = (e, w, x0) {
            if (xr, xc) != (n, m) {
                errors.push(format!(
                    "X0 is {xr}x{xc}, expected {n}x{m} (n state components by m agents)"
                ));
            }
        }
        let [t0, t1] = self.t_span;
        if t0 != 0.0 {
            errors.push(format!("t_span must start at 0, got {t0}"));
        }
        if !(t1.is_finite() && t1 > 0.0) {
            errors.push(format!("t_span end must be positive and finite, got {t1}"));
        }
        if self.samples < 2 {
            errors.push(format!("samples must be at least 2, got {}", self.samples));
        }
        if let Some(t) = &self.tolerances {
            for (name, v) in [("rank", t.rank), ("eig", t.eig)] {
                if let Some(v) = v {
                    if !(v.is_finite() && v > 0.0) {
                        errors.push(format!("tolerances.{name} must be positive, got {v}"));
                    }
                }
            }
        }
        errors
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(o) = &self.tolerances {
            if let Some(r) = o.rank {
                tol.rank = r;
            }
            if let Some(e) = o.eig {
                tol.eig = e;
            }
        }
        tol
    }

    pub fn t_end(&self) -> f64 {
        self.t_span[1]
    }

    /// Call after [`Scenario::validate`] came back empty.
    pub fn pencil(&self) -> MatrixPencil {
        MatrixPencil::from_real_rows(&self.e, &self.f, &self.tolerances())
            .expect("validated scenario")
    }

    pub fn graph(&self) -> WeightedDigraph {
        WeightedDigraph::from_rows(&self.w).expect("validated scenario")
    }

    pub fn initial_state(&self) -> DMatrix<f64> {
        to_matrix(&self.x0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios serialize")
    }
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text)?;
    let errors = scenario.validate();
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(errors))
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}
