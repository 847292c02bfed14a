//! The `analyze`, `simulate` and `paper` commands, independent of argument parsing.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::output;
use super::report::{self, Report, SimulationSummary};
use super::scenario::{Expectation, Scenario, ScenarioError};
use crate::criteria::{self, Classification, CriteriaError};
use crate::simulator::{self, SimError, ZeroModeConvention};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("analysis failed: {0}")]
    Analysis(#[from] CriteriaError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    /// I/O or validation failure.
    Failure = 1,
    Indeterminate = 2,
    /// The scenario's `expect` did not hold.
    ExpectationMismatch = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub tol_rank: Option<f64>,
    pub tol_eig: Option<f64>,
    pub expect: Option<Expectation>,
}

pub fn apply_overrides(mut s: Scenario, o: &Overrides) -> Result<Scenario, CliError> {
    if let Some(n) = o.samples {
        s.samples = n;
    }
    if o.tol_rank.is_some() || o.tol_eig.is_some() {
        let mut t = s.tolerances.unwrap_or_default();
        t.rank = o.tol_rank.or(t.rank);
        t.eig = o.tol_eig.or(t.eig);
        s.tolerances = Some(t);
    }
    if o.expect.is_some() {
        s.expect = o.expect;
    }
    let errors = s.validate();
    if errors.is_empty() {
        Ok(s)
    } else {
        Err(ScenarioError::Invalid(errors).into())
    }
}

pub fn exit_status(r: &Report) -> ExitStatus {
    if r.overall == Classification::Indeterminate {
        return ExitStatus::Indeterminate;
    }
    match &r.expectation {
        Some(check) if !check.matched => ExitStatus::ExpectationMismatch,
        _ => ExitStatus::Ok,
    }
}

/// Full analysis without writing anything.
pub fn analyze(s: &Scenario) -> Result<Report, CliError> {
    let tol = s.tolerances();
    let (pencil, graph) = (s.pencil(), s.graph());
    let analysis = criteria::analyze(&pencil, &graph, &tol)?;
    let mut report = report::build(s, &analysis);
    if analysis.decomposition.is_ok() {
        let sys = simulator::assemble(&pencil, &graph, &tol)?;
        let x0 = s.initial_state();
        let projection = sys.consistent_projection(&x0, ZeroModeConvention::Preserve)?;
        report.impulse_report = Some(projection.impulse_report);
        report.consensus_estimate = sys
            .predicted_consensus_value(&x0)
            .ok()
            .map(|c| c.as_slice().to_vec());
    }
    Ok(report)
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    output::write_atomic(&path, bytes).map_err(|source| CliError::Io { path, source })
}

pub fn write_report(r: &Report, out: &Path) -> Result<(), CliError> {
    write(out.join("report.json"), r.to_json().as_bytes())
}

/// Analysis plus trajectory: writes `report.json`, `trajectory.csv`, `dispersion.csv` and
/// `plot.svg` into `out`. Systems that cannot be decomposed get only the report.
pub fn simulate(s: &Scenario, out: &Path) -> Result<Report, CliError> {
    let mut report = analyze(s)?;
    if report.pencil.decomposition.is_none() {
        write_report(&report, out)?;
        return Ok(report);
    }
    let sys = simulator::assemble(&s.pencil(), &s.graph(), &s.tolerances())?;
    let times = simulator::uniform_grid(s.t_end(), s.samples);
    let traj = sys.simulate(&s.initial_state(), &times)?;
    report.simulation = Some(SimulationSummary::of(&traj));
    if !traj.impulse_report.is_empty() {
        report.warnings.push(
            "the initial state excites impulsive modes; they are reported, not sampled".into(),
        );
    }
    write(out.join("trajectory.csv"), &output::trajectory_csv(&traj))?;
    write(out.join("dispersion.csv"), &output::dispersion_csv(&traj))?;
    write(
        out.join("plot.svg"),
        output::plot_svg(&traj, &s.name).as_bytes(),
    )?;
    write_report(&report, out)?;
    Ok(report)
}
