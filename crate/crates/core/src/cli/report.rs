//! The analysis report. Keys are fixed: absent quantities serialize as `null`, never vanish.

use serde::Serialize;

use super::scenario::{Expectation, Scenario};
use crate::criteria::{
    self, Analysis, Classification, FastPathVerdict, ProductTable, Reason, StabilityVerdict,
};
use crate::matkit::C64;
use crate::pencil::Regularity;
use crate::simulator::{ImpulseReport, Trajectory};

#[derive(Debug, Clone, Serialize)]
pub struct LaplacianSection {
    pub spectrum: Vec<C64>,
    pub zero_multiplicity: usize,
    pub has_spanning_tree: bool,
    pub diagonalizable: bool,
    pub left_zero_vector: Option<Vec<C64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSection {
    pub n1: usize,
    pub n2: usize,
    pub h: usize,
    pub residual_e: f64,
    pub residual_f: f64,
    pub cond_q: f64,
    pub cond_p: f64,
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PencilSection {
    pub regularity: Regularity,
    pub rank_e: usize,
    /// Coefficients of `det(sE - F)`, ascending.
    pub char_poly: Vec<C64>,
    pub finite_eigenvalues: Option<Vec<C64>>,
    pub impulse_free: Option<bool>,
    pub decomposition: Option<DecompositionSection>,
    pub decomposition_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub t_end: f64,
    pub samples: usize,
    pub initial_dispersion: f64,
    pub final_dispersion: f64,
    pub min_dispersion: f64,
    pub max_dispersion: f64,
}

impl SimulationSummary {
    pub fn of(traj: &Trajectory) -> Self {
        let d = &traj.dispersion;
        SimulationSummary {
            t_end: *traj.times.last().unwrap_or(&0.0),
            samples: traj.times.len(),
            initial_dispersion: d.first().copied().unwrap_or(0.0),
            final_dispersion: d.last().copied().unwrap_or(0.0),
            min_dispersion: d.iter().copied().fold(f64::INFINITY, f64::min),
            max_dispersion: d.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationCheck {
    pub expected: Expectation,
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub laplacian: LaplacianSection,
    pub pencil: PencilSection,
    pub product_table: ProductTable,
    pub consensus: StabilityVerdict,
    pub swarm_stability: StabilityVerdict,
    pub overall: Classification,
    pub corollary: Option<FastPathVerdict>,
    pub consensus_estimate: Option<Vec<f64>>,
    pub impulse_report: Option<ImpulseReport>,
    pub simulation: Option<SimulationSummary>,
    pub expectation: Option<ExpectationCheck>,
    pub warnings: Vec<String>,
}

/// Whether a verdict meets an expectation: `consensus` asks for the consensus test to pass,
/// `swarm_stable` for the critical test to pass, `swarm_unstable` for an unstable overall call.
pub fn meets(
    expected: Expectation,
    consensus: &StabilityVerdict,
    swarm: &StabilityVerdict,
) -> bool {
    match expected {
        Expectation::Consensus => {
            consensus.classification == Classification::AsymptoticallySwarmStable
        }
        Expectation::SwarmStable => swarm.classification == Classification::SwarmStable,
        Expectation::SwarmUnstable => {
            criteria::overall(consensus, swarm) == Classification::SwarmUnstable
        }
    }
}

fn warnings_from(verdicts: [&StabilityVerdict; 2], a: &Analysis) -> Vec<String> {
    let mut out = Vec::new();
    let boundary: Vec<f64> = verdicts[0]
        .reasons
        .iter()
        .filter_map(|r| match r {
            Reason::BoundaryProduct { real_part, .. } => Some(real_part.abs()),
            _ => None,
        })
        .collect();
    if !boundary.is_empty() {
        out.push(format!(
            "{} products lambda_i mu_j have |Re| <= {:e} (largest {:e}); they are treated as \
             lying on the imaginary axis",
            boundary.len(),
            verdicts[0].tol_strict,
            boundary.iter().copied().fold(0.0, f64::max)
        ));
    }
    for v in verdicts {
        for r in &v.reasons {
            let w = match r {
                Reason::RegularityIndeterminate { det_ratio } => format!(
                    "regularity undecided: largest sampled |det(sE - F)| is {det_ratio:e} of scale"
                ),
                Reason::DecompositionIllConditioned { cond_q, cond_p } => format!(
                    "ill-conditioned decomposition: cond(Q) = {cond_q:e}, cond(P) = {cond_p:e}"
                ),
                Reason::ZeroFiniteEigenvalueAllowed { .. } => {
                    "a zero finite eigenvalue was accepted as critically stable (only nonzero \
                     imaginary-axis eigenvalues are excluded)"
                        .to_string()
                }
                Reason::DecompositionUnavailable { error } => {
                    format!("standard decomposition unavailable: {error}")
                }
                _ => continue,
            };
            if !out.contains(&w) {
                out.push(w);
            }
        }
    }
    if a.is_regular() && a.laplacian.zero_gap() < 1e3 * a.laplacian.cluster_tol {
        out.push(format!(
            "a Laplacian eigenvalue of modulus {:e} is close to the zero-cluster tolerance",
            a.laplacian.zero_gap()
        ));
    }
    out
}

/// Assembles the report from the criteria verdicts; nothing is re-derived here.
pub fn build(scenario: &Scenario, a: &Analysis) -> Report {
    let consensus = criteria::check_consensus(a);
    let swarm = criteria::check_swarm_stability(a);
    let overall = criteria::overall(&consensus, &swarm);
    let lap = &a.laplacian;
    let decomposition = a.decomposition.as_ref().ok().map(|d| DecompositionSection {
        n1: d.n1,
        n2: d.n2,
        h: d.h,
        residual_e: d.residual_e,
        residual_f: d.residual_f,
        cond_q: d.cond_q,
        cond_p: d.cond_p,
        ill_conditioned: d.is_ill_conditioned(),
    });
    let decomposition_error = a.decomposition.as_ref().err().map(|e| e.to_string());
    let warnings = warnings_from([&consensus, &swarm], a);
    Report {
        scenario: scenario.clone(),
        laplacian: LaplacianSection {
            spectrum: lap.spectrum.values(),
            zero_multiplicity: lap.zero_multiplicity,
            has_spanning_tree: lap.has_spanning_tree,
            diagonalizable: lap.diagonalizable,
            left_zero_vector: lap.left_zero_vector.as_ref().map(|v| v.as_slice().to_vec()),
        },
        pencil: PencilSection {
            regularity: a.char_poly.regularity,
            rank_e: a.rank_e,
            char_poly: a.char_poly.poly.coeffs().to_vec(),
            finite_eigenvalues: a.finite.as_ref().map(|s| s.values()),
            impulse_free: a.impulse_free(),
            decomposition,
            decomposition_error,
        },
        product_table: a.product_table(),
        expectation: scenario.expect.map(|expected| ExpectationCheck {
            expected,
            matched: meets(expected, &consensus, &swarm),
        }),
        corollary: criteria::corollary_fast_paths(a),
        consensus,
        swarm_stability: swarm,
        overall,
        consensus_estimate: None,
        impulse_report: None,
        simulation: None,
        warnings,
    }
}

fn round(z: C64) -> String {
    if z.im.abs() < 5e-5 {
        format!("{:.4}", z.re)
    } else {
        format!("{:.4}{:+.4}i", z.re, z.im)
    }
}

fn list(values: &[C64]) -> String {
    let items: Vec<String> = values.iter().map(|z| round(*z)).collect();
    format!("{{{}}}", items.join(", "))
}

fn label(c: Classification) -> &'static str {
    match c {
        Classification::AsymptoticallySwarmStable => "consensus (asymptotically swarm stable)",
        Classification::SwarmStable => "swarm stable (critical)",
        Classification::SwarmUnstable => "swarm unstable",
        Classification::Indeterminate => "indeterminate",
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Short human-readable summary with rounded numbers.
    pub fn to_text(&self) -> String {
        let mut lines = vec![format!("scenario      {}", self.scenario.name)];
        lines.push(format!(
            "laplacian     spectrum {}, spanning tree {}, diagonalizable {}",
            list(&self.laplacian.spectrum),
            self.laplacian.has_spanning_tree,
            self.laplacian.diagonalizable
        ));
        let p = &self.pencil;
        let finite = p
            .finite_eigenvalues
            .as_ref()
            .map(|v| list(v))
            .unwrap_or_else(|| "none (pencil not regular)".into());
        lines.push(format!(
            "pencil        rank E {}, finite eigenvalues {}, impulse free {}",
            p.rank_e,
            finite,
            p.impulse_free
                .map(|b| b.to_string())
                .unwrap_or("n/a".into())
        ));
        if let Some(d) = &p.decomposition {
            lines.push(format!(
                "decomposition n1 {}, n2 {}, h {}, residual {:.1e}",
                d.n1,
                d.n2,
                d.h,
                d.residual_e.max(d.residual_f)
            ));
        }
        lines.push(format!(
            "consensus     {}",
            label(self.consensus.classification)
        ));
        lines.push(format!(
            "swarm test    {}",
            label(self.swarm_stability.classification)
        ));
        if let Some(c) = &self.corollary {
            lines.push(format!(
                "fast path     {:?}: {}",
                c.rule,
                if c.asymptotically_stable {
                    "consensus"
                } else {
                    "no consensus"
                }
            ));
        }
        lines.push(format!("verdict       {}", label(self.overall)));
        if let Some(c) = &self.consensus_estimate {
            let items: Vec<String> = c.iter().map(|v| format!("{v:.4}")).collect();
            lines.push(format!("consensus at  [{}]", items.join(", ")));
        }
        if let Some(s) = &self.simulation {
            lines.push(format!(
                "dispersion    {:.4} at t = 0+, {:.4} at t = {}",
                s.initial_dispersion, s.final_dispersion, s.t_end
            ));
        }
        if let Some(e) = &self.expectation {
            lines.push(format!(
                "expected      {:?}: {}",
                e.expected,
                if e.matched { "met" } else { "NOT met" }
            ));
        }
        for w in &self.warnings {
            lines.push(format!("warning       {w}"));
        }
        lines.join("\n")
    }
}
