//! Reduced cross-oracle suites for a quick health check of a build.

use std::fmt::Write as _;

use super::report::meets;
use super::scenario::Scenario;
use crate::criteria;
use crate::graph;
use crate::matkit;
use crate::pencil::{self, MatrixPencil};
use crate::random;
use crate::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult {
            name,
            cases: 0,
            skipped: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestSummary {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl SelftestSummary {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.suites
            .iter()
            .filter(|s| !s.passed())
            .map(|s| s.name)
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("selftest seed {}\n", self.seed);
        for s in &self.suites {
            let _ = writeln!(
                out,
                "{:<26} {:>4} cases {:>3} skipped  {}",
                s.name,
                s.cases,
                s.skipped,
                if s.passed() { "PASS" } else { "FAIL" }
            );
            for f in &s.failures {
                let _ = writeln!(out, "    {f}");
            }
        }
        let _ = write!(
            out,
            "{}",
            if self.passed() {
                "all suites passed"
            } else {
                "FAILED"
            }
        );
        out
    }
}

const PENCILS: u64 = 60;
const DIGRAPHS: u64 = 100;

fn random_pencil(seed: u64, case: u64) -> MatrixPencil {
    let mut rng = random::rng(seed.wrapping_mul(1_000_003).wrapping_add(case));
    let n = 1 + (case as usize % 6);
    if case.is_multiple_of(2) {
        random::generic_pencil(&mut rng, n)
    } else {
        random::structured_pencil(&mut rng, n).0
    }
}

fn route_agreement(seed: u64, tol: &Tolerances) -> SuiteResult {
    let mut suite = SuiteResult::new("route agreement");
    for case in 0..PENCILS {
        suite.cases += 1;
        let p = random_pencil(seed, case);
        let outcome = (|| {
            let roots = pencil::char_poly(&p)?.root_values()?;
            let d = pencil::standard_decomposition(&p, tol)?;
            let a1 = matkit::eigenvalues(&d.a1)?;
            Ok::<f64, pencil::PencilError>(matkit::multiset_distance(&roots, &a1))
        })();
        match outcome {
            Ok(gap) if gap <= 1e-6 => {}
            Ok(gap) => suite
                .failures
                .push(format!("case {case}: routes differ by {gap:e}")),
            Err(e) => suite.failures.push(format!("case {case}: {e}")),
        }
    }
    suite
}

fn lemma3_equivalence(seed: u64, tol: &Tolerances) -> SuiteResult {
    let mut suite = SuiteResult::new("spanning tree equivalence");
    for case in 0..DIGRAPHS {
        let mut rng = random::rng(seed.wrapping_mul(7_919).wrapping_add(case));
        let m = 1 + (case as usize % 7);
        let g = random::digraph(&mut rng, m);
        match graph::analyze_laplacian(&g, tol) {
            Ok(a) if a.zero_gap() < 1e3 * a.cluster_tol => suite.skipped += 1,
            Ok(a) => {
                suite.cases += 1;
                if a.has_spanning_tree != (a.zero_multiplicity == 1) {
                    suite.failures.push(format!(
                        "case {case}: spanning tree {} but zero multiplicity {}",
                        a.has_spanning_tree, a.zero_multiplicity
                    ));
                }
            }
            Err(e) => {
                suite.cases += 1;
                suite.failures.push(format!("case {case}: {e}"));
            }
        }
    }
    suite
}

fn reconstruction(seed: u64, tol: &Tolerances, instances: &[Scenario]) -> SuiteResult {
    let mut suite = SuiteResult::new("reconstruction residuals");
    let mut pencils: Vec<(String, MatrixPencil)> = (0..PENCILS)
        .map(|case| (format!("case {case}"), random_pencil(seed, case)))
        .collect();
    for s in instances {
        if s.validate().is_empty() {
            pencils.push((s.name.clone(), s.pencil()));
        } else {
            suite.failures.push(format!("{}: invalid scenario", s.name));
        }
    }
    for (name, p) in pencils {
        suite.cases += 1;
        let outcome = pencil::standard_decomposition(&p, tol).and_then(|d| {
            let checks = pencil::impulse_checks(&p, &d)?;
            Ok((d, checks))
        });
        match outcome {
            Ok((d, checks)) => {
                let e_scale = matkit::norm2(p.e()) + 1.0;
                let f_scale = matkit::norm2(p.f()) + 1.0;
                let residual = (d.residual_e / e_scale).max(d.residual_f / f_scale);
                if residual > 1e-8 {
                    suite
                        .failures
                        .push(format!("{name}: scaled residual {residual:e}"));
                }
                if !checks.agree() {
                    suite
                        .failures
                        .push(format!("{name}: impulse-free tests disagree {checks:?}"));
                }
            }
            Err(e) => suite.failures.push(format!("{name}: {e}")),
        }
    }
    suite
}

fn instance_verdicts(instances: &[Scenario]) -> SuiteResult {
    let mut suite = SuiteResult::new("embedded instance verdicts");
    for s in instances {
        suite.cases += 1;
        let errors = s.validate();
        if !errors.is_empty() {
            suite
                .failures
                .push(format!("{}: {}", s.name, errors.join("; ")));
            continue;
        }
        let Some(expected) = s.expect else {
            suite.skipped += 1;
            continue;
        };
        match criteria::analyze(&s.pencil(), &s.graph(), &s.tolerances()) {
            Ok(a) => {
                let consensus = criteria::check_consensus(&a);
                let swarm = criteria::check_swarm_stability(&a);
                if !meets(expected, &consensus, &swarm) {
                    suite.failures.push(format!(
                        "{}: expected {expected:?}, consensus test {:?}, swarm test {:?}",
                        s.name, consensus.classification, swarm.classification
                    ));
                }
            }
            Err(e) => suite.failures.push(format!("{}: {e}", s.name)),
        }
    }
    suite
}

pub fn selftest(seed: u64, instances: &[Scenario]) -> SelftestSummary {
    let tol = Tolerances::default();
    SelftestSummary {
        seed,
        suites: vec![
            route_agreement(seed, &tol),
            lemma3_equivalence(seed, &tol),
            reconstruction(seed, &tol, instances),
            instance_verdicts(instances),
        ],
    }
}
