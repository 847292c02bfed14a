//! Consensus and swarm-stability verdicts from the Laplacian spectrum and the finite
//! eigenvalues of `(E, F)`.
//!
//! The stacked dynamics decouple along the Jordan structure of `L` into pencils
//! `(E, -lambda_i F)`, whose finite eigenvalues are `-lambda_i mu_j` by the scaling law, so
//! every verdict is read off the products `lambda_i mu_j` over nonzero `lambda_i`.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{self, LaplacianAnalysis, WeightedDigraph};
use crate::matkit::{self, LinalgError, Spectrum, C64};
use crate::pencil::{self, CharPoly, MatrixPencil, PencilError, Regularity, StandardDecomposition};
use crate::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Pencil(#[from] PencilError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AsymptoticallySwarmStable,
    /// Bounded pairwise differences that do not all converge.
    SwarmStable,
    SwarmUnstable,
    Indeterminate,
}

/// Why a verdict came out the way it did.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    SpanningTree {
        present: bool,
    },
    PencilNotRegular,
    RegularityIndeterminate {
        det_ratio: f64,
    },
    NotImpulseFree {
        degree: usize,
        rank_e: usize,
    },
    LaplacianDiagonalizable {
        diagonalizable: bool,
    },
    /// `Re(lambda mu)` strictly negative: a coupled mode grows.
    NegativeProduct {
        lambda: C64,
        mu: C64,
        product: C64,
    },
    /// `Re(lambda mu)` within the strict tolerance of zero.
    BoundaryProduct {
        lambda: C64,
        mu: C64,
        real_part: f64,
        tol: f64,
    },
    /// An on-axis finite eigenvalue with a Jordan block in `A1`.
    DefectiveOnAxis {
        mu: C64,
        algebraic: usize,
        geometric: usize,
    },
    /// `L` is not diagonalizable and a nonzero finite eigenvalue sits on the imaginary axis.
    AxisEigenvalueWithDefectiveLaplacian {
        mu: C64,
    },
    DefectiveLaplacianZero,
    /// A zero finite eigenvalue was accepted for critical stability because only nonzero
    /// imaginary-axis eigenvalues are excluded.
    ZeroFiniteEigenvalueAllowed {
        multiplicity: usize,
    },
    DecompositionUnavailable {
        error: String,
    },
    DecompositionIllConditioned {
        cond_q: f64,
        cond_p: f64,
    },
    /// The consensus test fell on its boundary and the swarm-stability test decided.
    DeferredToSwarmStability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductEntry {
    /// 1-based position of `lambda` in the Laplacian spectrum (zero eigenvalues skipped).
    pub i: usize,
    /// 1-based position of `mu` among the finite eigenvalues.
    pub j: usize,
    pub lambda: C64,
    pub mu: C64,
    pub product: C64,
    pub real_part: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ProductTable {
    pub entries: Vec<ProductEntry>,
}

impl ProductTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_real_part(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.real_part).reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub classification: Classification,
    pub reasons: Vec<Reason>,
    #[serde(skip)]
    pub product_table: ProductTable,
    pub tol_strict: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FastPathRule {
    /// All finite eigenvalues real.
    RealFiniteEigenvalues,
    /// Symmetric topology.
    SymmetricTopology,
}

/// Outcome of a simplified consensus test; it only decides consensus versus not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FastPathVerdict {
    pub rule: FastPathRule,
    pub asymptotically_stable: bool,
    pub reasons: Vec<Reason>,
}

/// Everything the criteria need about one network, computed once.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub laplacian: LaplacianAnalysis,
    pub symmetric_graph: bool,
    pub char_poly: CharPoly,
    pub rank_e: usize,
    /// Finite eigenvalues; `None` unless the pencil is regular.
    pub finite: Option<Spectrum>,
    pub decomposition: Result<StandardDecomposition, PencilError>,
    pub tolerances: Tolerances,
}

impl Analysis {
    pub fn is_regular(&self) -> bool {
        self.char_poly.is_regular()
    }

    pub fn impulse_free(&self) -> Option<bool> {
        self.char_poly.degree().map(|d| d == self.rank_e)
    }

    /// `1e-9 (1 + ||L||) (1 + max |mu|)`.
    pub fn tol_strict(&self) -> f64 {
        let norm_l = matkit::norm2(&self.laplacian.laplacian);
        let max_mu = self
            .finite
            .as_ref()
            .map(|s| s.values().iter().map(|z| z.norm()).fold(0.0, f64::max))
            .unwrap_or(0.0);
        1e-9 * (1.0 + norm_l) * (1.0 + max_mu)
    }

    pub fn product_table(&self) -> ProductTable {
        match &self.finite {
            Some(finite) => product_table(&self.laplacian, finite),
            None => ProductTable::default(),
        }
    }
}

pub fn analyze(
    p: &MatrixPencil,
    g: &WeightedDigraph,
    tol: &Tolerances,
) -> Result<Analysis, CriteriaError> {
    let laplacian = graph::analyze_laplacian(g, tol)?;
    let char_poly = pencil::char_poly(p)?;
    let finite = if char_poly.is_regular() {
        Some(pencil::finite_eigenvalues(p, tol)?)
    } else {
        None
    };
    let decomposition = if char_poly.is_regular() {
        pencil::standard_decomposition(p, tol)
    } else {
        Err(PencilError::NotRegular)
    };
    Ok(Analysis {
        laplacian,
        symmetric_graph: g.is_symmetric(),
        char_poly,
        rank_e: p.rank_e(),
        finite,
        decomposition,
        tolerances: *tol,
    })
}

/// All products `lambda_i mu_j` over nonzero Laplacian eigenvalues, with multiplicity.
pub fn product_table(lap: &LaplacianAnalysis, finite: &Spectrum) -> ProductTable {
    let lambdas = lap.spectrum.values();
    let mus = finite.values();
    let mut entries = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        if lambda.norm() <= lap.cluster_tol {
            continue;
        }
        for (j, &mu) in mus.iter().enumerate() {
            let product = lambda * mu;
            entries.push(ProductEntry {
                i: i + 1,
                j: j + 1,
                lambda,
                mu,
                product,
                real_part: product.re,
            });
        }
    }
    ProductTable { entries }
}

fn regularity_reason(a: &Analysis) -> Option<Reason> {
    match a.char_poly.regularity {
        Regularity::Regular => None,
        Regularity::Singular => Some(Reason::PencilNotRegular),
        Regularity::Indeterminate => Some(Reason::RegularityIndeterminate {
            det_ratio: a.char_poly.det_ratio,
        }),
    }
}

fn verdict(classification: Classification, reasons: Vec<Reason>, a: &Analysis) -> StabilityVerdict {
    StabilityVerdict {
        classification,
        reasons,
        product_table: a.product_table(),
        tol_strict: a.tol_strict(),
    }
}

/// Consensus test: a spanning tree and `Re(lambda_i mu_j) > 0` for every nonzero
/// `lambda_i`. Impulse-freeness is not required. Products on the boundary band are handed to
/// [`check_swarm_stability`].
pub fn check_consensus(a: &Analysis) -> StabilityVerdict {
    if let Some(reason) = regularity_reason(a) {
        return verdict(Classification::Indeterminate, vec![reason], a);
    }
    let tol = a.tol_strict();
    let table = a.product_table();
    let tree = a.laplacian.has_spanning_tree;
    let mut reasons = vec![Reason::SpanningTree { present: tree }];

    let negative: Vec<Reason> = table
        .entries
        .iter()
        .filter(|e| e.real_part < -tol)
        .map(|e| Reason::NegativeProduct {
            lambda: e.lambda,
            mu: e.mu,
            product: e.product,
        })
        .collect();
    if !negative.is_empty() {
        reasons.extend(negative);
        return verdict(Classification::SwarmUnstable, reasons, a);
    }

    let boundary: Vec<Reason> = table
        .entries
        .iter()
        .filter(|e| e.real_part.abs() <= tol)
        .map(|e| Reason::BoundaryProduct {
            lambda: e.lambda,
            mu: e.mu,
            real_part: e.real_part,
            tol,
        })
        .collect();
    if tree && boundary.is_empty() {
        return verdict(Classification::AsymptoticallySwarmStable, reasons, a);
    }

    // either several zero modes or a product on the imaginary axis: bounded at best
    let mut deferred = check_swarm_stability(a);
    reasons.extend(boundary);
    reasons.push(Reason::DeferredToSwarmStability);
    reasons.append(&mut deferred.reasons);
    deferred.reasons = reasons;
    deferred
}

/// Critical swarm-stability test for regular impulse-free pencils: every
/// `-lambda_i mu_j` has `Re <= 0`, on-axis ones come from semisimple `mu_j`, and a
/// non-diagonalizable `L` admits no nonzero finite eigenvalue on the imaginary axis.
pub fn check_swarm_stability(a: &Analysis) -> StabilityVerdict {
    if let Some(reason) = regularity_reason(a) {
        return verdict(Classification::Indeterminate, vec![reason], a);
    }
    let degree = a.char_poly.degree().unwrap_or(0);
    if degree != a.rank_e {
        return verdict(
            Classification::Indeterminate,
            vec![Reason::NotImpulseFree {
                degree,
                rank_e: a.rank_e,
            }],
            a,
        );
    }
    let finite = a
        .finite
        .as_ref()
        .expect("regular pencils carry finite eigenvalues");
    let tol = a.tol_strict();
    let lap = &a.laplacian;
    let mut reasons = vec![
        Reason::SpanningTree {
            present: lap.has_spanning_tree,
        },
        Reason::LaplacianDiagonalizable {
            diagonalizable: lap.diagonalizable,
        },
    ];
    let mut unstable = false;

    if !lap.zero_semisimple {
        reasons.push(Reason::DefectiveLaplacianZero);
        unstable = true;
    }

    for e in a.product_table().entries {
        // the mode pencil (E, -lambda F) has finite eigenvalue -lambda mu
        if -e.real_part > tol {
            reasons.push(Reason::NegativeProduct {
                lambda: e.lambda,
                mu: e.mu,
                product: e.product,
            });
            unstable = true;
        }
    }

    let has_coupled_modes = lap.nonzero_clusters().next().is_some();
    let on_axis: Vec<_> = finite
        .clusters()
        .iter()
        .filter(|cl| {
            lap.nonzero_clusters()
                .any(|l| (l.value * cl.value).re.abs() <= tol)
        })
        .cloned()
        .collect();

    if has_coupled_modes && !on_axis.is_empty() {
        match &a.decomposition {
            Ok(d) => {
                if d.is_ill_conditioned() {
                    reasons.push(Reason::DecompositionIllConditioned {
                        cond_q: d.cond_q,
                        cond_p: d.cond_p,
                    });
                }
                let threshold = a.tolerances.cluster(matkit::norm2(&d.a1));
                for cl in &on_axis {
                    let shifted = &d.a1 - matkit::identity(d.n1) * cl.value;
                    let geometric = d.n1 - matkit::rank_abs(&shifted, threshold);
                    if geometric != cl.multiplicity {
                        reasons.push(Reason::DefectiveOnAxis {
                            mu: cl.value,
                            algebraic: cl.multiplicity,
                            geometric,
                        });
                        unstable = true;
                    }
                }
            }
            Err(err) => {
                reasons.push(Reason::DecompositionUnavailable {
                    error: err.to_string(),
                });
                if !unstable {
                    return verdict(Classification::Indeterminate, reasons, a);
                }
            }
        }
    }

    if has_coupled_modes {
        for cl in finite.clusters() {
            let on_imaginary_axis = cl.value.re.abs() <= tol;
            if !on_imaginary_axis {
                continue;
            }
            if cl.value.norm() > tol {
                if !lap.diagonalizable {
                    reasons.push(Reason::AxisEigenvalueWithDefectiveLaplacian { mu: cl.value });
                    unstable = true;
                }
            } else {
                reasons.push(Reason::ZeroFiniteEigenvalueAllowed {
                    multiplicity: cl.multiplicity,
                });
            }
        }
    }

    let classification = if unstable {
        Classification::SwarmUnstable
    } else {
        Classification::SwarmStable
    };
    verdict(classification, reasons, a)
}

/// Simplified consensus tests that apply when every finite eigenvalue is real or the
/// topology is symmetric. `None` when neither applies or the pencil is not regular.
pub fn corollary_fast_paths(a: &Analysis) -> Option<FastPathVerdict> {
    let finite = a.finite.as_ref()?;
    let tol = a.tol_strict();
    let tree = a.laplacian.has_spanning_tree;
    let values = finite.values();
    let rule = if values.iter().all(|z| z.im.abs() <= tol) {
        FastPathRule::RealFiniteEigenvalues
    } else if a.symmetric_graph {
        FastPathRule::SymmetricTopology
    } else {
        return None;
    };
    let positive = values.iter().all(|z| z.re > tol);
    Some(FastPathVerdict {
        rule,
        asymptotically_stable: tree && positive,
        reasons: vec![Reason::SpanningTree { present: tree }],
    })
}

/// The verdict a caller should act on: consensus when the consensus test says so, otherwise
/// the swarm-stability test.
pub fn overall(consensus: &StabilityVerdict, swarm: &StabilityVerdict) -> Classification {
    match consensus.classification {
        Classification::AsymptoticallySwarmStable => Classification::AsymptoticallySwarmStable,
        Classification::SwarmUnstable => Classification::SwarmUnstable,
        _ => swarm.classification,
    }
}
