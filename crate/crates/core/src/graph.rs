//! Weighted digraphs and their Laplacians.
//!
//! Arc convention: `w[i][j] > 0` means vertex `j` is a neighbour of vertex `i`, i.e. information
//! flows `j -> i`. Row `i` of `W` lists what vertex `i` receives.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matkit::{self, c, LinalgError, Matrix, Spectrum, C64};
use crate::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid adjacency matrix: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("perturbation epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("no diagonalizable perturbation found after {attempts} attempts")]
    PerturbationFailed { attempts: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A digraph given by its nonnegative adjacency matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    weights: DMatrix<f64>,
}

impl WeightedDigraph {
    /// Validates the adjacency matrix, reporting every offending entry.
    pub fn new(weights: DMatrix<f64>) -> Result<Self, GraphError> {
        let issues = validate_weights(&weights);
        if issues.is_empty() {
            Ok(WeightedDigraph { weights })
        } else {
            Err(GraphError::Invalid(issues))
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let m = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(GraphError::Invalid(vec![format!(
                "row {} has {} entries, expected {m}",
                i + 1,
                r.len()
            )]));
        }
        Self::new(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    /// The graph with no arcs on `m` vertices.
    pub fn empty(m: usize) -> Self {
        WeightedDigraph {
            weights: DMatrix::zeros(m, m),
        }
    }

    pub fn order(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn is_symmetric(&self) -> bool {
        self.weights == self.weights.transpose()
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        WeightedDigraph {
            weights: &self.weights * factor,
        }
    }

    /// Vertices that receive from `j`.
    fn receivers(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.order()).filter(move |&i| self.weights[(i, j)] > 0.0)
    }
}

/// All problems with a candidate adjacency matrix, using 1-based indices in the messages.
pub fn validate_weights(w: &DMatrix<f64>) -> Vec<String> {
    let mut issues = Vec::new();
    if w.nrows() == 0 || w.nrows() != w.ncols() {
        issues.push(format!(
            "adjacency must be square with at least one vertex, got {}x{}",
            w.nrows(),
            w.ncols()
        ));
        return issues;
    }
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            let v = w[(i, j)];
            if !v.is_finite() {
                issues.push(format!("w[{},{}] is not finite", i + 1, j + 1));
            } else if v < 0.0 {
                issues.push(format!("w[{},{}] = {v} is negative", i + 1, j + 1));
            } else if i == j && v != 0.0 {
                issues.push(format!(
                    "w[{},{}] = {v} must be zero (no self-loops)",
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    issues
}

/// `L = diag(row sums of W) - W`. Diagonal entries are formed from the same row sums, so every
/// row of `L` sums to zero.
pub fn laplacian_real(g: &WeightedDigraph) -> DMatrix<f64> {
    let m = g.order();
    let mut l = -g.weights.clone();
    for i in 0..m {
        l[(i, i)] = (0..m).filter(|&j| j != i).map(|j| g.weights[(i, j)]).sum();
    }
    l
}

pub fn laplacian(g: &WeightedDigraph) -> Matrix {
    matkit::from_real(&laplacian_real(g))
}

/// True iff some vertex reaches every other vertex along arcs `j -> i`.
pub fn has_spanning_tree(g: &WeightedDigraph) -> bool {
    (0..g.order()).any(|root| reachable_count(g, root) == g.order())
}

fn reachable_count(g: &WeightedDigraph, root: usize) -> usize {
    let mut seen = vec![false; g.order()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    let mut count = 1;
    while let Some(j) = queue.pop_front() {
        for i in g.receivers(j) {
            if !seen[i] {
                seen[i] = true;
                count += 1;
                queue.push_back(i);
            }
        }
    }
    count
}

#[derive(Debug, Clone)]
pub struct LaplacianAnalysis {
    pub laplacian: Matrix,
    pub spectrum: Spectrum,
    pub zero_multiplicity: usize,
    pub has_spanning_tree: bool,
    pub diagonalizable: bool,
    /// The zero eigenvalue has equal algebraic and geometric multiplicity.
    pub zero_semisimple: bool,
    /// Left zero eigenvector normalized so its entries sum to one; only for a simple zero.
    pub left_zero_vector: Option<DVector<C64>>,
    pub right_zero_vector: DVector<C64>,
    /// Cluster tolerance used for the zero test and multiplicities.
    pub cluster_tol: f64,
}

impl LaplacianAnalysis {
    /// Eigenvalue clusters away from zero, i.e. the modes that couple agents.
    pub fn nonzero_clusters(&self) -> impl Iterator<Item = &matkit::Eigencluster> {
        self.spectrum
            .clusters()
            .iter()
            .filter(|cl| cl.value.norm() > self.cluster_tol)
    }

    pub fn order(&self) -> usize {
        self.laplacian.nrows()
    }

    /// Distance from the origin to the nearest eigenvalue not counted as zero; how far the
    /// zero-multiplicity call is from its tolerance boundary.
    pub fn zero_gap(&self) -> f64 {
        self.nonzero_clusters()
            .map(|cl| cl.value.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Spectral projector onto `ker L` along `range L`, valid when the zero eigenvalue is
    /// semisimple.
    pub fn zero_mode_projector(&self) -> Result<Matrix, LinalgError> {
        let m = self.order();
        let k = self.zero_multiplicity;
        if k == 0 {
            return Ok(Matrix::zeros(m, m));
        }
        let right = matkit::null_space(&self.laplacian, k);
        let left = matkit::null_space(&self.laplacian.adjoint(), k);
        let gram = left.adjoint() * &right;
        let inv = matkit::inverse(&gram)?;
        Ok(right * inv * left.adjoint())
    }
}

pub fn analyze_laplacian(
    g: &WeightedDigraph,
    tol: &Tolerances,
) -> Result<LaplacianAnalysis, LinalgError> {
    let l = laplacian(g);
    let m = g.order();
    let norm = matkit::norm2(&l);
    let cluster_tol = tol.cluster(norm);
    let values = matkit::eigenvalues(&l)?;
    let spectrum = Spectrum::from_values(&values, cluster_tol);
    let zero_multiplicity = spectrum.multiplicity_near(c(0.0, 0.0), cluster_tol);

    let rank_tol = tol.rank_for(&l);
    let mut diagonalizable = true;
    let mut zero_semisimple = true;
    for cl in spectrum.clusters() {
        let shifted = &l - matkit::identity(m) * cl.value;
        let semisimple = matkit::rank(&shifted, rank_tol) == m - cl.multiplicity;
        if !semisimple {
            diagonalizable = false;
            if cl.value.norm() <= cluster_tol {
                zero_semisimple = false;
            }
        }
    }

    let right_zero_vector = DVector::from_element(m, c(1.0, 0.0));
    let left_zero_vector = if zero_multiplicity == 1 {
        let w = matkit::null_space(&l.adjoint(), 1);
        let nu: DVector<C64> = w.column(0).map(|v| v.conj());
        let total: C64 = nu.iter().sum();
        Some(nu / total)
    } else {
        None
    };

    Ok(LaplacianAnalysis {
        laplacian: l,
        spectrum,
        zero_multiplicity,
        has_spanning_tree: has_spanning_tree(g),
        diagonalizable,
        zero_semisimple,
        left_zero_vector,
        right_zero_vector,
        cluster_tol,
    })
}

/// Squared Frobenius distance between the Laplacians of two graphs of equal order.
pub fn laplacian_gap(a: &WeightedDigraph, b: &WeightedDigraph) -> f64 {
    (laplacian_real(a) - laplacian_real(b))
        .iter()
        .map(|v| v * v)
        .sum()
}

const MAX_PERTURB_ATTEMPTS: usize = 64;

/// Finds a graph with the same arcs whose Laplacian is diagonalizable and lies within squared
/// Frobenius distance `eps` of the original. Existing weights get multiplicative jitter; the
/// jitter amplitude halves whenever a draw lands too far away.
pub fn perturb_to_diagonalizable(
    g: &WeightedDigraph,
    eps: f64,
    seed: u64,
) -> Result<WeightedDigraph, GraphError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(GraphError::BadEpsilon(eps));
    }
    let tol = Tolerances::default();
    if analyze_laplacian(g, &tol)?.diagonalizable {
        return Ok(g.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amplitude = 0.5;
    for _ in 0..MAX_PERTURB_ATTEMPTS {
        let weights = g.weights.map(|w| {
            if w > 0.0 {
                w * (1.0 + amplitude * rng.random_range(-1.0..1.0))
            } else {
                0.0
            }
        });
        let candidate = WeightedDigraph { weights };
        if laplacian_gap(g, &candidate) >= eps {
            amplitude *= 0.5;
            continue;
        }
        if analyze_laplacian(&candidate, &tol)?.diagonalizable {
            return Ok(candidate);
        }
    }
    Err(GraphError::PerturbationFailed {
        attempts: MAX_PERTURB_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(rows: &[&[f64]]) -> WeightedDigraph {
        WeightedDigraph::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_vertex_laplacian() {
        let l = laplacian_real(&graph(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn empty_graph_has_zero_laplacian_and_no_tree() {
        let g = WeightedDigraph::empty(3);
        assert_eq!(laplacian_real(&g), DMatrix::zeros(3, 3));
        assert!(!has_spanning_tree(&WeightedDigraph::empty(2)));
        assert!(has_spanning_tree(&WeightedDigraph::empty(1)));
    }

    #[test]
    fn in_star_has_no_spanning_tree() {
        // leaves 2 and 3 send to the center 1 only
        let g = graph(&[&[0.0, 1.0, 1.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(!has_spanning_tree(&g));
        // reversing the arcs makes the center a root
        let g = graph(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert!(has_spanning_tree(&g));
    }

    #[test]
    fn validation_lists_every_issue() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 0.0]);
        match WeightedDigraph::new(w) {
            Err(GraphError::Invalid(issues)) => {
                assert_eq!(issues.len(), 2);
                assert!(issues[0].contains("w[1,1]"));
                assert!(issues[1].contains("w[1,2]"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complete_graph_k3() {
        let g = graph(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let a = analyze_laplacian(&g, &Tolerances::default()).unwrap();
        assert!(a.diagonalizable);
        assert_eq!(a.zero_multiplicity, 1);
        assert_eq!(a.spectrum.multiplicity_near(c(3.0, 0.0), 1e-8), 2);
        let nu = a.left_zero_vector.unwrap();
        for v in nu.iter() {
            assert!((v - c(1.0 / 3.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn defective_chain_is_detected_and_perturbed() {
        // 1 -> 2 -> 3 with unit weights: eigenvalue 1 has a 2x2 Jordan block
        let g = graph(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let a = analyze_laplacian(&g, &Tolerances::default()).unwrap();
        assert!(!a.diagonalizable);
        assert!(a.zero_semisimple);
        let p = perturb_to_diagonalizable(&g, 1e-6, 7).unwrap();
        assert!(laplacian_gap(&g, &p) < 1e-6);
        assert!(
            analyze_laplacian(&p, &Tolerances::default())
                .unwrap()
                .diagonalizable
        );
        // topology preserved
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.weight(i, j) > 0.0, p.weight(i, j) > 0.0);
            }
        }
        assert_eq!(p, perturb_to_diagonalizable(&g, 1e-6, 7).unwrap());
    }

    #[test]
    fn perturb_rejects_bad_eps_and_keeps_diagonalizable_input() {
        let g = graph(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(perturb_to_diagonalizable(&g, 1e-3, 1).unwrap(), g);
        assert_eq!(
            perturb_to_diagonalizable(&g, 0.0, 1),
            Err(GraphError::BadEpsilon(0.0))
        );
    }

    #[test]
    fn zero_mode_projector_is_idempotent_and_annihilates_range() {
        let g = graph(&[&[0.0, 2.0, 0.0], &[1.0, 0.0, 0.0], &[0.5, 0.0, 0.0]]);
        let a = analyze_laplacian(&g, &Tolerances::default()).unwrap();
        let p = a.zero_mode_projector().unwrap();
        assert!(matkit::norm_fro(&(&p * &p - &p)) < 1e-12);
        assert!(matkit::norm_fro(&(&p * &a.laplacian)) < 1e-12);
        assert!(matkit::norm_fro(&(&a.laplacian * &p)) < 1e-12);
    }
}
