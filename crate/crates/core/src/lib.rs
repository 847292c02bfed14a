//! Consensus and critical swarm-stability analysis for networks of identical descriptor
//! agents `E x_i' = F sum_j w_ij (x_j - x_i)`, with exact trajectory simulation through the
//! slow/fast decomposition of the pencil `(E, F)`.

pub mod cli;
pub mod criteria;
pub mod graph;
pub mod matkit;
pub mod pencil;
pub mod random;
pub mod simulator;

/// Numerical tolerances shared by the analysis modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative rank tolerance base; the effective tolerance is `rank * max(rows, cols)`
    /// times the largest singular value.
    pub rank: f64,
    /// Eigenvalue cluster tolerance base; values within `eig * (1 + ||a||_2)` are merged.
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-10,
            eig: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn cluster(&self, norm: f64) -> f64 {
        self.eig * (1.0 + norm)
    }

    pub fn rank_for(&self, a: &matkit::Matrix) -> f64 {
        self.rank * a.nrows().max(a.ncols()) as f64
    }
}
