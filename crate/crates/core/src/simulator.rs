//! Trajectories of `(I ⊗ E) x' = -(L ⊗ F) x` from the slow/fast decomposition.
//!
//! With `x_i = P [y_i; z_i]` every agent splits into a slow part obeying
//! `Y' = -A1 Y L^T` and a fast part obeying `N Z' = -Z L^T` (agents are columns). The slow part
//! is integrated exactly with a matrix exponential of the full Kronecker operator, so Jordan
//! blocks of `L` need no special treatment. On every nonzero Laplacian mode the fast part has
//! the unique smooth solution zero; what the initial state carried there is reported as a jump
//! and, for nilpotent index `h >= 2`, as impulses of order `1..h-1`. The zero mode of the fast
//! part is left undetermined by the dynamics and is held constant.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::criteria::{self, Analysis, Classification, CriteriaError};
use crate::graph::WeightedDigraph;
use crate::matkit::{self, LinalgError, Matrix, C64};
use crate::pencil::{MatrixPencil, PencilError, StandardDecomposition};
use crate::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("initial state is {rows}x{cols}, expected {n}x{m} (one column per agent)")]
    Shape {
        rows: usize,
        cols: usize,
        n: usize,
        m: usize,
    },
    #[error("invalid time grid: {0}")]
    Grid(String),
    #[error("state has imaginary residue {residue:.3e} above {bound:.3e}")]
    NotReal { residue: f64, bound: f64 },
    #[error("consensus value requested but the network is {0:?}")]
    NoConsensus(Classification),
    #[error("reference integration needs an impulse-free pencil")]
    Impulsive,
    #[error("reference integration did not settle after {substeps} substeps per interval")]
    NoConvergence { substeps: usize },
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How the fast component of the Laplacian zero mode is fixed; any constant is consistent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroModeConvention {
    /// Keep the zero-mode part of the supplied initial state.
    #[default]
    Preserve,
    Zero,
}

/// Spectral projector onto one nonzero Laplacian eigenvalue cluster, with the inverse of `L`
/// restricted to it.
#[derive(Debug, Clone)]
struct LaplacianMode {
    index: usize,
    lambda: C64,
    projector: Matrix,
    restricted_inverse: Matrix,
}

#[derive(Debug, Clone)]
pub struct NetworkSystem {
    pencil: MatrixPencil,
    graph: WeightedDigraph,
    analysis: Analysis,
    decomposition: StandardDecomposition,
    p_inverse: Matrix,
    zero_projector: Matrix,
    modes: Vec<LaplacianMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseEntry {
    /// 1-based index of the Laplacian eigenvalue cluster.
    pub mode: usize,
    pub lambda: C64,
    /// Order `k`: the term multiplies the `(k-1)`-th derivative of the Dirac delta.
    pub order: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscardedMode {
    pub mode: usize,
    pub lambda: C64,
    /// Norm of the fast initial data removed from this mode by the jump at `t = 0`.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ImpulseReport {
    pub entries: Vec<ImpulseEntry>,
    pub discarded: Vec<DiscardedMode>,
}

impl ImpulseReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub x0_plus: DMatrix<f64>,
    pub impulse_report: ImpulseReport,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample instants; a leading `0` stands for `0+`.
    pub times: Vec<f64>,
    /// `n x m` states, agents as columns.
    pub states: Vec<DMatrix<f64>>,
    pub dispersion: Vec<f64>,
    pub impulse_report: ImpulseReport,
    pub consensus_estimate: Option<DVector<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DMatrix<f64> {
        self.states.last().expect("trajectories are nonempty")
    }
}

/// Largest distance between two agents.
pub fn dispersion(x: &DMatrix<f64>) -> f64 {
    let m = x.ncols();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            worst = worst.max((x.column(i) - x.column(j)).norm());
        }
    }
    worst
}

/// `samples` equally spaced instants on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..samples)
            .map(|k| t_end * k as f64 / (samples - 1) as f64)
            .collect(),
    }
}

fn check_grid(times: &[f64]) -> Result<(), SimError> {
    if times.is_empty() {
        return Err(SimError::Grid("no sample instants".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(SimError::Grid(
            "instants must be finite and nonnegative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::Grid(
            "instants must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Projector onto the generalized eigenspace of `l` at `value` along the others.
fn spectral_projector(l: &Matrix, value: C64, multiplicity: usize) -> Result<Matrix, LinalgError> {
    let m = l.nrows();
    let shifted = l - matkit::identity(m) * value;
    let mut power = matkit::identity(m);
    for _ in 0..multiplicity {
        power = &power * &shifted;
    }
    let right = matkit::null_space(&power, multiplicity);
    let left = matkit::null_space(&power.adjoint(), multiplicity);
    let gram = left.adjoint() * &right;
    Ok(right * matkit::inverse(&gram)? * left.adjoint())
}

pub fn assemble(
    pencil: &MatrixPencil,
    graph: &WeightedDigraph,
    tol: &Tolerances,
) -> Result<NetworkSystem, SimError> {
    let analysis = criteria::analyze(pencil, graph, tol)?;
    let decomposition = analysis.decomposition.clone()?;
    let p_inverse = decomposition.p_inverse()?;
    let lap = &analysis.laplacian;
    let zero_projector = lap.zero_mode_projector()?;
    let m = lap.order();
    let mut modes = Vec::new();
    for (k, cl) in lap.spectrum.clusters().iter().enumerate() {
        if cl.value.norm() <= lap.cluster_tol {
            continue;
        }
        let projector = spectral_projector(&lap.laplacian, cl.value, cl.multiplicity)?;
        let lifted = &lap.laplacian + matkit::identity(m) - &projector;
        let restricted_inverse = matkit::solve(&lifted, &projector)?;
        modes.push(LaplacianMode {
            index: k + 1,
            lambda: cl.value,
            projector,
            restricted_inverse,
        });
    }
    Ok(NetworkSystem {
        pencil: pencil.clone(),
        graph: graph.clone(),
        analysis,
        decomposition,
        p_inverse,
        zero_projector,
        modes,
    })
}

impl NetworkSystem {
    pub fn pencil(&self) -> &MatrixPencil {
        &self.pencil
    }

    pub fn graph(&self) -> &WeightedDigraph {
        &self.graph
    }

    pub fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    pub fn decomposition(&self) -> &StandardDecomposition {
        &self.decomposition
    }

    /// State dimension per agent.
    pub fn n(&self) -> usize {
        self.pencil.order()
    }

    pub fn agents(&self) -> usize {
        self.graph.order()
    }

    fn check_state(&self, x0: &DMatrix<f64>) -> Result<(), SimError> {
        let (n, m) = (self.n(), self.agents());
        if x0.shape() != (n, m) {
            return Err(SimError::Shape {
                rows: x0.nrows(),
                cols: x0.ncols(),
                n,
                m,
            });
        }
        Ok(())
    }

    /// Slow and fast transformed coordinates, `n1 x m` and `n2 x m`.
    fn split(&self, x0: &DMatrix<f64>) -> (Matrix, Matrix) {
        let d = &self.decomposition;
        let transformed = &self.p_inverse * matkit::from_real(x0);
        (
            transformed.rows(0, d.n1).into_owned(),
            transformed.rows(d.n1, d.n2).into_owned(),
        )
    }

    fn zero_mode_fast(&self, z0: &Matrix, convention: ZeroModeConvention) -> Matrix {
        match convention {
            ZeroModeConvention::Preserve => z0 * self.zero_projector.transpose(),
            ZeroModeConvention::Zero => Matrix::zeros(z0.nrows(), z0.ncols()),
        }
    }

    /// Maps transformed coordinates back; `scale` bounds the magnitude rounding errors can
    /// reach in `y` (the propagator norm times the initial data), which sets the realness test.
    fn join(&self, y: &Matrix, z: &Matrix, scale: f64) -> Result<DMatrix<f64>, SimError> {
        let d = &self.decomposition;
        let mut stacked = Matrix::zeros(self.n(), self.agents());
        stacked.rows_mut(0, d.n1).copy_from(y);
        stacked.rows_mut(d.n1, d.n2).copy_from(z);
        let x = &d.p * stacked;
        let residue = x.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let bound = 1e-9 * (1.0 + matkit::norm_fro(&x) + matkit::norm2(&d.p) * scale);
        if residue > bound {
            return Err(SimError::NotReal { residue, bound });
        }
        Ok(matkit::real_part(&x))
    }

    fn impulse_report(&self, z0: &Matrix) -> ImpulseReport {
        let d = &self.decomposition;
        let floor = 1e-12 * (1.0 + matkit::norm_fro(z0)) * (1.0 + matkit::norm2(&d.n));
        let mut report = ImpulseReport::default();
        for mode in &self.modes {
            let part = z0 * mode.projector.transpose();
            let norm = matkit::norm_fro(&part);
            if norm <= floor {
                continue;
            }
            report.discarded.push(DiscardedMode {
                mode: mode.index,
                lambda: mode.lambda,
                norm,
            });
            // coefficient of order k is (L^# ⊗ N)^k applied to the discarded data
            let mut coefficient = part;
            for order in 1..d.h {
                coefficient = &d.n * coefficient * mode.restricted_inverse.transpose();
                let magnitude = matkit::norm_fro(&coefficient);
                if magnitude > floor {
                    report.entries.push(ImpulseEntry {
                        mode: mode.index,
                        lambda: mode.lambda,
                        order,
                        magnitude,
                    });
                }
            }
        }
        report
    }

    /// The state just after `t = 0`: fast components of every nonzero Laplacian mode removed,
    /// the zero mode fixed by `convention`, slow components untouched.
    pub fn consistent_projection(
        &self,
        x0: &DMatrix<f64>,
        convention: ZeroModeConvention,
    ) -> Result<Projection, SimError> {
        self.check_state(x0)?;
        let (y0, z0) = self.split(x0);
        let z_plus = self.zero_mode_fast(&z0, convention);
        Ok(Projection {
            x0_plus: self.join(&y0, &z_plus, matkit::norm_fro(&y0))?,
            impulse_report: self.impulse_report(&z0),
        })
    }

    pub fn simulate(&self, x0: &DMatrix<f64>, times: &[f64]) -> Result<Trajectory, SimError> {
        self.simulate_with(x0, times, ZeroModeConvention::default())
    }

    pub fn simulate_with(
        &self,
        x0: &DMatrix<f64>,
        times: &[f64],
        convention: ZeroModeConvention,
    ) -> Result<Trajectory, SimError> {
        self.check_state(x0)?;
        check_grid(times)?;
        let d = &self.decomposition;
        let (y0, z0) = self.split(x0);
        let z_plus = self.zero_mode_fast(&z0, convention);
        let generator = -matkit::kron(&self.analysis.laplacian.laplacian, &d.a1);
        let y0_stacked = DVector::from_column_slice(y0.as_slice());
        let mut states = Vec::with_capacity(times.len());
        for &t in times {
            let propagator = matkit::expm(&(&generator * C64::new(t, 0.0)))?;
            let y_stacked = &propagator * &y0_stacked;
            let y = Matrix::from_column_slice(d.n1, self.agents(), y_stacked.as_slice());
            let scale = matkit::norm_fro(&propagator) * y0_stacked.norm();
            states.push(self.join(&y, &z_plus, scale)?);
        }
        let consensus_estimate = self.predicted_consensus_value(x0).ok();
        Ok(Trajectory {
            times: times.to_vec(),
            dispersion: states.iter().map(dispersion).collect(),
            states,
            impulse_report: self.impulse_report(&z0),
            consensus_estimate,
        })
    }

    /// `c = sum_i nu_i x_i(0)`, the common limit of all agents under consensus.
    pub fn predicted_consensus_value(&self, x0: &DMatrix<f64>) -> Result<DVector<f64>, SimError> {
        self.check_state(x0)?;
        let verdict = criteria::check_consensus(&self.analysis);
        if verdict.classification != Classification::AsymptoticallySwarmStable {
            return Err(SimError::NoConsensus(verdict.classification));
        }
        let nu = self
            .analysis
            .laplacian
            .left_zero_vector
            .as_ref()
            .ok_or(SimError::NoConsensus(verdict.classification))?;
        let value = matkit::from_real(x0) * nu;
        Ok(value.map(|v| v.re))
    }

    /// Implicit trapezoidal integration of the stacked system from a consistent state, with
    /// the per-interval substep count doubled until two successive runs agree to `1e-7`
    /// (relative to `1 + ||x(t)||` at every sample); the last two runs are combined by
    /// Richardson extrapolation.
    ///
    /// The trapezoidal matrix `I ⊗ E + (h/2) L ⊗ F` is singular along the zero mode, so each
    /// step is a least-squares solve bordered by the zero-mode conservation rows
    /// `(Y^H ⊗ I) x_{k+1} = (Y^H ⊗ I) x_k`, `Y` spanning the left kernel of `L`.
    pub fn reference_integrate(
        &self,
        x0_plus: &DMatrix<f64>,
        times: &[f64],
    ) -> Result<Trajectory, SimError> {
        self.check_state(x0_plus)?;
        check_grid(times)?;
        if !self.decomposition.n_is_zero() {
            return Err(SimError::Impulsive);
        }
        const TOL: f64 = 1e-7;
        const MAX_LEVEL: u32 = 40;
        let start = DVector::from_column_slice(matkit::from_real(x0_plus).as_slice());
        let mut previous: Option<Vec<DVector<C64>>> = None;
        for level in 3..MAX_LEVEL {
            let run = self.trapezoidal_run(&start, times, level)?;
            if let Some(prev) = &previous {
                let converged = run
                    .iter()
                    .zip(prev)
                    .all(|(a, b)| (a - b).norm() <= TOL * (1.0 + a.norm()));
                if converged {
                    // second-order error: one Richardson step removes its leading term
                    let states = run
                        .iter()
                        .zip(prev)
                        .map(|(fine, coarse)| {
                            let v = (fine * C64::new(4.0, 0.0) - coarse) / C64::new(3.0, 0.0);
                            let x =
                                Matrix::from_column_slice(self.n(), self.agents(), v.as_slice());
                            matkit::real_part(&x)
                        })
                        .collect::<Vec<_>>();
                    return Ok(Trajectory {
                        times: times.to_vec(),
                        dispersion: states.iter().map(dispersion).collect(),
                        states,
                        impulse_report: ImpulseReport::default(),
                        consensus_estimate: None,
                    });
                }
            }
            previous = Some(run);
        }
        Err(SimError::NoConvergence {
            substeps: 1 << (MAX_LEVEL - 1),
        })
    }

    /// One trapezoidal run with `2^level` substeps per grid interval. The one-step map is
    /// formed once per interval length and raised to the substep count by squaring.
    fn trapezoidal_run(
        &self,
        start: &DVector<C64>,
        times: &[f64],
        level: u32,
    ) -> Result<Vec<DVector<C64>>, SimError> {
        let mut out = Vec::with_capacity(times.len());
        let mut state = start.clone();
        let mut clock = 0.0;
        let mut cache: Vec<(f64, Matrix)> = Vec::new();
        for &t in times {
            let span = t - clock;
            if span > 0.0 {
                let map = match cache.iter().find(|(s, _)| (s - span).abs() <= 1e-12 * t) {
                    Some((_, map)) => map.clone(),
                    None => {
                        let map = self.interval_map(span, level)?;
                        cache.push((span, map.clone()));
                        map
                    }
                };
                state = map * state;
            }
            clock = t;
            out.push(state.clone());
        }
        Ok(out)
    }

    fn interval_map(&self, span: f64, level: u32) -> Result<Matrix, SimError> {
        let h = C64::new(span / (1u64 << level) as f64, 0.0);
        let e = self.pencil.e();
        let f = self.pencil.f();
        let l = &self.analysis.laplacian.laplacian;
        let m = self.agents();
        let n = self.n();
        let mass = matkit::kron(&matkit::identity(m), e);
        let stiffness = matkit::kron(l, f);
        // rows along ker E^H carry only the algebraic constraint, which is O(h); rescaling them
        // keeps the step map well conditioned as h shrinks
        let rank_e = self.pencil.rank_e();
        let mut row_map = matkit::svd(e).u.adjoint();
        for i in rank_e..n {
            let scaled = row_map.row(i) * (C64::new(2.0, 0.0) / h);
            row_map.set_row(i, &scaled);
        }
        let row_map = matkit::kron(&matkit::identity(m), &row_map);
        let lhs = &row_map * (&mass + &stiffness * (h / 2.0));
        let rhs = &row_map * (&mass - &stiffness * (h / 2.0));
        let k = self.analysis.laplacian.zero_multiplicity;
        let left = matkit::null_space(&l.adjoint(), k);
        let border = matkit::kron(&left.adjoint(), &matkit::identity(n));
        let rows = m * n + k * n;
        let mut bordered_lhs = Matrix::zeros(rows, m * n);
        bordered_lhs.rows_mut(0, m * n).copy_from(&lhs);
        bordered_lhs.rows_mut(m * n, k * n).copy_from(&border);
        let mut bordered_rhs = Matrix::zeros(rows, m * n);
        bordered_rhs.rows_mut(0, m * n).copy_from(&rhs);
        bordered_rhs.rows_mut(m * n, k * n).copy_from(&border);
        let mut step = matkit::pseudo_inverse(&bordered_lhs) * bordered_rhs;
        for _ in 0..level {
            step = &step * &step;
        }
        Ok(step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalClass {
    ConsensusLike,
    CriticallyStableLike,
    UnstableLike,
    /// Decaying, but too slowly to call within the horizon.
    Inconclusive,
}

/// Thresholds for [`empirical_classify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Shortest horizon the classifier accepts.
    pub horizon: f64,
    /// Decay below this fraction of the initial dispersion counts as consensus.
    pub consensus_ratio: f64,
    /// Late envelope above this multiple of the early envelope counts as growth.
    pub growth_factor: f64,
    /// A bounded trajectory must keep at least this fraction of its initial dispersion.
    pub floor_ratio: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            horizon: 60.0,
            consensus_ratio: 1e-3,
            growth_factor: 3.0,
            floor_ratio: 1e-2,
        }
    }
}

/// Reads a trajectory's dispersion curve: decay below `consensus_ratio` of the start is
/// consensus-like, a last-quarter envelope above `growth_factor` times the first-quarter
/// envelope is unstable-like, and a late envelope still above `floor_ratio` of the start is
/// critically-stable-like. `None` when the trajectory is shorter than the horizon.
pub fn empirical_classify(traj: &Trajectory, config: &ClassifierConfig) -> Option<EmpiricalClass> {
    let t_end = *traj.times.last()?;
    if t_end + 1e-12 < config.horizon || traj.dispersion.len() < 8 {
        return None;
    }
    let d = &traj.dispersion;
    let initial = d[0];
    if initial <= f64::MIN_POSITIVE {
        return Some(EmpiricalClass::ConsensusLike);
    }
    let envelope = |from: f64, to: f64| {
        traj.times
            .iter()
            .zip(d)
            .filter(|(t, _)| **t >= from * t_end && **t <= to * t_end)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    let early = envelope(0.0, 0.25);
    let late = envelope(0.75, 1.0);
    Some(if late <= config.consensus_ratio * initial {
        EmpiricalClass::ConsensusLike
    } else if late > config.growth_factor * early {
        EmpiricalClass::UnstableLike
    } else if late >= config.floor_ratio * initial {
        EmpiricalClass::CriticallyStableLike
    } else {
        EmpiricalClass::Inconclusive
    })
}
