//! Regular matrix pencils `(E, F)`: characteristic polynomial, finite eigenvalues,
//! impulse-freeness and the slow/fast (Weierstrass) standard decomposition.
//!
//! Finite eigenvalues are the roots of `det(sE - F)`, found by sampling the determinant on a
//! circle and interpolating, so no generalized (QZ) eigensolver is needed. The decomposition is
//! built from the shift-inverted matrix `(aE - F)^-1 E`, whose nonzero eigenvalues
//! `1 / (a - mu)` carry the finite spectrum and whose nilpotent part carries the infinite one.

use std::f64::consts::PI;

use thiserror::Error;

use crate::matkit::{self, LinalgError, Matrix, Polynomial, Spectrum, C64};
use crate::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PencilError {
    #[error(
        "E is {e_rows}x{e_cols} but F is {f_rows}x{f_cols}; both must be square of equal order"
    )]
    Shape {
        e_rows: usize,
        e_cols: usize,
        f_rows: usize,
        f_cols: usize,
    },
    #[error("singular pencil: det(sE - F) vanishes identically")]
    NotRegular,
    #[error(
        "pencil regularity is indeterminate at working precision (max |det| / scale = {ratio:.3e})"
    )]
    IndeterminateRegularity { ratio: f64 },
    #[error("degenerate pencil (E, 0): scale factor must be nonzero")]
    ZeroScale,
    #[error("standard decomposition inconsistent: {0}")]
    Inconsistent(String),
    #[error("standard decomposition residual {residual:.3e} exceeds {bound:.3e}")]
    Reconstruction { residual: f64, bound: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Sampled determinants at or below this fraction of `(r||E|| + ||F||)^n` count as zero.
const SINGULAR_RATIO: f64 = 1e-12;
/// Between the two ratios the regularity call is reported as indeterminate.
const INDETERMINATE_RATIO: f64 = 1e-10;
const TRIM_RATIO: f64 = 1e-9;
const RECONSTRUCTION_TOL: f64 = 1e-8;
/// `Q` or `P` above this condition estimate is flagged in the decomposition.
const ILL_CONDITIONED: f64 = 1e8;

/// The pair `(E, F)` of square matrices of equal order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPencil {
    e: Matrix,
    f: Matrix,
    rank_e: usize,
}

impl MatrixPencil {
    pub fn new(e: Matrix, f: Matrix, tol: &Tolerances) -> Result<Self, PencilError> {
        if !e.is_square() || e.shape() != f.shape() {
            return Err(PencilError::Shape {
                e_rows: e.nrows(),
                e_cols: e.ncols(),
                f_rows: f.nrows(),
                f_cols: f.ncols(),
            });
        }
        let rank_e = matkit::rank(&e, tol.rank_for(&e));
        Ok(MatrixPencil { e, f, rank_e })
    }

    pub fn from_real_rows(
        e: &[Vec<f64>],
        f: &[Vec<f64>],
        tol: &Tolerances,
    ) -> Result<Self, PencilError> {
        Self::new(matkit::from_real_rows(e)?, matkit::from_real_rows(f)?, tol)
    }

    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn rank_e(&self) -> usize {
        self.rank_e
    }

    /// The pencil `(E, factor * F)`.
    pub fn with_scaled_f(&self, factor: C64) -> MatrixPencil {
        MatrixPencil {
            e: self.e.clone(),
            f: &self.f * factor,
            rank_e: self.rank_e,
        }
    }

    /// Radius of the sampling circle used for interpolation and shift selection.
    fn sampling_radius(&self) -> f64 {
        let ne = matkit::norm2(&self.e);
        let nf = matkit::norm2(&self.f);
        if ne <= f64::EPSILON * (nf + 1.0) {
            1.0
        } else {
            2.0 * (nf + 1.0) / ne
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    Singular,
    Indeterminate,
}

/// `det(sE - F)` recovered by interpolation.
#[derive(Debug, Clone)]
pub struct CharPoly {
    /// Coefficients in `s`, ascending.
    pub poly: Polynomial,
    pub regularity: Regularity,
    /// Sampling radius `r`; roots are computed from `p(r z)` for conditioning.
    pub radius: f64,
    /// Largest sampled `|det|` divided by `(r||E|| + ||F||)^n`.
    pub det_ratio: f64,
    scaled: Polynomial,
}

impl CharPoly {
    pub fn is_regular(&self) -> bool {
        self.regularity == Regularity::Regular
    }

    /// Number of finite eigenvalues; `None` unless the pencil is regular.
    pub fn degree(&self) -> Option<usize> {
        if self.is_regular() {
            self.poly.degree()
        } else {
            None
        }
    }

    fn require_regular(&self) -> Result<(), PencilError> {
        match self.regularity {
            Regularity::Regular => Ok(()),
            Regularity::Singular => Err(PencilError::NotRegular),
            Regularity::Indeterminate => Err(PencilError::IndeterminateRegularity {
                ratio: self.det_ratio,
            }),
        }
    }

    /// Roots of the interpolated polynomial, with multiplicity.
    pub fn root_values(&self) -> Result<Vec<C64>, PencilError> {
        self.require_regular()?;
        let roots = matkit::poly_root_values(&self.scaled)?;
        Ok(roots.into_iter().map(|z| z * self.radius).collect())
    }
}

/// Interpolates `det(sE - F)` from its values at `n + 1` equally spaced points on a circle.
pub fn char_poly(p: &MatrixPencil) -> Result<CharPoly, PencilError> {
    let n = p.order();
    let radius = p.sampling_radius();
    let samples = n + 1;
    let dets: Vec<C64> = (0..samples)
        .map(|k| {
            let s = C64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
            matkit::determinant(&(&p.e * s - &p.f))
        })
        .collect::<Result<_, _>>()?;

    // inverse DFT gives the coefficients of p(r z)
    let scaled_coeffs: Vec<C64> = (0..samples)
        .map(|j| {
            dets.iter()
                .enumerate()
                .map(|(k, d)| d * C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / samples as f64))
                .sum::<C64>()
                / samples as f64
        })
        .collect();

    let scale = (radius * matkit::norm2(&p.e) + matkit::norm2(&p.f)).powi(n as i32);
    let max_det = dets.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let det_ratio = if scale > 0.0 { max_det / scale } else { 0.0 };
    let regularity = if det_ratio <= SINGULAR_RATIO {
        Regularity::Singular
    } else if det_ratio <= INDETERMINATE_RATIO {
        Regularity::Indeterminate
    } else {
        Regularity::Regular
    };

    let max_coeff = scaled_coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scaled = if regularity == Regularity::Singular {
        Polynomial::new(Vec::new(), 0.0)
    } else {
        Polynomial::new(scaled_coeffs, TRIM_RATIO * max_coeff)
    };
    let poly = Polynomial::new(
        scaled
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, v)| v / radius.powi(j as i32))
            .collect(),
        0.0,
    );
    Ok(CharPoly {
        poly,
        regularity,
        radius,
        det_ratio,
        scaled,
    })
}

fn finite_cluster_tol(values: &[C64], tol: &Tolerances) -> f64 {
    tol.cluster(values.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Finite eigenvalues of a regular pencil; as many as the degree of `det(sE - F)`.
pub fn finite_eigenvalues(p: &MatrixPencil, tol: &Tolerances) -> Result<Spectrum, PencilError> {
    let roots = char_poly(p)?.root_values()?;
    Ok(Spectrum::from_values(
        &roots,
        finite_cluster_tol(&roots, tol),
    ))
}

/// True iff `deg det(sE - F) = rank E`.
pub fn is_impulse_free(p: &MatrixPencil) -> Result<bool, PencilError> {
    let cp = char_poly(p)?;
    cp.require_regular()?;
    Ok(cp.degree() == Some(p.rank_e()))
}

/// `Q E P = diag(I, N)` and `Q F P = diag(A1, I)`.
#[derive(Debug, Clone)]
pub struct StandardDecomposition {
    pub q: Matrix,
    pub p: Matrix,
    pub a1: Matrix,
    pub n: Matrix,
    pub n1: usize,
    pub n2: usize,
    /// Nilpotent index of `N` (0 when there is no fast block).
    pub h: usize,
    /// Shift `a` used to form `(aE - F)^-1 E`.
    pub shift: C64,
    pub residual_e: f64,
    pub residual_f: f64,
    pub cond_q: f64,
    pub cond_p: f64,
}

impl StandardDecomposition {
    pub fn is_ill_conditioned(&self) -> bool {
        self.cond_q > ILL_CONDITIONED || self.cond_p > ILL_CONDITIONED
    }

    /// Maps agent coordinates to transformed ones: `x~ = P^-1 x`.
    pub fn p_inverse(&self) -> Result<Matrix, LinalgError> {
        matkit::inverse(&self.p)
    }

    /// The fast block vanishes (no impulsive behaviour).
    pub fn n_is_zero(&self) -> bool {
        self.h <= 1
    }
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Matrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Smallest `k >= 1` with `N^k = 0`, judged against `||N||`-scaled thresholds; 0 for an empty
/// block.
pub fn nilpotent_index(n: &Matrix, scale: f64, tol: &Tolerances) -> Option<usize> {
    let dim = n.nrows();
    if dim == 0 {
        return Some(0);
    }
    let base = scale.max(1.0);
    let mut power = matkit::identity(dim);
    for k in 1..=dim {
        power = &power * n;
        let threshold = tol.rank * dim as f64 * base.powi(k as i32);
        if matkit::rank_abs(&power, threshold) == 0 {
            return Some(k);
        }
    }
    None
}

/// Builds `Q`, `P`, `A1`, `N` for a regular pencil. The result is verified against the
/// reconstruction bounds before it is returned.
pub fn standard_decomposition(
    p: &MatrixPencil,
    tol: &Tolerances,
) -> Result<StandardDecomposition, PencilError> {
    let cp = char_poly(p)?;
    cp.require_regular()?;
    let n = p.order();
    let n1 = cp.degree().unwrap_or(0);
    let n2 = n - n1;

    // shift with the best-conditioned aE - F among eight points on the sampling circle
    let shift = (0..8)
        .map(|k| C64::from_polar(cp.radius, PI * (2 * k + 1) as f64 / 8.0))
        .map(|a| {
            let m = &p.e * a - &p.f;
            (a, 1.0 / matkit::condition(&m))
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(a, _)| a)
        .expect("eight candidates");
    let shifted = &p.e * shift - &p.f;
    let e_hat = matkit::solve(&shifted, &p.e)?;

    // the slow eigenvalues 1 / (a - mu) of (aE - F)^-1 E are the n1 largest in modulus and the
    // rest are (numerically) zero; ordered Schur forms give both invariant subspaces
    let (v_slow, v_fast) = if n2 == 0 {
        (matkit::identity(n), Matrix::zeros(n, 0))
    } else if n1 == 0 {
        (Matrix::zeros(n, 0), matkit::identity(n))
    } else {
        let (z, t) = matkit::schur(&e_hat)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| t[(j, j)].norm().total_cmp(&t[(i, i)].norm()));
        let mut slow = vec![false; n];
        for &i in &order[..n1] {
            slow[i] = true;
        }
        let fast: Vec<bool> = slow.iter().map(|s| !s).collect();
        let (mut zs, mut ts) = (z.clone(), t.clone());
        matkit::schur_reorder(&mut zs, &mut ts, &slow);
        let (mut zf, mut tf) = (z, t);
        matkit::schur_reorder(&mut zf, &mut tf, &fast);
        (
            zs.columns(0, n1).into_owned(),
            zf.columns(0, n2).into_owned(),
        )
    };
    let mut pm = Matrix::zeros(n, n);
    pm.view_mut((0, 0), (n, n1)).copy_from(&v_slow);
    pm.view_mut((0, n1), (n, n2)).copy_from(&v_fast);
    let mut basis = Matrix::zeros(n, n);
    basis.view_mut((0, 0), (n, n1)).copy_from(&(&p.e * &v_slow));
    basis
        .view_mut((0, n1), (n, n2))
        .copy_from(&(&p.f * &v_fast));
    let mut q = matkit::inverse(&basis)?;

    // make the identity blocks exact up to rounding
    let qep = &q * &p.e * &pm;
    let qfp = &q * &p.f * &pm;
    if n1 > 0 {
        let s = matkit::inverse(&qep.view((0, 0), (n1, n1)).into_owned())?;
        let top = &s * q.rows(0, n1);
        q.rows_mut(0, n1).copy_from(&top);
    }
    if n2 > 0 {
        let s = matkit::inverse(&qfp.view((n1, n1), (n2, n2)).into_owned())?;
        let bottom = &s * q.rows(n1, n2);
        q.rows_mut(n1, n2).copy_from(&bottom);
    }
    let qep = &q * &p.e * &pm;
    let qfp = &q * &p.f * &pm;
    let a1 = qfp.view((0, 0), (n1, n1)).into_owned();
    let nil = qep.view((n1, n1), (n2, n2)).into_owned();

    let residual_e = matkit::norm_fro(&(&qep - block_diag(&matkit::identity(n1), &nil)));
    let residual_f = matkit::norm_fro(&(&qfp - block_diag(&a1, &matkit::identity(n2))));
    let bound_e = RECONSTRUCTION_TOL * (matkit::norm2(&p.e) + 1.0);
    let bound_f = RECONSTRUCTION_TOL * (matkit::norm2(&p.f) + 1.0);
    if residual_e > bound_e {
        return Err(PencilError::Reconstruction {
            residual: residual_e,
            bound: bound_e,
        });
    }
    if residual_f > bound_f {
        return Err(PencilError::Reconstruction {
            residual: residual_f,
            bound: bound_f,
        });
    }

    let scale = matkit::norm2(&q) * matkit::norm2(&p.e) * matkit::norm2(&pm);
    let h = nilpotent_index(&nil, scale, tol)
        .ok_or_else(|| PencilError::Inconsistent("fast block is not nilpotent".to_string()))?;

    Ok(StandardDecomposition {
        cond_q: matkit::condition(&q),
        cond_p: matkit::condition(&pm),
        q,
        p: pm,
        a1,
        n: nil,
        n1,
        n2,
        h,
        shift,
        residual_e,
        residual_f,
    })
}

/// Finite eigenvalues of `(E, c F)` by two routes.
#[derive(Debug, Clone)]
pub struct ScaledEigenvalues {
    /// Roots of `det(sE - cF)`.
    pub direct: Spectrum,
    /// `c` times the finite eigenvalues of `(E, F)`.
    pub by_scaling: Spectrum,
    /// Largest matched distance between the two routes.
    pub mismatch: f64,
}

pub fn scaled_pencil_eigenvalues(
    p: &MatrixPencil,
    factor: C64,
    tol: &Tolerances,
) -> Result<ScaledEigenvalues, PencilError> {
    if factor.norm() == 0.0 {
        return Err(PencilError::ZeroScale);
    }
    let base = finite_eigenvalues(p, tol)?;
    let by_scaling = base.scaled(factor);
    let direct_roots = char_poly(&p.with_scaled_f(factor))?.root_values()?;
    let direct = Spectrum::from_values(&direct_roots, finite_cluster_tol(&direct_roots, tol));
    let mismatch = matkit::multiset_distance(&direct_roots, &by_scaling.values());
    Ok(ScaledEigenvalues {
        direct,
        by_scaling,
        mismatch,
    })
}

/// The four equivalent impulse-freeness tests evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpulseChecks {
    pub degree_equals_rank: bool,
    pub n_is_zero: bool,
    pub index_at_most_one: bool,
}

impl ImpulseChecks {
    pub fn agree(&self) -> bool {
        self.degree_equals_rank == self.n_is_zero && self.n_is_zero == self.index_at_most_one
    }
}

pub fn impulse_checks(
    p: &MatrixPencil,
    d: &StandardDecomposition,
) -> Result<ImpulseChecks, PencilError> {
    let scale = matkit::norm2(&d.q) * matkit::norm2(p.e()) * matkit::norm2(&d.p);
    let n_is_zero = d.n2 == 0 || matkit::norm_fro(&d.n) <= RECONSTRUCTION_TOL * scale.max(1.0);
    Ok(ImpulseChecks {
        degree_equals_rank: is_impulse_free(p)?,
        n_is_zero,
        index_at_most_one: d.h <= 1,
    })
}
