//! Dense complex matrix kernels.
//!
//! Every downstream module works on [`Matrix`] (a dense `DMatrix<Complex64>`), even when the
//! inputs are real: Laplacian spectra of directed graphs are complex in general. Hessenberg
//! reduction and LU come from `nalgebra`; the SVD, Schur iteration, eigenvectors, clustering,
//! rank, the matrix exponential and polynomial roots are built on top of them here.

use nalgebra::linalg::Hessenberg;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

/// Iteration cap for the Schur QR sweeps.
const MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must be non-empty, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} did not converge within the iteration cap")]
    NoConvergence(&'static str),
    #[error("matrix is singular to working precision (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("matrix exponential overflow (norm {norm:.3e})")]
    ExpOverflow { norm: f64 },
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a matrix from real row-major rows, rejecting ragged, empty or non-finite input.
pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(LinalgError::Empty {
            rows: nrows,
            cols: ncols,
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(LinalgError::Ragged {
                row: i,
                found: row.len(),
                expected: ncols,
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: i, col: j });
        }
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| c(rows[i][j], 0.0)))
}

pub fn from_real(a: &DMatrix<f64>) -> Matrix {
    a.map(|v| c(v, 0.0))
}

/// Real part, for matrices known to be real up to rounding.
pub fn real_part(a: &Matrix) -> DMatrix<f64> {
    a.map(|v| v.re)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

fn ensure_square(a: &Matrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Thin singular value decomposition `a = U diag(s) V^H` with `s` descending; `v` is always
/// the full `cols x cols` unitary factor.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

const JACOBI_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD. Wide input is padded with zero rows, so `v` is complete in
/// every case.
pub fn svd(a: &Matrix) -> Svd {
    let (rows, cols) = a.shape();
    let work_rows = rows.max(cols);
    let mut u = Matrix::zeros(work_rows, cols);
    u.view_mut((0, 0), (rows, cols)).copy_from(a);
    let mut v = identity(cols);
    let eps = f64::EPSILON;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dotc(&u.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut u, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = (0..cols).map(|j| (j, u.column(j).norm())).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let k = rows.min(cols);
    let mut uu = Matrix::zeros(rows, k);
    let mut vv = Matrix::zeros(cols, cols);
    let mut s_out = Vec::with_capacity(k);
    for (dst, &(src, sigma)) in order.iter().enumerate() {
        vv.set_column(dst, &v.column(src));
        if dst < k {
            s_out.push(sigma);
            if sigma > 0.0 {
                let col = u.column(src).rows(0, rows) / C64::new(sigma, 0.0);
                uu.set_column(dst, &col);
            }
        }
    }
    let sigma_max = s_out.first().copied().unwrap_or(0.0);
    let negligible = eps * rows.max(cols) as f64 * sigma_max;
    complete_orthonormal(
        &mut uu,
        s_out.iter().take_while(|s| **s > negligible).count(),
    );
    Svd {
        u: uu,
        s: s_out,
        v: vv,
    }
}

/// Keeps the first `trusted` columns (re-orthogonalized) and replaces the rest, whose directions
/// rounding has left arbitrary, by an orthonormal completion.
fn complete_orthonormal(u: &mut Matrix, trusted: usize) {
    let (rows, cols) = u.shape();
    let residual = |u: &Matrix, j: usize, mut col: DVector<C64>| {
        for _ in 0..2 {
            for k in 0..j {
                let proj = u.column(k).dotc(&col);
                col -= u.column(k) * proj;
            }
        }
        col
    };
    for j in 0..cols {
        let col = if j < trusted {
            residual(u, j, u.column(j).into_owned())
        } else {
            // the coordinate axis least covered by the columns so far
            (0..rows)
                .map(|i| {
                    let mut e = DVector::zeros(rows);
                    e[i] = C64::new(1.0, 0.0);
                    residual(u, j, e)
                })
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .expect("at least one row")
        };
        let norm = col.norm();
        u.set_column(j, &(col / C64::new(norm, 0.0)));
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    svd(a).s
}

/// Moore-Penrose pseudo-inverse; singular values at or below the default rank tolerance are
/// treated as zero.
pub fn pseudo_inverse(a: &Matrix) -> Matrix {
    let (rows, cols) = a.shape();
    if a.is_empty() {
        return Matrix::zeros(cols, rows);
    }
    let d = svd(a);
    let cutoff = default_rank_tol(a) * d.s.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(cols, rows);
    for (k, &sigma) in d.s.iter().enumerate() {
        if sigma > cutoff {
            out += d.v.column(k) * d.u.column(k).adjoint() / C64::new(sigma, 0.0);
        }
    }
    out
}

/// Spectral norm.
pub fn norm2(a: &Matrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn norm_fro(a: &Matrix) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Default relative rank tolerance: `1e-10 * max(rows, cols)`.
pub fn default_rank_tol(a: &Matrix) -> f64 {
    1e-10 * a.nrows().max(a.ncols()) as f64
}

/// Number of singular values strictly above `tol * sigma_max`. The zero matrix has rank 0.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Number of singular values strictly above an absolute threshold.
pub fn rank_abs(a: &Matrix, threshold: f64) -> usize {
    singular_values(a)
        .iter()
        .filter(|&&s| s > threshold)
        .count()
}

/// Orthonormal basis for the `dim`-dimensional numerical null space: right singular vectors of
/// the `dim` smallest singular values.
pub fn null_space(a: &Matrix, dim: usize) -> Matrix {
    let n = a.ncols();
    let v = svd(a).v;
    v.columns(n - dim, dim).into_owned()
}

/// Orthonormal basis for the dominant `dim`-dimensional column space: left singular vectors of
/// the `dim` largest singular values.
pub fn range_basis(a: &Matrix, dim: usize) -> Matrix {
    svd(a).u.columns(0, dim).into_owned()
}

/// Two eigenvalues closer than this are treated as one cluster.
pub fn cluster_tol(norm: f64) -> f64 {
    1e-6 * (1.0 + norm)
}

/// A distinct eigenvalue together with its algebraic multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigencluster {
    pub value: C64,
    pub multiplicity: usize,
}

/// Eigenvalues grouped into clusters with multiplicities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    clusters: Vec<Eigencluster>,
}

impl Spectrum {
    /// Groups `values` by single-linkage: values within `tol` of each other (transitively) form
    /// one cluster, represented by their mean.
    pub fn from_values(values: &[C64], tol: f64) -> Self {
        let n = values.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (values[i] - values[j]).norm() <= tol {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[rj] = ri;
                    }
                }
            }
        }
        let mut groups: Vec<(usize, C64, usize)> = Vec::new();
        for (i, value) in values.iter().enumerate() {
            let root = find(&mut parent, i);
            match groups.iter_mut().find(|g| g.0 == root) {
                Some(g) => {
                    g.1 += value;
                    g.2 += 1;
                }
                None => groups.push((root, *value, 1)),
            }
        }
        let mut clusters: Vec<Eigencluster> = groups
            .into_iter()
            .map(|(_, sum, k)| Eigencluster {
                value: sum / k as f64,
                multiplicity: k,
            })
            .collect();
        clusters.sort_by(|a, b| {
            a.value
                .re
                .total_cmp(&b.value.re)
                .then(a.value.im.total_cmp(&b.value.im))
        });
        Spectrum { clusters }
    }

    pub fn clusters(&self) -> &[Eigencluster] {
        &self.clusters
    }

    /// All eigenvalues, repeated according to multiplicity.
    pub fn values(&self) -> Vec<C64> {
        self.clusters
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.value, c.multiplicity))
            .collect()
    }

    /// Sum of multiplicities.
    pub fn len(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Multiplicity of the cluster within `tol` of `z` (0 if none).
    pub fn multiplicity_near(&self, z: C64, tol: f64) -> usize {
        self.clusters
            .iter()
            .filter(|c| (c.value - z).norm() <= tol)
            .map(|c| c.multiplicity)
            .sum()
    }

    pub fn scaled(&self, factor: C64) -> Spectrum {
        Spectrum {
            clusters: self
                .clusters
                .iter()
                .map(|c| Eigencluster {
                    value: c.value * factor,
                    multiplicity: c.multiplicity,
                })
                .collect(),
        }
    }
}

/// Largest distance in a greedy closest-pair matching of two multisets; `f64::INFINITY` when
/// the sizes differ.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for _ in 0..a.len() {
        let mut best = (f64::INFINITY, 0, 0);
        for (i, x) in a.iter().enumerate().filter(|(i, _)| !used_a[*i]) {
            for (j, y) in b.iter().enumerate().filter(|(j, _)| !used_b[*j]) {
                let d = (x - y).norm();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        used_a[best.1] = true;
        used_b[best.2] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Eigenvalues (with multiplicity) and unit right eigenvectors, one column per eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: Matrix,
    pub spectrum: Spectrum,
}

/// Complex Schur form `a = Z T Z^H` with `T` upper triangular.
///
/// Householder reduction to Hessenberg form followed by single-shift QR sweeps (Wilkinson shift,
/// exceptional shifts every tenth stalled sweep). A subdiagonal entry is deflated when it is
/// negligible relative to its diagonal neighbours or to `||H||_F`; the absolute test is what
/// lets nilpotent blocks converge.
pub fn schur(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok((a.clone(), a.clone()));
    }
    let (mut z, mut h) = Hessenberg::new(a.clone()).unpack();
    if n == 1 {
        return Ok((z, h));
    }
    let eps = f64::EPSILON;
    let hnorm = norm_fro(&h);
    let mut hi = n - 1;
    let mut stalled = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= eps * local || sub <= eps * hnorm {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            stalled = 0;
            continue;
        }
        stalled += 1;
        total += 1;
        if total > MAX_ITER.max(100 * n) {
            return Err(LinalgError::NoConvergence("Schur decomposition"));
        }
        let shift = if stalled.is_multiple_of(10) {
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        qr_sweep(&mut h, &mut z, lo, hi, shift);
    }
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((z, h))
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (r1, r2) = (mean + disc, mean - disc);
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    (ax / r, (x / ax) * y.conj() / r)
}

/// Reorders a Schur pair `a = Z T Z^H` so the diagonal entries flagged in `select` come first,
/// by swapping adjacent entries with Givens rotations.
pub fn schur_reorder(z: &mut Matrix, t: &mut Matrix, select: &[bool]) {
    let n = t.nrows();
    let mut flags = select.to_vec();
    let mut next = 0;
    for i in 0..n {
        if !flags[i] {
            continue;
        }
        for k in (next..i).rev() {
            swap_adjacent(z, t, k);
            flags.swap(k, k + 1);
        }
        next += 1;
    }
}

fn swap_adjacent(z: &mut Matrix, t: &mut Matrix, k: usize) {
    let n = t.nrows();
    let (a, b, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k + 1)]);
    // (b, d - a) is the eigenvector for d; rotate it onto the first axis
    let (cs, sn) = givens(b, d - a);
    for j in k..n {
        let (p, q) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = p * cs + sn * q;
        t[(k + 1, j)] = -sn.conj() * p + q * cs;
    }
    for i in 0..=(k + 1) {
        let (p, q) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = p * cs + q * sn.conj();
        t[(i, k + 1)] = -p * sn + q * cs;
    }
    for i in 0..n {
        let (p, q) = (z[(i, k)], z[(i, k + 1)]);
        z[(i, k)] = p * cs + q * sn.conj();
        z[(i, k + 1)] = -p * sn + q * cs;
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
}

/// One implicit single-shift QR sweep on the active block `lo..=hi`.
fn qr_sweep(h: &mut Matrix, z: &mut Matrix, lo: usize, hi: usize, shift: C64) {
    let n = h.nrows();
    for k in lo..hi {
        let (x, y) = if k == lo {
            (h[(k, k)] - shift, h[(k + 1, k)])
        } else {
            (h[(k, k - 1)], h[(k + 1, k - 1)])
        };
        let (cs, sn) = givens(x, y);
        let first = if k == lo { k } else { k - 1 };
        for j in first..n {
            let (p, q) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = p * cs + sn * q;
            h[(k + 1, j)] = -sn.conj() * p + q * cs;
        }
        let last = (k + 2).min(hi);
        for i in 0..=last {
            let (p, q) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = p * cs + q * sn.conj();
            h[(i, k + 1)] = -p * sn + q * cs;
        }
        for i in 0..n {
            let (p, q) = (z[(i, k)], z[(i, k + 1)]);
            z[(i, k)] = p * cs + q * sn.conj();
            z[(i, k + 1)] = -p * sn + q * cs;
        }
        if k > lo {
            h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
        }
    }
}

pub fn eigenvalues(a: &Matrix) -> Result<Vec<C64>> {
    let (_, t) = schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Full eigendecomposition. Eigenvectors come from back-substitution on the Schur factor, with
/// near-zero pivots replaced by a small multiple of `||T||` so defective eigenvalues still yield
/// a vector with a small residual.
pub fn eig(a: &Matrix) -> Result<Eigen> {
    let n = ensure_square(a)?;
    let (z, t) = schur(a)?;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = norm_fro(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut y = Matrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut pivot = t[(i, i)] - lambda;
            if pivot.norm() < small {
                pivot = C64::new(small, 0.0);
            }
            y[(i, k)] = -acc / pivot;
        }
    }
    let mut vectors = z * y;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= C64::new(nrm, 0.0);
        }
    }
    let spectrum = Spectrum::from_values(&values, cluster_tol(norm2(a)));
    Ok(Eigen {
        values,
        vectors,
        spectrum,
    })
}

/// Spectrum with the default cluster tolerance scaled by `||a||_2`.
pub fn spectrum(a: &Matrix) -> Result<Spectrum> {
    let values = eigenvalues(a)?;
    Ok(Spectrum::from_values(&values, cluster_tol(norm2(a))))
}

/// Solves `a x = b` by LU. Fails when `a` is singular to working precision.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if b.nrows() != n {
        return Err(LinalgError::Dimension(format!(
            "right-hand side has {} rows, expected {n}",
            b.nrows()
        )));
    }
    let inv = inverse(a)?;
    let lu = a.clone().lu();
    let mut x = lu.solve(b).ok_or(LinalgError::Singular {
        condition: f64::INFINITY,
    })?;
    // one step of iterative refinement
    let r = b - a * &x;
    x += &inv * r;
    Ok(x)
}

/// Inverse with a 1-norm condition check.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    ensure_square(a)?;
    let inv = a.clone().lu().try_inverse().ok_or(LinalgError::Singular {
        condition: f64::INFINITY,
    })?;
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() || condition > 1e14 {
        return Err(LinalgError::Singular { condition });
    }
    Ok(inv)
}

/// 1-norm condition number estimate; infinite for singular input.
pub fn condition(a: &Matrix) -> f64 {
    match a.clone().lu().try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}

pub fn determinant(a: &Matrix) -> Result<C64> {
    ensure_square(a)?;
    Ok(a.clone().lu().determinant())
}

// Pade coefficients for degrees 3, 5, 7, 9, 13 and the matching 1-norm thresholds.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

fn scale(m: &Matrix, s: f64) -> Matrix {
    m * C64::new(s, 0.0)
}

/// Matrix exponential by scaling and squaring around a diagonal Pade approximant.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    let norm = norm1(a);
    let eye = identity(n);
    if norm == 0.0 {
        return Ok(eye);
    }
    if !norm.is_finite() {
        return Err(LinalgError::ExpOverflow { norm });
    }
    let a2 = a * a;
    for (degree, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let mut even = scale(&eye, coeffs[0]);
            let mut odd = scale(&eye, coeffs[1]);
            let mut power = eye.clone();
            for k in 1..=degree / 2 {
                power = &power * &a2;
                even += scale(&power, coeffs[2 * k]);
                odd += scale(&power, coeffs[2 * k + 1]);
            }
            let u = a * odd;
            return pade_quotient(&even, &u, norm);
        }
    }
    let squarings = (norm / THETA13).log2().ceil().max(0.0) as i32;
    if squarings > 1000 {
        return Err(LinalgError::ExpOverflow { norm });
    }
    let sa = scale(a, 2f64.powi(-squarings));
    let b = &PADE13;
    let a2 = &sa * &sa;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]));
    let u = &sa
        * (inner_u + scale(&a6, b[7]) + scale(&a4, b[5]) + scale(&a2, b[3]) + scale(&eye, b[1]));
    let v = &a6 * (scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]))
        + scale(&a6, b[6])
        + scale(&a4, b[4])
        + scale(&a2, b[2])
        + scale(&eye, b[0]);
    let mut r = pade_quotient(&v, &u, norm)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LinalgError::ExpOverflow { norm });
    }
    Ok(r)
}

fn pade_quotient(v: &Matrix, u: &Matrix, norm: f64) -> Result<Matrix> {
    let denominator = v - u;
    let numerator = v + u;
    denominator
        .lu()
        .solve(&numerator)
        .ok_or(LinalgError::ExpOverflow { norm })
}

/// Polynomial with complex coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Stores the coefficients after dropping trailing entries with `|c| <= trim_tol`.
    pub fn new(mut coeffs: Vec<C64>, trim_tol: f64) -> Self {
        while coeffs.last().is_some_and(|c| c.norm() <= trim_tol) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&v| c(v, 0.0)).collect(), 0.0)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree after trimming; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }
}

/// Roots from the eigenvalues of the companion matrix; as many roots as the degree.
pub fn poly_roots(p: &Polynomial) -> Result<Spectrum> {
    let roots = poly_root_values(p)?;
    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(Spectrum::from_values(&roots, cluster_tol(scale)))
}

pub fn poly_root_values(p: &Polynomial) -> Result<Vec<C64>> {
    let degree = p.degree().ok_or(LinalgError::ZeroPolynomial)?;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let coeffs = p.coeffs();
    let lead = coeffs[degree];
    let mut companion = Matrix::zeros(degree, degree);
    for j in 0..degree {
        companion[(0, j)] = -coeffs[degree - 1 - j] / lead;
    }
    for i in 1..degree {
        companion[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    eigenvalues(&companion)
}

#[cfg(test)]
mod tests {

    #[test]
    fn schur_reorder_moves_selected_eigenvalues_first() {
        let a = from_real_rows(&[
            vec![1.0, 2.0, 0.5, -1.0],
            vec![0.3, -2.0, 1.0, 0.0],
            vec![0.0, 1.5, 3.0, 0.7],
            vec![1.0, 0.0, -0.4, 0.2],
        ])
        .unwrap();
        let (mut z, mut t) = schur(&a).unwrap();
        let before: Vec<C64> = (0..4).map(|i| t[(i, i)]).collect();
        let select: Vec<bool> = before.iter().map(|v| v.norm() < 1.5).collect();
        schur_reorder(&mut z, &mut t, &select);
        let k = select.iter().filter(|s| **s).count();
        for i in 0..4 {
            assert_eq!(t[(i, i)].norm() < 1.5, i < k);
            for j in 0..i {
                assert!(t[(i, j)].norm() < 1e-14);
            }
        }
        assert!(norm_fro(&(&z * &t * z.adjoint() - &a)) < 1e-12);
        assert!(multiset_distance(&before, &(0..4).map(|i| t[(i, i)]).collect::<Vec<_>>()) < 1e-12);
    }
    use super::*;

    fn real(rows: &[&[f64]]) -> Matrix {
        from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            from_real_rows(&[]),
            Err(LinalgError::Empty { .. })
        ));
        assert!(matches!(
            from_real_rows(&[vec![1.0, 2.0], vec![1.0]]),
            Err(LinalgError::Ragged { row: 1, .. })
        ));
        assert!(matches!(
            from_real_rows(&[vec![1.0, f64::NAN]]),
            Err(LinalgError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn kron_identity_and_structure() {
        let k = kron(&identity(2), &real(&[&[5.0]]));
        assert_eq!(k, real(&[&[5.0, 0.0], &[0.0, 5.0]]));
        let k = kron(&real(&[&[0.0, 1.0], &[0.0, 0.0]]), &identity(2));
        let expected = real(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn eig_rotation_generator() {
        let e = eig(&real(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        let got = e.spectrum.values();
        assert!(multiset_distance(&got, &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-12);
    }

    #[test]
    fn eig_defective_block_has_small_residual() {
        let a = real(&[&[2.0, 1.0], &[0.0, 2.0]]);
        let e = eig(&a).unwrap();
        assert_eq!(e.spectrum.clusters().len(), 1);
        assert_eq!(e.spectrum.clusters()[0].multiplicity, 2);
        for k in 0..2 {
            let v = e.vectors.column(k).into_owned();
            let r = &a * &v - &v * e.values[k];
            assert!(r.norm() <= 1e-10 * norm2(&a));
        }
    }

    #[test]
    fn rank_basics() {
        assert_eq!(rank(&identity(3), 1e-10), 3);
        assert_eq!(rank(&Matrix::zeros(3, 3), 1e-10), 0);
        let e = real(&[&[2.0, 2.0, 0.0], &[-1.0, -2.0, 1.0], &[1.0, 3.0, -2.0]]);
        assert_eq!(rank(&e, default_rank_tol(&e)), 2);
    }

    #[test]
    fn expm_zero_and_diagonal() {
        assert_eq!(expm(&Matrix::zeros(3, 3)).unwrap(), identity(3));
        for &(a, b) in &[(0.001, -0.002), (0.3, -0.7), (2.0, -3.5), (12.0, -40.0)] {
            let e = expm(&real(&[&[a, 0.0], &[0.0, b]])).unwrap();
            assert!((e[(0, 0)].re - a.exp()).abs() <= 1e-13 * a.exp());
            assert!((e[(1, 1)].re - b.exp()).abs() <= 1e-13 * b.exp().max(1e-300));
            assert!(e[(0, 1)].norm() == 0.0 && e[(1, 0)].norm() == 0.0);
        }
    }

    #[test]
    fn expm_rotation() {
        let t = 1.3_f64;
        let e = expm(&real(&[&[0.0, t], &[-t, 0.0]])).unwrap();
        let expected = real(&[&[t.cos(), t.sin()], &[-t.sin(), t.cos()]]);
        assert!(norm_fro(&(e - expected)) < 1e-14);
    }

    #[test]
    fn expm_overflow_is_reported() {
        let big = real(&[&[1e300, 0.0], &[0.0, 1e300]]);
        assert!(matches!(expm(&big), Err(LinalgError::ExpOverflow { .. })));
    }

    #[test]
    fn roots_of_paper_quadratics() {
        let r = poly_roots(&Polynomial::from_real(&[2.0, -14.0, 12.0])).unwrap();
        assert!(multiset_distance(&r.values(), &[c(1.0, 0.0), c(1.0 / 6.0, 0.0)]) < 1e-12);
        let r = poly_roots(&Polynomial::from_real(&[12.5, 0.0, 20.5])).unwrap();
        let w = (12.5_f64 / 20.5).sqrt();
        assert!(multiset_distance(&r.values(), &[c(0.0, w), c(0.0, -w)]) < 1e-12);
        assert!((w - 0.7809).abs() < 1e-4);
    }

    #[test]
    fn roots_of_monomial_and_zero() {
        let r = poly_roots(&Polynomial::from_real(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.clusters().len(), 1);
        assert!(r.clusters()[0].value.norm() < 1e-12);
        assert_eq!(
            poly_roots(&Polynomial::from_real(&[0.0, 0.0])),
            Err(LinalgError::ZeroPolynomial)
        );
        assert!(poly_roots(&Polynomial::from_real(&[3.0]))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn solve_simple_and_singular() {
        let b = real(&[&[2.0], &[4.0]]);
        assert_eq!(solve(&identity(2), &b).unwrap(), b);
        let x = solve(&real(&[&[2.0, 0.0], &[0.0, 4.0]]), &b).unwrap();
        assert!(norm_fro(&(x - real(&[&[1.0], &[1.0]]))) < 1e-15);
        let sing = real(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(
            solve(&sing, &b),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn svd_of_rank_deficient_complex_matrix() {
        // rank-one with a complex phase; the shape that trips up QR-based complex SVDs
        let u = Matrix::from_fn(5, 1, |i, _| c(1.0 + i as f64, 0.5 * i as f64));
        let v = Matrix::from_fn(1, 5, |_, j| c(0.3 - j as f64, -0.2 * j as f64));
        let a = &u * &v;
        let d = svd(&a);
        assert!(d.s[1] < 1e-14 * d.s[0]);
        let mut sigma = Matrix::zeros(5, 5);
        for (k, s) in d.s.iter().enumerate() {
            sigma[(k, k)] = c(*s, 0.0);
        }
        let rec = &d.u * sigma * d.v.adjoint();
        assert!(norm_fro(&(rec - &a)) < 1e-13 * d.s[0]);
        assert!(norm_fro(&(d.v.adjoint() * &d.v - identity(5))) < 1e-13);
        assert_eq!(rank(&a, default_rank_tol(&a)), 1);
    }

    #[test]
    fn pseudo_inverse_solves_consistent_overdetermined_system() {
        let a = real(&[&[1.0, 0.0], &[0.0, 2.0], &[1.0, 1.0]]);
        let x = real(&[&[3.0], &[-1.0]]);
        let b = &a * &x;
        assert!(norm_fro(&(pseudo_inverse(&a) * b - x)) < 1e-13);
    }

    #[test]
    fn svd_left_factor_is_unitary_for_singular_input() {
        let zero = Matrix::zeros(3, 3);
        let d = svd(&zero);
        assert!(norm_fro(&(d.u.adjoint() * &d.u - identity(3))) < 1e-14);
        let a = from_real_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let d = svd(&a);
        assert!(norm_fro(&(d.u.adjoint() * &d.u - identity(3))) < 1e-12);
    }

    #[test]
    fn svd_of_wide_matrix_has_full_v() {
        let a = real(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let d = svd(&a);
        assert_eq!(d.s.len(), 2);
        assert_eq!(d.v.shape(), (3, 3));
        let kernel = null_space(&a, 1);
        assert!(norm_fro(&(&a * kernel)) < 1e-13);
    }

    #[test]
    fn clustering_merges_transitively() {
        let s = Spectrum::from_values(
            &[
                c(1.0, 0.0),
                c(1.0 + 4e-7, 0.0),
                c(1.0 + 8e-7, 0.0),
                c(2.0, 0.0),
            ],
            5e-7,
        );
        assert_eq!(s.clusters().len(), 2);
        assert_eq!(s.multiplicity_near(c(1.0, 0.0), 1e-6), 3);
        assert_eq!(s.len(), 4);
    }
}
