//! Seeded random instances for property checks and the self-test.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::WeightedDigraph;
use crate::matkit::{self, Matrix};
use crate::pencil::MatrixPencil;
use crate::Tolerances;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `I + 0.4 G` with uniform `G`: random but comfortably invertible.
fn near_identity<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) + uniform_matrix(rng, n, n) * (0.4 / (n as f64).sqrt())
}

/// Digraph on `m` vertices; each arc is present with a random density and weighted in
/// `[0.2, 2]`.
pub fn digraph<R: Rng>(rng: &mut R, m: usize) -> WeightedDigraph {
    let density = rng.random_range(0.15..0.85);
    let mut w = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j && rng.random_bool(density) {
                w[(i, j)] = rng.random_range(0.2..2.0);
            }
        }
    }
    WeightedDigraph::new(w).expect("generated weights are valid")
}

pub fn symmetric_digraph<R: Rng>(rng: &mut R, m: usize) -> WeightedDigraph {
    let density = rng.random_range(0.3..0.9);
    let mut w = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.random_bool(density) {
                let v = rng.random_range(0.2..2.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    WeightedDigraph::new(w).expect("generated weights are valid")
}

/// Generic singular pencil: `E` of random rank `r < n` as a product of uniform factors and a
/// uniform `F`. Such pencils are regular and impulse-free with probability one.
pub fn generic_pencil<R: Rng>(rng: &mut R, n: usize) -> MatrixPencil {
    let r = if n == 1 {
        rng.random_range(0..=1)
    } else {
        rng.random_range(1..n)
    };
    let e = uniform_matrix(rng, n, r) * uniform_matrix(rng, r, n);
    let f = uniform_matrix(rng, n, n);
    MatrixPencil::new(
        matkit::from_real(&e),
        matkit::from_real(&f),
        &Tolerances::default(),
    )
    .expect("square pencil")
}

/// Pencil with prescribed Weierstrass structure: `E = Q0 diag(I, N0) P0`,
/// `F = Q0 diag(A1, I) P0`, where `N0` is a nilpotent Jordan-type matrix with random block sizes
/// (so impulsive pencils with `h >= 2` occur).
pub fn structured_pencil<R: Rng>(rng: &mut R, n: usize) -> (MatrixPencil, usize, usize) {
    let n1 = rng.random_range(0..n);
    let n2 = n - n1;
    let mut n0 = DMatrix::<f64>::zeros(n2, n2);
    let mut start = 0;
    let mut h = 0;
    while start < n2 {
        let size = rng.random_range(1..=(n2 - start));
        for k in start..(start + size - 1) {
            n0[(k, k + 1)] = rng.random_range(0.5..1.5);
        }
        h = h.max(size);
        start += size;
    }
    let a1 = uniform_matrix(rng, n1, n1) * 2.0;
    let mut e0 = DMatrix::<f64>::zeros(n, n);
    let mut f0 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n1 {
        e0[(i, i)] = 1.0;
    }
    e0.view_mut((n1, n1), (n2, n2)).copy_from(&n0);
    f0.view_mut((0, 0), (n1, n1)).copy_from(&a1);
    for i in n1..n {
        f0[(i, i)] = 1.0;
    }
    let q0 = near_identity(rng, n);
    let p0 = near_identity(rng, n);
    let e = &q0 * e0 * &p0;
    let f = &q0 * f0 * &p0;
    let pencil = MatrixPencil::new(
        matkit::from_real(&e),
        matkit::from_real(&f),
        &Tolerances::default(),
    )
    .expect("square pencil");
    (pencil, n1, h)
}

pub fn initial_state<R: Rng>(rng: &mut R, n: usize, m: usize) -> Matrix {
    matkit::from_real(&(uniform_matrix(rng, n, m) * 5.0))
}
