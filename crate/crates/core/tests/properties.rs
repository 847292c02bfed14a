use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use swarmstab::cli::instances;
use swarmstab::criteria::{self, Classification};
use swarmstab::graph;
use swarmstab::matkit::{self, c, Matrix, C64};
use swarmstab::pencil::{self, MatrixPencil};
use swarmstab::random;
use swarmstab::simulator::{self, ZeroModeConvention};
use swarmstab::Tolerances;

fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(20_240_917),
        ..Config::default()
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn pencil_from(seed: u64, n: usize) -> MatrixPencil {
    let mut rng = random::rng(seed);
    if seed.is_multiple_of(2) {
        random::generic_pencil(&mut rng, n)
    } else {
        random::structured_pencil(&mut rng, n).0
    }
}

fn complex_matrix(seed: u64, n: usize) -> Matrix {
    matkit::from_real(&random::uniform_matrix(&mut random::rng(seed), n, n))
}

fn orthogonal(seed: u64, n: usize) -> Matrix {
    let g = random::uniform_matrix(&mut random::rng(seed), n, n);
    matkit::from_real(&g.qr().q())
}

fn pairwise(x: &DMatrix<f64>) -> f64 {
    simulator::dispersion(x)
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn spanning_tree_iff_simple_zero(seed in any::<u64>(), m in 1usize..=7) {
        let g = random::digraph(&mut random::rng(seed), m);
        let a = graph::analyze_laplacian(&g, &tol()).unwrap();
        prop_assume!(a.zero_gap() >= 1e3 * a.cluster_tol);
        prop_assert_eq!(a.has_spanning_tree, a.zero_multiplicity == 1);
        prop_assert_eq!(a.has_spanning_tree, graph::has_spanning_tree(&g));
    }

    #[test]
    fn decomposition_reconstructs_and_impulse_tests_agree(seed in any::<u64>(), n in 1usize..=8) {
        let p = pencil_from(seed, n);
        let d = pencil::standard_decomposition(&p, &tol()).unwrap();
        let scaled = (d.residual_e / (matkit::norm2(p.e()) + 1.0))
            .max(d.residual_f / (matkit::norm2(p.f()) + 1.0));
        prop_assert!(scaled <= 1e-8, "residual {scaled:e}");
        prop_assert_eq!(d.n1 + d.n2, n);
        let checks = pencil::impulse_checks(&p, &d).unwrap();
        prop_assert!(checks.agree(), "{:?}", checks);
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn kron_spectrum_is_pairwise_products(seed in any::<u64>(), na in 1usize..=4, nb in 1usize..=4) {
        let a = complex_matrix(seed, na);
        let b = complex_matrix(seed.wrapping_add(1), nb);
        let la = matkit::eigenvalues(&a).unwrap();
        let lb = matkit::eigenvalues(&b).unwrap();
        let products: Vec<C64> = la.iter().flat_map(|x| lb.iter().map(move |y| x * y)).collect();
        let direct = matkit::eigenvalues(&matkit::kron(&a, &b)).unwrap();
        prop_assert!(matkit::multiset_distance(&direct, &products) <= 1e-6);
    }

    #[test]
    fn scaling_law(seed in any::<u64>(), n in 1usize..=6, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let factor = c(re, im);
        prop_assume!(factor.norm() > 0.2);
        let r = pencil::scaled_pencil_eigenvalues(&pencil_from(seed, n), factor, &tol()).unwrap();
        prop_assert!(r.mismatch <= 1e-6, "mismatch {:e}", r.mismatch);
    }

    #[test]
    fn both_routes_give_the_finite_spectrum(seed in any::<u64>(), n in 1usize..=6) {
        let p = pencil_from(seed, n);
        let roots = pencil::char_poly(&p).unwrap().root_values().unwrap();
        let d = pencil::standard_decomposition(&p, &tol()).unwrap();
        let a1 = matkit::eigenvalues(&d.a1).unwrap();
        let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(matkit::multiset_distance(&roots, &a1) <= 1e-6 * scale);
    }

    #[test]
    fn expm_inverse(seed in any::<u64>(), radius in 0.0f64..5.0) {
        let a = complex_matrix(seed, 6);
        let a = &a * c(radius / matkit::norm2(&a), 0.0);
        let prod = matkit::expm(&a).unwrap() * matkit::expm(&-&a).unwrap();
        prop_assert!(matkit::norm2(&(prod - matkit::identity(6))) <= 1e-9);
    }

    #[test]
    fn expm_of_commuting_sum(seed in any::<u64>()) {
        let a = complex_matrix(seed, 5);
        let b = &a * &a * c(0.3, 0.0) - &a + matkit::identity(5) * c(0.5, 0.0);
        let lhs = matkit::expm(&(&a + &b)).unwrap();
        let rhs = matkit::expm(&a).unwrap() * matkit::expm(&b).unwrap();
        prop_assert!(matkit::norm2(&(&lhs - rhs)) <= 1e-9 * (1.0 + matkit::norm2(&lhs)));
    }

    #[test]
    fn rank_survives_orthogonal_transforms(seed in any::<u64>(), n in 2usize..=7, r in 0usize..=7) {
        let r = r.min(n);
        let mut rng = random::rng(seed);
        let a = random::uniform_matrix(&mut rng, n, r) * random::uniform_matrix(&mut rng, r, n);
        let a = matkit::from_real(&a);
        let (u, v) = (orthogonal(seed ^ 1, n), orthogonal(seed ^ 2, n));
        let t = tol();
        let rotated = &u * &a * v.adjoint();
        prop_assert_eq!(matkit::rank(&a, t.rank_for(&a)), r);
        prop_assert_eq!(matkit::rank(&rotated, t.rank_for(&rotated)), r);
    }

    #[test]
    fn eigenpairs_reconstruct(seed in any::<u64>(), n in 1usize..=8) {
        let a = complex_matrix(seed, n);
        let e = matkit::eig(&a).unwrap();
        let lambda = Matrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let residual = &a * &e.vectors - &e.vectors * lambda;
        prop_assert!(matkit::norm2(&residual) <= 1e-8 * (1.0 + matkit::norm2(&a)));
    }

    #[test]
    fn left_zero_vector_is_a_distribution(seed in any::<u64>(), m in 2usize..=7) {
        let g = random::digraph(&mut random::rng(seed), m);
        let a = graph::analyze_laplacian(&g, &tol()).unwrap();
        prop_assume!(a.has_spanning_tree && a.zero_gap() >= 1e3 * a.cluster_tol);
        let nu = a.left_zero_vector.clone().unwrap();
        let sum: C64 = nu.iter().sum();
        prop_assert!((sum - c(1.0, 0.0)).norm() <= 1e-10);
        prop_assert!(nu.iter().all(|v| v.re >= -1e-10 && v.im.abs() <= 1e-10));
        prop_assert!((nu.transpose() * &a.laplacian).iter().all(|v| v.norm() <= 1e-9));
    }

    #[test]
    fn verdicts_ignore_positive_weight_scaling(seed in any::<u64>(), n in 1usize..=4, m in 2usize..=5, k in 0.2f64..5.0) {
        let p = pencil_from(seed, n);
        let g = random::digraph(&mut random::rng(seed ^ 7), m);
        let t = tol();
        let a = criteria::analyze(&p, &g, &t).unwrap();
        let b = criteria::analyze(&p, &g.scaled(k), &t).unwrap();
        let margin = |x: &criteria::Analysis| x.product_table().min_real_part().map(f64::abs);
        prop_assume!(margin(&a).is_none_or(|v| v > 1e-3));
        prop_assume!(a.laplacian.zero_gap() >= 1e3 * a.laplacian.cluster_tol);
        prop_assert_eq!(criteria::check_consensus(&a).classification, criteria::check_consensus(&b).classification);
        prop_assert_eq!(criteria::check_swarm_stability(&a).classification, criteria::check_swarm_stability(&b).classification);
    }

    #[test]
    fn fast_paths_agree_and_refine(seed in any::<u64>(), n in 1usize..=4, m in 2usize..=5, symmetric: bool) {
        let p = pencil_from(seed, n);
        let mut rng = random::rng(seed ^ 11);
        let g = if symmetric { random::symmetric_digraph(&mut rng, m) } else { random::digraph(&mut rng, m) };
        let a = criteria::analyze(&p, &g, &tol()).unwrap();
        let consensus = criteria::check_consensus(&a);
        let swarm = criteria::check_swarm_stability(&a);
        if let Some(fast) = criteria::corollary_fast_paths(&a) {
            prop_assert_eq!(
                fast.asymptotically_stable,
                consensus.classification == Classification::AsymptoticallySwarmStable
            );
        }
        if consensus.classification == Classification::AsymptoticallySwarmStable {
            prop_assert_ne!(swarm.classification, Classification::SwarmUnstable);
            prop_assert_eq!(criteria::overall(&consensus, &swarm), Classification::AsymptoticallySwarmStable);
        }
        if swarm.classification == Classification::SwarmUnstable {
            prop_assert_ne!(consensus.classification, Classification::AsymptoticallySwarmStable);
        }
    }

    #[test]
    fn zero_mode_convention_leaves_differences(seed in any::<u64>(), n in 1usize..=3, m in 2usize..=5) {
        let p = pencil_from(seed, n);
        let g = random::digraph(&mut random::rng(seed ^ 3), m);
        let Ok(sys) = simulator::assemble(&p, &g, &tol()) else { return Ok(()) };
        // with several zero modes the convention also fixes some differences
        prop_assume!(sys.analysis().laplacian.zero_multiplicity == 1);
        let x0 = matkit::real_part(&random::initial_state(&mut random::rng(seed ^ 5), n, m));
        let times = simulator::uniform_grid(1.0, 11);
        let a = sys.simulate_with(&x0, &times, ZeroModeConvention::Preserve).unwrap();
        let b = sys.simulate_with(&x0, &times, ZeroModeConvention::Zero).unwrap();
        for (xa, xb) in a.states.iter().zip(&b.states) {
            let scale = 1.0 + xa.amax();
            for i in 0..m {
                for j in 0..m {
                    let da = xa.column(i) - xa.column(j);
                    let db = xb.column(i) - xb.column(j);
                    prop_assert!((da - db).amax() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn consensus_subspace_is_invariant(seed in any::<u64>(), n in 1usize..=4, m in 2usize..=5) {
        let p = pencil_from(seed, n);
        let g = random::digraph(&mut random::rng(seed ^ 3), m);
        let Ok(sys) = simulator::assemble(&p, &g, &tol()) else { return Ok(()) };
        let v = random::uniform_matrix(&mut random::rng(seed ^ 9), n, 1);
        let x0 = DMatrix::from_fn(n, m, |k, _| v[(k, 0)]);
        // rounding off the subspace grows with the fastest unstable mode
        let growth = -sys.analysis().product_table().min_real_part().unwrap_or(0.0).min(0.0);
        let t_end = if growth > 0.0 { (10.0 / growth).min(3.0) } else { 3.0 };
        let traj = sys.simulate(&x0, &simulator::uniform_grid(t_end, 31)).unwrap();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            prop_assert!(pairwise(x) <= 1e-11 * (growth * t).exp() * (1.0 + x.amax()));
        }
    }
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn closed_form_matches_trapezoidal_oracle(seed in any::<u64>(), n in 1usize..=3, m in 2usize..=4) {
        let mut rng = random::rng(seed);
        let (p, _, h) = random::structured_pencil(&mut rng, n);
        prop_assume!(h <= 1);
        let g = random::digraph(&mut rng, m);
        let Ok(sys) = simulator::assemble(&p, &g, &tol()) else { return Ok(()) };
        prop_assume!(sys.decomposition().n_is_zero());
        let x0 = matkit::real_part(&random::initial_state(&mut rng, n, m));
        let times = simulator::uniform_grid(1.5, 4);
        let closed = sys.simulate(&x0, &times).unwrap();
        let reference = sys.reference_integrate(&closed.states[0], &times).unwrap();
        for (a, b) in closed.states.iter().zip(&reference.states) {
            prop_assert!((a - b).amax() <= 1e-6 * (1.0 + a.amax()));
        }
    }
}

/// The products `lambda_i mu_j` against the finite spectrum of `(E, lambda_i F)` computed directly.
fn scaled_spectra_agree(p: &MatrixPencil, g: &graph::WeightedDigraph) {
    let a = criteria::analyze(p, g, &tol()).unwrap();
    for cl in a.laplacian.nonzero_clusters() {
        let r = pencil::scaled_pencil_eigenvalues(p, cl.value, &tol()).unwrap();
        let scale = 1.0
            + r.direct
                .values()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
        assert!(
            r.mismatch <= 1e-6 * scale,
            "lambda {}: mismatch {:e}",
            cl.value,
            r.mismatch
        );
    }
}

#[test]
fn products_match_direct_scaled_pencils() {
    for s in instances::all() {
        scaled_spectra_agree(&s.pencil(), &s.graph());
    }
    for seed in 0..100u64 {
        let mut rng = random::rng(500 + seed);
        let n = 1 + seed as usize % 5;
        let p = if seed % 2 == 0 {
            random::generic_pencil(&mut rng, n)
        } else {
            random::structured_pencil(&mut rng, n).0
        };
        let g = random::digraph(&mut rng, 2 + seed as usize % 4);
        scaled_spectra_agree(&p, &g);
    }
}
