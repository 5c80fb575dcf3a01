use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use sgdct_core::covariance::{
    fundamental_solution, moment_ode_oracle, sigma_bar_eigen, sigma_bar_quadrature, symmetric_eigen,
};
use sgdct_core::{Matrix, ScheduleSpec};

fn random_symmetric(rng: &mut Xoshiro256PlusPlus, k: usize) -> Matrix {
    let mut a = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = rng.random_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// SPD with eigenvalues drawn from `[lo, hi]` and a random orthogonal basis.
fn random_spd(rng: &mut Xoshiro256PlusPlus, k: usize, lo: f64, hi: f64) -> Matrix {
    let basis = symmetric_eigen(&random_symmetric(rng, k)).unwrap().u;
    let lambda: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
    basis.matmul(&Matrix::from_diag(&lambda)).matmul(&basis.transpose()).symmetrize()
}

#[test]
fn eigen_reconstructs_random_matrices() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    for _ in 0..20 {
        let a = random_symmetric(&mut rng, 5);
        let e = symmetric_eigen(&a).unwrap();
        assert!(e.reconstruct().max_abs_diff(&a) < 1e-10);
        assert!(e.u.transpose().matmul(&e.u).max_abs_diff(&Matrix::identity(5)) < 1e-10);
        assert!(e.lambda.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn covariance_routes_agree_on_random_instances() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    for _ in 0..20 {
        let k = rng.random_range(1..=6);
        let c_alpha = rng.random_range(0.5..4.0);
        // smallest eigenvalue keeps 2 λ_min C_α ≥ 1.05
        let lo = 1.05 / (2.0 * c_alpha);
        let h = random_spd(&mut rng, k, lo, lo + 2.0);
        let hb = random_spd(&mut rng, k, 0.01, 2.0);
        let e = sigma_bar_eigen(&h, &hb, c_alpha).unwrap();
        let q = sigma_bar_quadrature(&h, &hb, c_alpha, 1e-10).unwrap();
        let dev = e.sigma_bar.max_abs_diff(&q.sigma_bar);
        assert!(dev < 1e-8, "k = {k}, deviation {dev}");
        assert!(e.sigma_bar.asymmetry() < 1e-12);
        assert!(symmetric_eigen(&e.sigma_bar).unwrap().lambda[0] >= -1e-10);
    }
}

#[test]
fn scalar_sigma_bar_grows_with_c_alpha_and_shrinks_with_curvature() {
    let s = |lambda: f64, c: f64| sigma_bar_eigen(&Matrix::scalar(lambda), &Matrix::scalar(0.7), c).unwrap().sigma_bar[(0, 0)];
    let h = 1e-6;
    for c in [2.5, 3.0, 4.0, 8.0] {
        assert!((s(0.5, c + h) - s(0.5, c - h)) / (2.0 * h) > 0.0, "C_alpha = {c}");
    }
    for lambda in [0.3, 0.5, 1.0, 2.0] {
        assert!((s(lambda + h, 4.0) - s(lambda - h, 4.0)) / (2.0 * h) < 0.0, "lambda = {lambda}");
    }
}

#[test]
fn fundamental_solution_semigroup() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let schedule = ScheduleSpec::new(1.7, 0.5).unwrap();
    for _ in 0..20 {
        let h = random_spd(&mut rng, 3, 0.1, 2.0);
        let s = rng.random_range(1.0..50.0);
        let t = s + rng.random_range(0.0..50.0);
        let direct = fundamental_solution(&h, &schedule, t, 1.0).unwrap();
        let composed = fundamental_solution(&h, &schedule, t, s)
            .unwrap()
            .matmul(&fundamental_solution(&h, &schedule, s, 1.0).unwrap());
        assert!(direct.max_abs_diff(&composed) < 1e-10);
    }
}

#[test]
fn fundamental_solution_obeys_the_decay_bound() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    for _ in 0..100 {
        let k = rng.random_range(1..=5);
        let h = random_spd(&mut rng, k, 0.05, 3.0);
        let c_alpha = rng.random_range(0.2..5.0);
        let schedule = ScheduleSpec::new(c_alpha, 0.0).unwrap();
        let c = symmetric_eigen(&h).unwrap().lambda[0];
        let s = rng.random_range(1.0..100.0);
        let t = s * rng.random_range(1.0..100.0);
        let phi = fundamental_solution(&h, &schedule, t, s).unwrap();
        let lhs = phi.norm().powi(2);
        let rhs = k as f64 * t.powf(-2.0 * c * c_alpha) * s.powf(2.0 * c * c_alpha);
        assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }
}

#[test]
fn moment_ode_matches_the_scalar_limit_across_offsets() {
    for c0 in [0.0, 1.0, 10.0] {
        let s = ScheduleSpec::new(4.0, c0).unwrap();
        let m = moment_ode_oracle(0.5, 0.5, &s, 0.3, &[1.0, 1e5]).unwrap();
        assert!((m[1] * 1e5 / (8.0 / 3.0) - 1.0).abs() < 1e-3, "c0 = {c0}");
    }
}

proptest! {
    #[test]
    fn sigma_bar_collapses_for_diagonal_hessians(
        l1 in 0.3f64..3.0, l2 in 0.3f64..3.0, off in -0.2f64..0.2, c_alpha in 2.0f64..6.0,
    ) {
        let h = Matrix::from_diag(&[l1, l2]);
        let hb = Matrix::from_rows(&[&[1.0, off], &[off, 0.5]]).unwrap();
        let p = sigma_bar_eigen(&h, &hb, c_alpha).unwrap();
        let bracket = |a: f64, b: f64| c_alpha * c_alpha / ((a + b) * c_alpha - 1.0);
        prop_assert!((p.sigma_bar[(0, 1)] - off * bracket(l1, l2)).abs() < 1e-12);
        prop_assert!((p.sigma_bar[(0, 0)] - bracket(l1, l1)).abs() < 1e-12);
        prop_assert!((p.sigma_bar[(1, 1)] - 0.5 * bracket(l2, l2)).abs() < 1e-12);
    }
}
