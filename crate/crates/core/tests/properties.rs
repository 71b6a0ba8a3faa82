use ergokit_core::chain::{self, ChainParams, ChainState};
use ergokit_core::galerkin::{gronwall_stability_check, holder_interpolation_check, integrate_wave, GalerkinSpec, ModeState};
use ergokit_core::gibbs::{
    coercivity_constant, log_density, metropolis_acceptance, reweighting_functional, GibbsSpec, PotentialSpec,
    StiffnessMatrix,
};
use ergokit_core::observable::ObservableSpec;
use ergokit_core::io;
use ergokit_core::quadrature;
use ergokit_core::stationary::{laplace_expansion, solve_stationary};
use ergokit_core::spectral::{
    cesaro_correlation, cesaro_correlation_quadrature, cesaro_limit_exact, evolve_unitary, spectral_decompose,
    HermitianOperator, StateVector,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn hermitian(n: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec(-2.0f64..2.0, 2 * n * n).prop_map(move |xs| {
        let m = DMatrix::from_fn(n, n, |i, j| C64::new(xs[i * n + j], xs[n * n + i * n + j]));
        HermitianOperator::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
    })
}

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(-1.0f64..1.0, 2 * n).prop_map(move |xs| {
        let c: Vec<C64> = (0..n).map(|i| C64::new(xs[i], xs[n + i])).collect();
        StateVector::from_complex(&c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unitary_evolution_preserves_norm(h in hermitian(5), psi in state(5), t in -20.0f64..20.0) {
        let d = spectral_decompose(&h).unwrap();
        let out = evolve_unitary(&d, &psi, t).unwrap();
        prop_assert!((out.norm() - psi.norm()).abs() < 1e-10 * psi.norm().max(1.0));
    }

    #[test]
    fn evolution_group_law(h in hermitian(4), psi in state(4), s in -5.0f64..5.0, t in -5.0f64..5.0) {
        let d = spectral_decompose(&h).unwrap();
        let a = evolve_unitary(&d, &evolve_unitary(&d, &psi, t).unwrap(), s).unwrap();
        let b = evolve_unitary(&d, &psi, s + t).unwrap();
        let diff = (&a.components - &b.components).norm();
        prop_assert!(diff < 1e-10);
    }

    #[test]
    fn cesaro_average_is_bounded_and_matches_quadrature(
        h in hermitian(4), a in state(4), b in state(4), t in 0.1f64..30.0
    ) {
        let d = spectral_decompose(&h).unwrap();
        let closed = cesaro_correlation(&d, &a, &b, t).unwrap();
        let quad = cesaro_correlation_quadrature(&d, &a, &b, t, 400).unwrap();
        prop_assert!((closed - quad).abs() < 1e-8);
        prop_assert!(closed >= -1e-12);
        prop_assert!(closed <= (a.norm() * b.norm()).powi(2) + 1e-10);
        let lim = cesaro_limit_exact(&d, &a, &b, d.default_degeneracy_tol()).unwrap();
        prop_assert!(lim >= 0.0 && lim <= (a.norm() * b.norm()).powi(2) + 1e-10);
    }

    #[test]
    fn verlet_round_trip(q in prop::collection::vec(-1.0f64..1.0, 6), p in prop::collection::vec(-1.0f64..1.0, 6)) {
        let prm = ChainParams::new(6, 1.0, 1.0, 2).unwrap();
        let s0 = ChainState { q, p, t: 0.0 };
        let fwd = chain::integrate(&s0, &prm, 1e-3, 1000, |_| {}).unwrap();
        let mut back = fwd.clone();
        back.p.iter_mut().for_each(|x| *x = -*x);
        let mut end = chain::integrate(&back, &prm, 1e-3, 1000, |_| {}).unwrap();
        end.p.iter_mut().for_each(|x| *x = -*x);
        for (x, y) in end.q.iter().chain(&end.p).zip(s0.q.iter().chain(&s0.p)) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_volume_preserved(q in prop::collection::vec(-0.5f64..0.5, 4), p in prop::collection::vec(-0.5f64..0.5, 4)) {
        let prm = ChainParams::new(4, 1.0, 1.0, 2).unwrap();
        let s0 = ChainState { q, p, t: 0.0 };
        let d = chain::liouville_jacobian_check(&s0, &prm, 0.2, 1e-2).unwrap();
        prop_assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn metropolis_detailed_balance(
        x in prop::collection::vec(-2.0f64..2.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
        beta in 0.1f64..5.0,
        g in 0.0f64..3.0,
    ) {
        let a = StiffnessMatrix::second_difference_1d(3, 0.5).unwrap();
        let s = GibbsSpec::new(a, PotentialSpec::polynomial_even(g, 2), beta, 0.5).unwrap();
        let lx = log_density(&s, &x).unwrap();
        let ly = log_density(&s, &y).unwrap();
        // π(x)k(x→y) = π(y)k(y→x) in log space relative to the larger density
        let m = lx.max(ly);
        let lhs = (lx - m).exp() * metropolis_acceptance(&s, &x, &y).unwrap();
        let rhs = (ly - m).exp() * metropolis_acceptance(&s, &y, &x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13);
    }

    #[test]
    fn coercivity_is_homogeneous(n in 1usize..12, h in 0.05f64..2.0, c in 0.1f64..10.0) {
        let a = StiffnessMatrix::second_difference_1d(n, h).unwrap();
        let l = coercivity_constant(&a).unwrap();
        let lc = coercivity_constant(&a.scaled(c).unwrap()).unwrap();
        prop_assert!(l > 0.0);
        prop_assert!((lc - c * l).abs() < 1e-10 * c * l);
    }

    #[test]
    fn holder_on_random_trig_fields(coefs in prop::collection::vec(-1.0f64..1.0, 6), shift in -0.5f64..0.5, q in 2.0f64..4.0) {
        let spec = GalerkinSpec::single_term(6, 1.0, 1.0, 2).unwrap();
        let (x, w) = quadrature::gauss_legendre_on(64, -1.0, 1.0);
        let f: Vec<f64> = x.iter().map(|&x| spec.field_at(&coefs, x) + shift).collect();
        let r = holder_interpolation_check(&[f], &w, q, 2).unwrap();
        prop_assert!(r.passed, "slack {}", r.min_slack);
    }

    #[test]
    fn matrix_json_round_trip(h in hermitian(3)) {
        let rows: Vec<Vec<[f64; 2]>> = (0..3)
            .map(|i| (0..3).map(|j| { let z = h.entries()[(i, j)]; [z.re, z.im] }).collect())
            .collect();
        let text = serde_json::to_string(&rows).unwrap();
        let back = io::parse_hermitian(&text).unwrap();
        prop_assert_eq!(back.entries(), h.entries());
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(io::format_float(x).parse::<f64>().unwrap(), x);
    }
}

/// Symmetric, strictly diagonally dominant, hence positive definite.
fn stiffness(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |xs| {
        let m = DMatrix::from_fn(n, n, |i, j| xs[i * n + j] + xs[j * n + i]);
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] = m.row(i).iter().map(|x| x.abs()).sum::<f64>() + 0.5;
        }
        a
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplace_expansion_exact_for_gaussian(a in stiffness(3), beta in 0.5f64..50.0, dx in 0.1f64..1.0) {
        let s = GibbsSpec::new(StiffnessMatrix::new(a.clone()).unwrap(), PotentialSpec::None, beta, dx).unwrap();
        let e = laplace_expansion(&s, &ObservableSpec::L2NormSq, beta).unwrap();
        let exact = dx * a.try_inverse().unwrap().trace() / beta;
        prop_assert!(e.zeroth.abs() < 1e-14);
        prop_assert!((e.zeroth + e.first_order - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn even_potential_is_stationary_at_origin(a in stiffness(4), g in 0.0f64..5.0) {
        let s = GibbsSpec::new(StiffnessMatrix::new(a).unwrap(), PotentialSpec::polynomial_even(g, 2), 1.0, 0.5).unwrap();
        let sol = solve_stationary(&s, 1e-12, 100).unwrap();
        prop_assert!(sol.phi_star.iter().all(|x| x.abs() < 1e-12));
        prop_assert!(sol.residual_norm < 1e-12);
    }

    #[test]
    // |q| ≤ 3 keeps the exponent well above the f64 underflow threshold
    fn reweighting_in_unit_interval_for_nonnegative_g(
        q in prop::collection::vec(-3.0f64..3.0, 3),
        g in 0.0f64..4.0,
        k in 1u32..4,
    ) {
        let a = StiffnessMatrix::second_difference_1d(3, 0.5).unwrap();
        let s = GibbsSpec::new(a, PotentialSpec::polynomial_even(g, k), 1.0, 0.5).unwrap();
        let w = reweighting_functional(&s, &q);
        prop_assert!(w > 0.0 && w <= 1.0, "{w}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_galerkin_modes_oscillate(u0 in prop::collection::vec(-1.0f64..1.0, 4)) {
        let spec = GalerkinSpec::single_term(4, 1.0, 0.0, 2).unwrap();
        let t = 1.0;
        let tr = integrate_wave(&spec, &ModeState::at_rest(u0.clone()), t, 1e-3, usize::MAX).unwrap();
        for (m, (&c, &u)) in u0.iter().zip(&tr.final_state().u).enumerate() {
            let w = (m + 1) as f64 * std::f64::consts::PI / 2.0;
            // Verlet phase error is O(w³ t dt²)
            prop_assert!((u - c * (w * t).cos()).abs() <= 1e-5, "mode {}: {} vs {}", m + 1, u, c * (w * t).cos());
        }
    }

    #[test]
    fn gronwall_envelope_holds(
        u0 in prop::collection::vec(-1.0f64..1.0, 8),
        bump in prop::collection::vec(-1.0f64..1.0, 8),
        delta in 1e-8f64..1e-4,
    ) {
        prop_assume!(bump.iter().any(|b| b.abs() > 1e-3));
        let spec = GalerkinSpec::single_term(8, 1.0, 1.0, 2).unwrap();
        let r = gronwall_stability_check(&spec, &u0, &bump, delta, 1.0, 1e-3).unwrap();
        prop_assert!(r.passed, "sup ratio {}", r.sup_ratio);
    }
}
