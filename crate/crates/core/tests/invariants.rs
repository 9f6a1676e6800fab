use coupling_lab::circle::{basis_index, basis_mode, evolve_circle, from_basis, to_basis, CircleGenerator};
use coupling_lab::numerics::fourier::ModeCoefficients;
use coupling_lab::numerics::grid::{KGrid, TimeGrid};
use coupling_lab::numerics::linalg;
use coupling_lab::numerics::maximal::maximal_partial_integral;
use coupling_lab::numerics::special::bessel_j0;
use coupling_lab::profile::ScalarProfile;
use coupling_lab::propagators::{evolve, EvolveOptions};
use coupling_lab::random::{random_contraction, random_profile, random_unitary, stream};
use coupling_lab::shortrange::ShortRangeModel;
use coupling_lab::spectral_limits::{model31, remark1_defect};
use coupling_lab::transport::{self, CircleMode, CirclePotential};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coeffs(v: &[(f64, f64)]) -> ModeCoefficients {
    ModeCoefficients::from_vec(v.iter().map(|(a, b)| c(*a, *b)).collect())
}

proptest! {
    #[test]
    fn hs_norm_at_zero_is_the_l2_norm(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9)) {
        let f = coeffs(&v);
        prop_assert!((f.hs_norm(0.0, None) - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn hs_norm_grows_with_s_off_the_mean(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 11), s in 0.0f64..2.0, ds in 0.0f64..1.0) {
        let mut f = coeffs(&v);
        f.set(0, c(0.0, 0.0));
        prop_assert!(f.hs_norm(s, None) <= f.hs_norm(s + ds, None) * (1.0 + 1e-12));
    }

    #[test]
    fn adjugate_keeps_contractions(seed in 0u64..10_000, dim in 2usize..=8, exact in any::<bool>()) {
        let mut rng = stream(seed, dim as u64);
        let z = random_contraction(&mut rng, dim, exact);
        prop_assert!(linalg::op_norm(&linalg::adjugate(&z)) <= 1.0 + 1e-10);
        let u = random_unitary(&mut rng, dim);
        prop_assert!((linalg::op_norm(&linalg::adjugate(&u)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn j0_series_remainder_is_below_the_next_term(z in 0.0f64..1.0, m in 0usize..5) {
        let x = -(z * z);
        let mut term = 1.0;
        let mut partial = 0.0;
        for j in 0..=m {
            partial += term;
            term *= x / ((j + 1) * (j + 1)) as f64;
        }
        prop_assert!((bessel_j0(z).unwrap() - partial).abs() <= term.abs() + 4.0 * f64::EPSILON);
    }

    #[test]
    fn basis_order_round_trips(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 13)) {
        let f = coeffs(&v);
        prop_assert_eq!(from_basis(&to_basis(&f, 6)), f);
    }

    #[test]
    fn phase_has_no_mean(k in -5.0f64..5.0, t in 0.1f64..10.0, a in -1.0f64..1.0) {
        let q = CirclePotential::cosine(ScalarProfile::power(a, 0.9), 2);
        prop_assert_eq!(transport::phase(&q, t, k, 4).unwrap().coefficients.get(0), c(0.0, 0.0));
    }

    #[test]
    fn imaginary_potential_transport_is_isometric(k in -5.0f64..5.0, t in 0.1f64..10.0, a in 0.0f64..1.0) {
        let q = CirclePotential::new(vec![
            CircleMode { n: 1, profile: ScalarProfile::power(a, 1.1).scaled(c(0.0, 1.0)) },
            CircleMode { n: -1, profile: ScalarProfile::power(a, 1.1).scaled(c(0.0, 1.0)) },
        ]);
        let f0 = ModeCoefficients::from_fn(2, |n| c(1.0 / (1.0 + n.abs() as f64), 0.0));
        let u = transport::transport_solution(&q, &f0, t, k, 48).unwrap();
        prop_assert!((u.l2_norm() - f0.l2_norm()).abs() < 1e-8);
    }

    #[test]
    fn instructive_mean_is_j0(a in 0.0f64..3.0, phi in 0.0f64..6.28) {
        let lim = transport::instructive_limit(Complex64::from_polar(a, phi), 64).unwrap();
        prop_assert!((lim.get(0) - bessel_j0(a).unwrap()).norm() < 1e-8);
    }
}

#[test]
fn basis_index_is_a_bijection() {
    for i in 0..50 {
        assert_eq!(basis_index(basis_mode(i)), i);
    }
    assert_eq!([basis_mode(0), basis_mode(1), basis_mode(2), basis_mode(3)], [0, 1, -1, 2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn model_2x2_is_unitary_and_symmetric(seed in 0u64..1000, k in -6.0f64..6.0, t in 0.5f64..6.0) {
        let q = random_profile(&mut stream(seed, 0));
        let p = evolve(&model31(q), c(k, 0.0), &TimeGrid::new(vec![0.0, t / 2.0, t]).unwrap(), &EvolveOptions::default()).unwrap();
        prop_assert!(p.unitarity_defect < 1e-8);
        prop_assert!(remark1_defect(p.last(), k, t) < 1e-8);
    }

    #[test]
    fn upper_half_plane_contracts_monotonically(seed in 0u64..1000, k in -3.0f64..3.0, y in 0.1f64..3.0) {
        let q = random_profile(&mut stream(seed, 1));
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = evolve(&model31(q), c(k, y), &grid, &EvolveOptions::default()).unwrap();
        let norms: Vec<f64> = p.snapshots.iter().map(linalg::op_norm).collect();
        prop_assert!(norms.iter().all(|n| *n <= 1.0 + 1e-9));
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", norms);
    }

    #[test]
    fn circle_flow_conserves_norm(k in -3.0f64..3.0, a in 0.1f64..1.0) {
        let g = CircleGenerator::new(16, CirclePotential::cosine(ScalarProfile::power(a, 1.0), 1)).unwrap();
        let psi0 = ModeCoefficients::from_fn(1, |n| c(1.0, n as f64 * 0.5));
        let s = evolve_circle(&g, k, &TimeGrid::new(vec![0.0, 2.0, 4.0]).unwrap(), &psi0, &EvolveOptions::default()).unwrap();
        for st in &s.states {
            prop_assert!((st.l2_norm() - psi0.l2_norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn maximal_integral_is_bounded_by_the_l1_mass(k in -4.0f64..4.0, a in 0.1f64..2.0, w in 0.0f64..3.0) {
        let f = move |t: f64| Complex64::from_polar(a / (1.0 + t), w * t);
        let grid = TimeGrid::uniform(0.0, 5.0, 4);
        let m = maximal_partial_integral(f, k, &grid).unwrap();
        let coarse = maximal_partial_integral(f, k, &TimeGrid::uniform(0.0, 5.0, 1)).unwrap();
        prop_assert!(m <= a * 6.0f64.ln() + 1e-9);
        // The end point value is a lower bound.
        let total = (0..4000).map(|i| { let t = (i as f64 + 0.5) * 5.0 / 4000.0; f(t) * Complex64::from_polar(1.0, -k * t) * (5.0 / 4000.0) }).sum::<Complex64>().norm();
        prop_assert!(m >= total - 1e-6);
        prop_assert!((m - coarse).abs() <= 1e-5 * m.max(1e-12), "{} vs {}", m, coarse);
    }

    #[test]
    fn tails_decrease_in_n(k in -3.0f64..3.0) {
        let m = ShortRangeModel::new(ScalarProfile::power(1.0, 0.8), 0.8, 0.25, 16).unwrap();
        let r = m.evolve_masses(k, &TimeGrid::new(vec![0.0, 5.0, 10.0]).unwrap(), &EvolveOptions::default()).unwrap();
        prop_assert_eq!(r.tail(0, 1), 0.0);
        for i in 0..r.times.len() {
            prop_assert!((r.tail(i, 0) - 1.0).abs() < 1e-8);
            for n in 1..r.n_max {
                prop_assert!(r.tail(i, n + 1) <= r.tail(i, n));
            }
        }
    }
}

#[test]
fn uniform_k_grid_weights_cover_the_interval() {
    let g = KGrid::symmetric_with_step(5.0, 0.1);
    assert!((g.weights().iter().sum::<f64>() - 10.0).abs() < 1e-12);
    assert!(g.weights().iter().all(|w| *w > 0.0));
}
