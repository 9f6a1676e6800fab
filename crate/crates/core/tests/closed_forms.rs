use coupling_lab::circle::{evolve_circle, CircleGenerator, Symbol};
use coupling_lab::numerics::fourier::ModeCoefficients;
use coupling_lab::numerics::grid::{KGrid, TimeGrid};
use coupling_lab::numerics::special::{bessel_j0, first_j0_root};
use coupling_lab::potential::SparseHermitian;
use coupling_lab::profile::ScalarProfile;
use coupling_lab::propagators::minors::complex_k_expansion_check;
use coupling_lab::propagators::{EvolveOptions, Generator};
use coupling_lab::random;
use coupling_lab::spectral_limits::rotation_check;
use coupling_lab::transport::{self, instructive_j0_check, CircleMode, CirclePotential};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn j0_reference_values() {
    // Abramowitz and Stegun, table 9.1; the series is J0(2z).
    for (z, j) in [(0.0, 1.0), (1.0, 0.765_197_686_557_966_6), (2.0, 0.223_890_779_141_235_7), (4.0, -0.397_149_809_863_847_4)] {
        assert!((bessel_j0(z / 2.0).unwrap() - j).abs() < 1e-13, "J0({z})");
    }
    assert!((2.0 * first_j0_root() - 2.404_825_557_695_773).abs() < 1e-12);
}

#[test]
fn instructive_case_matches_j0_over_the_amplitude_table() {
    let r = instructive_j0_check(&[0.0, 0.5, 1.0, 1.2024, 2.0], 1e-6).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.lhs < 1e-10);
}

#[test]
fn instructive_limit_mean_is_j0_of_twice_the_amplitude() {
    for a in [0.3, 0.9, first_j0_root()] {
        let lim = transport::instructive_limit(c(0.0, a), 40).unwrap();
        assert!((lim.get(0).re - bessel_j0(a).unwrap()).abs() < 1e-12, "a = {a}");
    }
}

#[test]
fn weak_rotation_is_exact() {
    let r = rotation_check(0.1, 10.0, 1e-9, &EvolveOptions::default()).unwrap();
    assert!(r.passed() && r.lhs < 1e-12, "{r:?}");
}

#[test]
fn fifty_random_flows_conserve_structure() {
    let r = random::unitarity_suite_check(20240601, 50, 1e-8, &EvolveOptions::default()).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn two_hundred_adjugates_are_contractions() {
    let r = random::adjugate_contraction_check(8, 200, 4, 1e-10);
    assert!(r.passed(), "{r:?}");
    // The unitary draws attain the bound.
    assert!(r.lhs > 1.0 - 1e-12);
}

#[test]
fn inverse_y_coefficient_of_a_single_pair() {
    // V_12 = 0.2 on [0, 1], gap 1: the double sum is 0.04.
    let q = ScalarProfile::indicator(c(0.2, 0.0), 0.0, 1.0);
    let g = Generator::from_potential(vec![0.0, 1.0, 4.0], SparseHermitian::pair(3, 0, 1, q)).unwrap();
    let r = complex_k_expansion_check(&g, 1, 2.0, &[50.0, 100.0, 200.0], &EvolveOptions::default()).unwrap();
    assert!((r.rhs + 0.04).abs() < 1e-15);
    assert!(r.passed(), "{r:?}");
    let last = r.rows.last().unwrap();
    assert!((last.lhs / last.rhs - 1.0).abs() < 0.01, "{last:?}");
}

#[test]
fn plancherel_for_one_indicator_mode() {
    // ∫|φ̂_n|² dk over ℝ equals (2π/|n|)∫|q̂_n|²: for q̂_3 = a on [0, 2]
    // the H^{1/2} side is 2π|a|²·2.
    let a = c(0.3, -0.4);
    let q = CirclePotential::new(vec![CircleMode { n: 3, profile: ScalarProfile::indicator(a, 0.0, 2.0) }]);
    let r = transport::plancherel_modes_check(&q, 2.0, &KGrid::symmetric_with_step(60.0, 0.01)).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn linear_circle_flow_agrees_with_the_transport_formula() {
    // u_t = k u_x + q u with q = i·2a(t)cos θ is the circle flow with the
    // linear symbol and the real potential V = 2a(t)cos θ.
    let a = ScalarProfile::power(0.4, 1.2);
    let v = CirclePotential::cosine(a.clone(), 1);
    let q = CirclePotential::cosine(a.scaled(c(0.0, 1.0)), 1);
    let g = CircleGenerator::with_symbol(32, v, Symbol::Linear).unwrap();
    let psi0 = ModeCoefficients::delta(0, 0);
    let opts = EvolveOptions::default();
    for (k, t) in [(0.7, 3.0), (-1.3, 5.0), (2.0, 1.5)] {
        let direct = evolve_circle(&g, k, &TimeGrid::new(vec![0.0, t]).unwrap(), &psi0, &opts).unwrap();
        let moving = transport::transport_solution(&q, &psi0, t, k, 32).unwrap();
        let formula = transport::unshift(&moving, k, t);
        let d = direct.last().sub(&formula).l2_norm();
        assert!(d < 1e-8, "k = {k}, t = {t}: {d:e}");
    }
}
