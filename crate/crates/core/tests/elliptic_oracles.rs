use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use ltlab::elliptic::*;
use proptest::prelude::*;

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::integrate(f, a, b, 1e-13).integral
}

/// `∫_a^b h(t) / sqrt((t − a)(b − t)) dt`, split at the midpoint with
/// `t = a + s²` and `t = b − s²` on the two halves.
fn de_two_sided(h: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let r = half.sqrt();
    let left = de(|s| 2.0 * h(a + s * s) / (b - a - s * s).sqrt(), 0.0, r);
    let right = de(|s| 2.0 * h(b - s * s) / (b - a - s * s).sqrt(), 0.0, r);
    left + right
}

// (k, K(k), c(k) = 1 − E(k)/K(k)) at 30 digits
const REFERENCE: [(f64, f64, f64); 4] = [
    (0.3, 1.608_048_619_930_512_8, 0.045_530_436_144_665_540),
    (0.5, 1.685_750_354_812_596_0, 0.129_490_196_961_836_54),
    (0.7, 1.845_693_998_374_723_5, 0.265_500_599_359_525_43),
    (0.9, 2.280_549_138_422_770_2, 0.486_221_527_508_080_42),
];

#[test]
fn complete_integral_reference_values() {
    for (k, big_k, _) in REFERENCE {
        assert_abs_diff_eq!(complete_elliptic_k(k).unwrap(), big_k, epsilon = 1e-14 * big_k);
    }
    assert_abs_diff_eq!(complete_elliptic_k(0.0).unwrap(), PI / 2.0, epsilon = 1e-15);
}

#[test]
fn mean_coefficient_matches_elliptic_e_ratio() {
    for (k, _, c) in REFERENCE {
        assert_abs_diff_eq!(lame_c(k).unwrap(), c, epsilon = 1e-12);
    }
}

#[test]
fn mean_coefficient_matches_direct_quadrature() {
    for k in [0.2, 0.6, 0.95] {
        let big_k = complete_elliptic_k(k).unwrap();
        let direct = k * k / big_k * de(|x| jacobi_sn(x, k).unwrap().powi(2), 0.0, big_k);
        assert_abs_diff_eq!(lame_c(k).unwrap(), direct, epsilon = 1e-12);
    }
}

#[test]
fn periods_of_figure_potentials() {
    // the quoted periods belong to the parameter m = k², i.e. modulus √m
    for (m, period) in [(0.2, 3.32), (0.7, 4.15), (0.995, 8.08)] {
        let ell = LameModel::new(f64::sqrt(m)).unwrap().period;
        assert!((ell - period).abs() < 0.005, "m = {m}: {ell}");
    }
}

#[test]
fn equality_at_three_halves() {
    for i in 1..=9 {
        let k = 0.1 * i as f64;
        let ratio = lame_riesz_mean(k).unwrap() / lame_potential_mean(k).unwrap();
        assert_abs_diff_eq!(ratio, 3.0 / 16.0, epsilon = 1e-10);
        let ratio_dos = lame_riesz_mean_from_dos(k).unwrap() / lame_potential_mean(k).unwrap();
        assert_abs_diff_eq!(ratio_dos, 3.0 / 16.0, epsilon = 1e-8);
    }
}

#[test]
fn riesz_mean_against_independent_dos_quadrature() {
    for k in [0.3, 0.5, 0.7, 0.9] {
        let k2 = k * k;
        let c = lame_c(k).unwrap();
        // n(E) on the lower band without its factor 1/sqrt((E+1)(−k²−E))
        let n_regular = |e: f64| -(e + c) / (2.0 * PI * (-e).sqrt());
        let riesz = de_two_sided(|e| n_regular(e) * (-e).powf(1.5), -1.0, -k2);
        assert_abs_diff_eq!(lame_riesz_mean(k).unwrap(), riesz, epsilon = 1e-8);
        let filling = de_two_sided(n_regular, -1.0, -k2);
        let big_k = complete_elliptic_k(k).unwrap();
        assert_abs_diff_eq!(filling, 1.0 / (2.0 * big_k), epsilon = 1e-8);
        assert_abs_diff_eq!(lame_band_filling(k).unwrap(), 1.0 / (2.0 * big_k), epsilon = 1e-10);
    }
}

#[test]
fn riesz_mean_reference_values() {
    for (k, value) in [(0.3, 0.187_861_706_150_578_64), (0.7, 0.194_869_776_738_576_78)] {
        assert_abs_diff_eq!(lame_riesz_mean(k).unwrap(), value, epsilon = 1e-12);
    }
}

#[test]
fn potential_mean_against_direct_quadrature() {
    for k in [0.2, 0.5, 0.9] {
        let ell = 2.0 * complete_elliptic_k(k).unwrap();
        let direct = de(|x| lame_potential(x, k).unwrap().powi(2), 0.0, ell) / ell;
        assert_abs_diff_eq!(lame_potential_mean(k).unwrap(), direct, epsilon = 1e-11);
        assert_abs_diff_eq!(lame_potential_mean_quadrature(k).unwrap(), direct, epsilon = 1e-11);
        assert_abs_diff_eq!(lame_potential_mean(k).unwrap(), 16.0 / 3.0 * lame_riesz_mean(k).unwrap(), epsilon = 1e-10);
    }
}

#[test]
fn beta_integrals_against_quadrature() {
    for k in [0.3, 0.6, 0.9] {
        let k2: f64 = k * k;
        let first = de_two_sided(|t| t, k2, 1.0);
        let second = de_two_sided(|t| t * t, k2, 1.0);
        let (a, b) = beta_integrals(k).unwrap();
        assert_abs_diff_eq!(a, first, epsilon = 1e-10);
        assert_abs_diff_eq!(b, second, epsilon = 1e-10);
        let (qa, qb) = beta_integrals_quadrature(k).unwrap();
        assert_abs_diff_eq!(qa, a, epsilon = 1e-12);
        assert_abs_diff_eq!(qb, b, epsilon = 1e-12);
    }
}

#[test]
fn lame_limits() {
    // k → 0: V_k → −1 uniformly
    let k = 1e-4;
    for i in 0..50 {
        let x = 0.1 * i as f64;
        assert!((lame_potential(x, k).unwrap() + 1.0).abs() < 3e-8);
    }
    // k → 1: V_k → −2 sech²
    let k = MAX_MODULUS;
    for x in [0.0f64, 0.3, 1.0, 2.5] {
        assert_abs_diff_eq!(lame_potential(x, k).unwrap(), -2.0 / x.cosh().powi(2), epsilon = 1e-8);
    }
}

#[test]
fn weierstrass_eta_matches_shift() {
    for (k, _, c) in REFERENCE {
        let w = weierstrass_triple(k).unwrap();
        assert_abs_diff_eq!(w.eta1_over_omega1, (1.0 + k * k) / 3.0 - c, epsilon = 1e-10);
    }
}

#[test]
fn weierstrass_integrated_dos_shape() {
    let k = 0.6;
    let w = weierstrass_triple(k).unwrap();
    let gap_value = 1.0 / w.omega1;
    assert_eq!(w.integrated_dos(-w.e1 - 0.1), 0.0);
    assert_eq!(w.integrated_dos(-w.e1), 0.0);
    assert_abs_diff_eq!(w.integrated_dos(-w.e2), gap_value, epsilon = 1e-10);
    assert_abs_diff_eq!(w.integrated_dos(0.5 * (-w.e2 - w.e3)), gap_value, epsilon = 1e-15);
    // continuous at both gap edges
    assert_abs_diff_eq!(w.integrated_dos(-w.e2 - 1e-9), gap_value, epsilon = 1e-5);
    assert_abs_diff_eq!(w.integrated_dos(-w.e3 + 1e-9), gap_value, epsilon = 1e-5);

    let mut prev = 0.0;
    let mut e = -w.e1 + 1e-3;
    while e < 4.0 {
        let n = w.integrated_dos(e);
        assert!(n >= prev - 1e-13, "N_W decreases at {e}");
        prev = n;
        e += 0.01;
    }
    // N_W' = n_W away from the edges
    for e in [-0.55, -0.4, 0.3, 1.0, 3.0] {
        if (e + w.e1) * (e + w.e2) < 0.0 || e > -w.e3 {
            let h = 1e-5;
            let fd = (w.integrated_dos(e + h) - w.integrated_dos(e - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, w.dos(e).unwrap(), epsilon = 1e-7);
        }
    }
}

proptest! {
    #[test]
    fn weierstrass_dos_is_shifted_lame_dos(k in 0.05f64..0.95, t in 0.001f64..0.999, upper in any::<bool>()) {
        let w = weierstrass_triple(k).unwrap();
        let s = (1.0 + k * k) / 3.0;
        let e = if upper { -w.e3 + 5.0 * t } else { -w.e1 + t * (w.e1 - w.e2) };
        let lhs = w.dos(e).unwrap();
        let rhs = lame_dos(e - s, k).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn weierstrass_roots_invariants(k in 0.0f64..0.999) {
        let w = weierstrass_triple(k).unwrap();
        prop_assert!(w.e1 > w.e2 && w.e2 > w.e3 || k == 0.0);
        prop_assert!((w.e1 + w.e2 + w.e3).abs() < 1e-15);
        prop_assert!((w.e1 - w.e3 - 1.0).abs() < 1e-15);
        prop_assert!((w.e2 - w.e3 - k * k).abs() < 1e-15);
    }

    #[test]
    fn sn_antiperiod(x in -20.0f64..20.0, k in 0.0f64..0.99) {
        let big_k = complete_elliptic_k(k).unwrap();
        let a = jacobi_sn(x + 2.0 * big_k, k).unwrap();
        let b = jacobi_sn(x, k).unwrap();
        prop_assert!((a + b).abs() < 1e-12);
        prop_assert!(b.abs() <= 1.0);
    }

    #[test]
    fn lame_potential_range_and_symmetry(x in -10.0f64..10.0, k in 0.0f64..0.99) {
        let v = lame_potential(x, k).unwrap();
        let k2 = k * k;
        prop_assert!(v >= -1.0 - k2 - 1e-14 && v <= k2 - 1.0 + 1e-14);
        prop_assert!((v - lame_potential(-x, k).unwrap()).abs() < 1e-13);
        let ell = 2.0 * complete_elliptic_k(k).unwrap();
        prop_assert!((v - lame_potential(x + ell, k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lame_dos_vanishes_in_gap(k in 0.05f64..0.95, t in 0.001f64..0.999) {
        let e = -k * k * t;
        prop_assert_eq!(lame_dos(e, k).unwrap(), 0.0);
    }

    #[test]
    fn model_invariants(k in 0.01f64..0.99) {
        let m = LameModel::new(k).unwrap();
        prop_assert!(m.period > PI);
        prop_assert!(m.c > 0.0 && m.c < k * k);
        prop_assert!(m.band_edges[0] < m.band_edges[1] && m.band_edges[1] < m.band_edges[2]);
    }
}
