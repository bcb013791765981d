use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use ltlab::bloch::*;
use ltlab::elliptic::{lame_potential_mean, LameModel};
use ltlab::lattice::{dual_vectors, Lattice, LatticeKind};
use proptest::prelude::*;

fn line() -> Lattice {
    Lattice::new(LatticeKind::Line)
}

fn lame_field(k: f64, n_c: usize) -> (LameModel, PotentialField) {
    let model = LameModel::new(k).unwrap();
    let v = PotentialField::from_fn(&line(), n_c, |y| model.rescaled_potential(y[0])).unwrap();
    (model, v)
}

#[test]
fn lame_band_edges_and_ratio() {
    let k = 0.7;
    let (model, v) = lame_field(k, 64);
    let l2 = model.period * model.period;
    let bands = lowest_bands(&v, 2, 64, None, false).unwrap();
    let (lo, hi) = bands.band_range(0);
    assert_abs_diff_eq!(lo, -l2, epsilon = 1e-5);
    assert_abs_diff_eq!(hi, -l2 * k * k, epsilon = 1e-5);
    // bottom of the second band is zero
    assert_abs_diff_eq!(bands.band_range(1).0, 0.0, epsilon = 1e-5);
    let ratio = riesz_mean_of(bands.energies(), 1, 1.5) / potential_lp_integral(&v, 2.0);
    assert_abs_diff_eq!(ratio, 3.0 / 16.0, epsilon = 1e-5);
}

#[test]
fn lame_integrated_dos_matches_state_counting() {
    // fraction of quasimomenta with ε₁(ξ) < ℓ² E, per unit length ℓ, against ∫ n
    let k = 0.5;
    let (model, v) = lame_field(k, 48);
    let n_b = 400;
    let bands = lowest_bands(&v, 1, n_b, None, false).unwrap();
    let l2 = model.period * model.period;
    for e in [-0.9, -0.6, -0.3] {
        let count = bands.energies().iter().filter(|row| row[0] < l2 * e).count();
        let numeric = count as f64 / n_b as f64 / model.period;
        let exact = ltlab::quad::integrate_endpoint_sqrt(|x| model.dos(x).unwrap_or(0.0), -1.0, e, 1e-12);
        assert!((numeric - exact).abs() < 2.0 / (n_b as f64 * model.period), "{e}: {numeric} vs {exact}");
    }
}

#[test]
fn lame_potential_integral_matches_closed_form() {
    for k in [0.3, 0.7] {
        let (model, v) = lame_field(k, 256);
        let ell = model.period;
        // ∫_0^1 (ℓ² V(ℓy))² dy = ℓ⁴ · mean(V²)
        let expect = ell.powi(4) * lame_potential_mean(k).unwrap();
        assert_abs_diff_eq!(potential_lp_integral(&v, 2.0), expect, epsilon = 1e-8 * expect.max(1.0));
    }
}

#[test]
fn constant_potential_semiclassical_limit() {
    let mu = 0.8 * PI * PI;
    let v = PotentialField::constant(&line(), 8, -mu).unwrap();
    let bands = lowest_bands(&v, 1, 512, None, false).unwrap();
    assert_abs_diff_eq!(riesz_mean(&bands, 1.5) / (mu * mu), 0.1875, epsilon = 1e-6);
}

#[test]
fn constant_shift_in_two_dimensions() {
    let l = Lattice::new(LatticeKind::Triangular);
    let mu = 7.0;
    let v = PotentialField::constant(&l, 12, -mu).unwrap();
    let bands = lowest_bands(&v, 3, 6, None, false).unwrap();
    let basis = bands.basis().clone();
    for (xi, row) in bands.quasimomenta().iter().zip(bands.energies()) {
        let mut free: Vec<f64> =
            basis.vectors().iter().map(|g| (g[0] + xi[0]).powi(2) + (g[1] + xi[1]).powi(2) - mu).collect();
        free.sort_by(f64::total_cmp);
        for (a, b) in row.iter().zip(&free) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}

#[test]
fn cutoff_refinement_is_variational() {
    let l = Lattice::new(LatticeKind::Square);
    let v = PotentialField::from_fn(&l, 24, |x| -20.0 * (-(x[0] - 0.5).powi(2) * 30.0 - (x[1] - 0.5).powi(2) * 30.0).exp())
        .unwrap();
    let vhat = potential_fourier(&v);
    let cutoffs = [(2.0 * PI * 3.0).powi(2), (2.0 * PI * 5.0).powi(2), (2.0 * PI * 8.0).powi(2), l.nyquist_cutoff(24)];
    for xi in [[0.0, 0.0], [1.3, -0.4], [PI, PI]] {
        let mut prev: Option<Vec<f64>> = None;
        for &ecut in &cutoffs {
            let basis = dual_vectors(&l, ecut);
            let vals = build_h_xi(&vhat, &basis, xi).unwrap().lowest_eigenvalues(4).unwrap();
            if let Some(p) = &prev {
                for (a, b) in vals.iter().zip(p) {
                    assert!(*a <= b + 1e-10, "{a} > {b}");
                }
            }
            prev = Some(vals);
        }
    }
}

#[test]
fn band_csv_shape() {
    let v = PotentialField::constant(&line(), 8, -1.0).unwrap();
    let csv = lowest_bands(&v, 2, 4, None, false).unwrap().to_csv();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "xi0,n,energy");
    assert_eq!(lines.len(), 1 + 4 * 2);
    assert_eq!(lines[1], "0.000000000000e+00,1,-1.000000000000e+00");
}

#[test]
fn potential_csv_and_json() {
    let l = Lattice::new(LatticeKind::Square);
    let v = PotentialField::from_fn(&l, 2, |x| x[0] - x[1]).unwrap();
    let csv = v.to_csv();
    assert!(csv.starts_with("f0,f1,x,y,value\n"));
    assert_eq!(csv.lines().count(), 5);
    let json = v.to_json();
    assert!(json.starts_with("{\"lattice\":\"square\",\"n_c\":2,\"values\":["));
    assert_eq!(PotentialField::from_json(&json).unwrap(), v);
}

#[test]
fn translation_leaves_bands_unchanged() {
    let l = Lattice::new(LatticeKind::Triangular);
    let v = PotentialField::from_fn(&l, 12, |x| -8.0 * (x[0].sin() * x[1].cos()).powi(2)).unwrap();
    let a = lowest_bands(&v, 2, 4, None, false).unwrap();
    let b = lowest_bands(&v.translated([3, -5]), 2, 4, None, false).unwrap();
    for (ra, rb) in a.energies().iter().zip(b.energies()) {
        for (x, y) in ra.iter().zip(rb) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }
}

fn random_field(kind: LatticeKind, n: usize, coeffs: &[f64]) -> PotentialField {
    let l = Lattice::new(kind);
    PotentialField::from_fn(&l, n, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * ((j as f64 + 1.0) * x[0] + (j as f64 * 0.7) * x[1] + j as f64).cos())
            .sum()
    })
    .unwrap()
}

fn kind_strategy() -> impl Strategy<Value = LatticeKind> {
    prop_oneof![Just(LatticeKind::Line), Just(LatticeKind::Square), Just(LatticeKind::Triangular)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembled_matrices_are_hermitian(
        kind in kind_strategy(),
        coeffs in prop::collection::vec(-10.0f64..10.0, 1..5),
        xi0 in -4.0f64..4.0,
        xi1 in -4.0f64..4.0,
    ) {
        let v = random_field(kind, 10, &coeffs);
        let l = v.lattice().clone();
        let basis = dual_vectors(&l, l.default_cutoff(10));
        let h = build_h_xi(&potential_fourier(&v), &basis, [xi0, if l.dim() == 1 { 0.0 } else { xi1 }]).unwrap();
        prop_assert!(h.hermitian_defect() < 1e-12);
    }

    #[test]
    fn time_reversal_symmetry(
        kind in kind_strategy(),
        coeffs in prop::collection::vec(-10.0f64..10.0, 1..5),
        xi0 in -4.0f64..4.0,
        xi1 in -4.0f64..4.0,
    ) {
        let v = random_field(kind, 10, &coeffs);
        let l = v.lattice().clone();
        let basis = dual_vectors(&l, l.default_cutoff(10));
        let vhat = potential_fourier(&v);
        let xi = [xi0, if l.dim() == 1 { 0.0 } else { xi1 }];
        let a = build_h_xi(&vhat, &basis, xi).unwrap().lowest_eigenvalues(3).unwrap();
        let b = build_h_xi(&vhat, &basis, [-xi[0], -xi[1]]).unwrap().lowest_eigenvalues(3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_shift_covariance(
        kind in kind_strategy(),
        coeffs in prop::collection::vec(-10.0f64..10.0, 1..4),
        s in -50.0f64..50.0,
    ) {
        let v = random_field(kind, 8, &coeffs);
        let a = lowest_bands(&v, 2, 4, None, false).unwrap();
        let b = lowest_bands(&v.shifted(-s), 2, 4, None, false).unwrap();
        for (ra, rb) in a.energies().iter().zip(b.energies()) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - s - y).abs() < 1e-10 * (1.0 + s.abs()));
            }
        }
    }

    #[test]
    fn bands_sorted_and_paired(coeffs in prop::collection::vec(-10.0f64..10.0, 1..4)) {
        let v = random_field(LatticeKind::Square, 8, &coeffs);
        let b = lowest_bands(&v, 3, 5, None, false).unwrap();
        for row in b.energies() {
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
        prop_assert!(riesz_mean(&b, 1.3) >= 0.0);
    }
}
