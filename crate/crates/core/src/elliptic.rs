//! Elliptic special functions and the one-gap Lamé potential
//! `V_k(x) = 2k² sn(x|k)² − 1 − k²`, which is exactly solvable and saturates the
//! one-dimensional Lieb–Thirring inequality at `γ = 3/2`.
//!
//! Two descriptions of the spectrum are provided. The Jacobi side gives the
//! density of states on `[-1, -k²] ∪ [0, ∞)` in closed form up to the mean
//! coefficient `c(k) = k² ⟨sn²⟩`, which is computed by quadrature. The
//! Weierstrass side uses the roots `e1 > e2 > e3` of the cubic attached to the
//! shifted potential `W = V_k + (1 + k²)/3`, with the constant `η₁/ω₁` fixed by
//! requiring one state per period below the gap.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{LtError, Result};
use crate::quad;

/// Largest modulus accepted; `K(k)` diverges logarithmically at 1.
pub const MAX_MODULUS: f64 = 1.0 - 1e-10;

const QUAD_TOL: f64 = 1e-14;

fn check_modulus(k: f64) -> Result<f64> {
    if !(0.0..=MAX_MODULUS).contains(&k) {
        return Err(LtError::ModulusDomain(k));
    }
    Ok(k)
}

fn complementary(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).sqrt()
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind `K(k) = π / (2 agm(1, k'))`.
pub fn complete_elliptic_k(k: f64) -> Result<f64> {
    let k = check_modulus(k)?;
    Ok(FRAC_PI_2 / agm(1.0, complementary(k)))
}

/// Jacobi elliptic sine by the descending Landen (AGM) scheme.
pub fn jacobi_sn(x: f64, k: f64) -> Result<f64> {
    let k = check_modulus(k)?;
    if k == 0.0 {
        return Ok(x.sin());
    }
    let quarter = complete_elliptic_k(k)?;
    let period = 4.0 * quarter;
    let u = x - period * (x / period).round();

    let mut a = vec![1.0];
    let mut c = vec![k];
    let mut b = complementary(k);
    while c.last().unwrap().abs() > 1e-16 && a.len() < 40 {
        let an = *a.last().unwrap();
        c.push(0.5 * (an - b));
        a.push(0.5 * (an + b));
        b = (an * b).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    Ok(phi.sin())
}

/// The Lamé potential `2k² sn(x|k)² − 1 − k²`, of period `2K(k)`.
pub fn lame_potential(x: f64, k: f64) -> Result<f64> {
    let sn = jacobi_sn(x, k)?;
    Ok(2.0 * k * k * sn * sn - 1.0 - k * k)
}

/// `c(k) = k²/(2K) ∫_{-K}^{K} sn(x|k)² dx`, by adaptive quadrature over a quarter period.
pub fn lame_c(k: f64) -> Result<f64> {
    let k = check_modulus(k)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let quarter = complete_elliptic_k(k)?;
    let integral = quad::integrate(
        |x| {
            let s = jacobi_sn(x, k).unwrap_or(f64::NAN);
            s * s
        },
        0.0,
        quarter,
        QUAD_TOL,
    );
    Ok(k * k * integral / quarter)
}

/// Density of states of `-d²/dx² + V_k` per unit length.
///
/// Vanishes below `-1` and on the gap `(-k², 0)`; band edges are singular and
/// rejected.
pub fn lame_dos(energy: f64, k: f64) -> Result<f64> {
    let c = lame_c(k)?;
    lame_dos_with_c(energy, k, c)
}

fn lame_dos_with_c(energy: f64, k: f64, c: f64) -> Result<f64> {
    let k2 = k * k;
    for edge in [-1.0, -k2, 0.0] {
        if energy == edge {
            return Err(LtError::BandEdge { energy, edge });
        }
    }
    let denom = |e: f64| 2.0 * PI * ((e + 1.0) * (e + k2) * e).abs().sqrt();
    if energy > -1.0 && energy < -k2 {
        Ok(-(energy + c) / denom(energy))
    } else if energy > 0.0 {
        Ok((energy + c) / denom(energy))
    } else {
        Ok(0.0)
    }
}

/// Closed-form Riesz mean `VTr(-Δ + V_k)_-^{3/2} = (3 + 2k² + 3k⁴)/16 − c(1 + k²)/4`.
pub fn lame_riesz_mean(k: f64) -> Result<f64> {
    let c = lame_c(k)?;
    let k2 = k * k;
    Ok((3.0 + 2.0 * k2 + 3.0 * k2 * k2) / 16.0 - 0.25 * c * (1.0 + k2))
}

/// The same Riesz mean obtained by integrating `n(E) |E|^{3/2}` over the first band.
pub fn lame_riesz_mean_from_dos(k: f64) -> Result<f64> {
    let c = lame_c(k)?;
    let k2 = k * k;
    if k == 0.0 {
        return Ok(3.0 / 16.0);
    }
    // n(E)|E|^{3/2} times sqrt((E+1)(-k²-E)) reduces to -(E + c)|E| / 2π
    Ok(quad::integrate_arcsine_weight(|e| -(e + c) * (-e) / (2.0 * PI), -1.0, -k2, QUAD_TOL))
}

/// `∫_{-1}^{-k²} n(E) dE`, which must equal `1/(2K(k))`.
pub fn lame_band_filling(k: f64) -> Result<f64> {
    let c = lame_c(k)?;
    let k2 = k * k;
    Ok(quad::integrate_arcsine_weight(
        |e| -(e + c) / (2.0 * PI * (-e).sqrt()),
        -1.0,
        -k2,
        QUAD_TOL,
    ))
}

/// Closed-form mean of `V_k²` over one period:
/// `(4k²/3)(2(1+k²)c/k² − 1) − 4(1+k²)c + (1+k²)²`.
pub fn lame_potential_mean(k: f64) -> Result<f64> {
    let c = lame_c(k)?;
    let k2 = k * k;
    let s = 1.0 + k2;
    if k == 0.0 {
        return Ok(1.0);
    }
    Ok(4.0 * k2 / 3.0 * (2.0 * s * c / k2 - 1.0) - 4.0 * s * c + s * s)
}

/// Direct quadrature of `(1/ℓ) ∫ V_k²` over one period.
pub fn lame_potential_mean_quadrature(k: f64) -> Result<f64> {
    let k = check_modulus(k)?;
    let quarter = complete_elliptic_k(k)?;
    let integral = quad::integrate(
        |x| {
            let v = lame_potential(x, k).unwrap_or(f64::NAN);
            v * v
        },
        0.0,
        quarter,
        QUAD_TOL,
    );
    Ok(integral / quarter)
}

/// Closed forms of `∫_{k²}^1 t^m dt / sqrt((1-t)(t-k²))` for `m = 1, 2`.
pub fn beta_integrals(k: f64) -> Result<(f64, f64)> {
    let k = check_modulus(k)?;
    let k2 = k * k;
    Ok((FRAC_PI_2 * (1.0 + k2), PI / 8.0 * (3.0 + 2.0 * k2 + 3.0 * k2 * k2)))
}

/// The two integrals of [`beta_integrals`] evaluated numerically.
pub fn beta_integrals_quadrature(k: f64) -> Result<(f64, f64)> {
    let k = check_modulus(k)?;
    let k2 = k * k;
    let first = quad::integrate_arcsine_weight(|t| t, k2, 1.0, QUAD_TOL);
    let second = quad::integrate_arcsine_weight(|t| t * t, k2, 1.0, QUAD_TOL);
    Ok((first, second))
}

/// Everything the one-gap family exposes for a given modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameModel {
    pub k: f64,
    /// `K(k)`
    pub quarter_period: f64,
    /// Minimal period `ℓ = 2K(k)`.
    pub period: f64,
    pub c: f64,
    /// `(-1, -k², 0)`: bottom and top of the first band, bottom of the second.
    pub band_edges: [f64; 3],
}

impl LameModel {
    pub fn new(k: f64) -> Result<Self> {
        let quarter_period = complete_elliptic_k(k)?;
        Ok(LameModel {
            k,
            quarter_period,
            period: 2.0 * quarter_period,
            c: lame_c(k)?,
            band_edges: [-1.0, -k * k, 0.0],
        })
    }

    pub fn potential(&self, x: f64) -> f64 {
        lame_potential(x, self.k).expect("modulus validated at construction")
    }

    pub fn dos(&self, energy: f64) -> Result<f64> {
        lame_dos_with_c(energy, self.k, self.c)
    }

    /// `ℓ² V_k(ℓ y)`: the potential mapped onto a cell of length one.
    pub fn rescaled_potential(&self, y: f64) -> f64 {
        self.period * self.period * self.potential(self.period * y)
    }
}

/// One row of the Lamé validation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameReport {
    pub k: f64,
    pub period: f64,
    pub c: f64,
    pub band_edges: [f64; 3],
    pub riesz_mean: f64,
    pub potential_mean: f64,
    pub ratio: f64,
    /// `ratio − 3/16`
    pub deviation: f64,
}

pub fn lame_report(k: f64) -> Result<LameReport> {
    let model = LameModel::new(k)?;
    let riesz_mean = lame_riesz_mean(k)?;
    let potential_mean = lame_potential_mean(k)?;
    let ratio = riesz_mean / potential_mean;
    Ok(LameReport {
        k,
        period: model.period,
        c: model.c,
        band_edges: model.band_edges,
        riesz_mean,
        potential_mean,
        ratio,
        deviation: ratio - 3.0 / 16.0,
    })
}

/// Real roots of the Weierstrass cubic for the shifted Lamé potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassTriple {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// Real period `ω₁ = 2K(k)`.
    pub omega1: f64,
    pub eta1_over_omega1: f64,
}

pub fn weierstrass_triple(k: f64) -> Result<WeierstrassTriple> {
    let k = check_modulus(k)?;
    let k2 = k * k;
    let shift = (1.0 + k2) / 3.0;
    let (e1, e2, e3) = (1.0 - shift, k2 - shift, -shift);
    let omega1 = 2.0 * complete_elliptic_k(k)?;
    // One state per period below the gap:
    // (2π)^{-1} ∫_{e2}^{e1} (w + η) dw / sqrt((e1-w)(w-e2)(w-e3)) = 1/ω₁
    let a = quad::integrate_arcsine_weight(|w| 1.0 / (w - e3).sqrt(), e2, e1, QUAD_TOL);
    let b = quad::integrate_arcsine_weight(|w| w / (w - e3).sqrt(), e2, e1, QUAD_TOL);
    let eta1_over_omega1 = (2.0 * PI / omega1 - b) / a;
    Ok(WeierstrassTriple { e1, e2, e3, omega1, eta1_over_omega1 })
}

impl WeierstrassTriple {
    /// Density of states of `-d²/dx² + W`.
    pub fn dos(&self, energy: f64) -> Result<f64> {
        let WeierstrassTriple { e1, e2, e3, eta1_over_omega1: eta, .. } = *self;
        for edge in [-e1, -e2, -e3] {
            if energy == edge {
                return Err(LtError::BandEdge { energy, edge });
            }
        }
        if energy > -e1 && energy < -e2 {
            let root = ((e1 + energy) * (-energy - e2) * (-energy - e3)).sqrt();
            Ok((-energy + eta) / (2.0 * PI * root))
        } else if energy > -e3 {
            let root = ((e1 + energy) * (e2 + energy) * (e3 + energy)).sqrt();
            Ok((energy - eta) / (2.0 * PI * root))
        } else {
            Ok(0.0)
        }
    }

    /// Integrated density of states `N_W(E)`; constant `1/ω₁` on the gap.
    pub fn integrated_dos(&self, energy: f64) -> f64 {
        let WeierstrassTriple { e1, e2, e3, omega1, eta1_over_omega1: eta } = *self;
        if energy <= -e1 {
            0.0
        } else if energy <= -e2 {
            // w = -E + span·sin²θ; distances to the roots kept explicit so the
            // integrand stays finite at the band edge
            let lo = -energy;
            let span = e1 - lo;
            quad::integrate(
                |theta: f64| {
                    let s = theta.sin();
                    let s2 = span * s * s;
                    let w = lo + s2;
                    2.0 * (w + eta) * s * span.sqrt() / (((lo - e2) + s2) * ((lo - e3) + s2)).sqrt()
                },
                0.0,
                FRAC_PI_2,
                QUAD_TOL,
            ) / (2.0 * PI)
        } else if energy <= -e3 {
            1.0 / omega1
        } else {
            // ∫_{-e3}^{E} n_W, so that N_W' = n_W on the upper band; w = -E + span·sin²θ
            let lo = -energy;
            let span = e3 - lo;
            1.0 / omega1
                + quad::integrate(
                    |theta: f64| {
                        let (s, c) = theta.sin_cos();
                        let c2 = span * c * c;
                        let w = lo + span * s * s;
                        2.0 * (-w - eta) * s * span.sqrt() / (((e2 - e3) + c2) * ((e1 - e3) + c2)).sqrt()
                    },
                    0.0,
                    FRAC_PI_2,
                    QUAD_TOL,
                ) / (2.0 * PI)
        }
    }
}

pub fn weierstrass_dos(energy: f64, k: f64) -> Result<f64> {
    weierstrass_triple(k)?.dos(energy)
}

pub fn weierstrass_integrated_dos(energy: f64, k: f64) -> Result<f64> {
    Ok(weierstrass_triple(k)?.integrated_dos(energy))
}
