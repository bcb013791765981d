//! Adaptive Gauss–Kronrod (7/15) quadrature.

use std::f64::consts::FRAC_PI_2;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
    let (val, err) = whole;
    if err <= tol || depth == 0 || (b - a).abs() < 1e-15 * (a.abs() + b.abs()) {
        return val;
    }
    let m = 0.5 * (a + b);
    let left = kronrod(f, a, m);
    let right = kronrod(f, m, b);
    // tolerance is not halved: the Kronrod error estimate is very pessimistic
    adapt(f, a, m, left, tol, depth - 1) + adapt(f, m, b, right, tol, depth - 1)
}

/// Integrates `f` over `[a, b]` to roughly absolute accuracy `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = kronrod(&f, a, b);
    adapt(&f, a, b, whole, tol, 50)
}

/// Integrates `f` over `[a, b]` after the substitution `t = a + (b - a) sin²θ`,
/// which absorbs inverse-square-root singularities at either endpoint.
///
/// `f` receives `t` together with `sqrt((t - a)(b - t))`, the factor that the
/// Jacobian cancels exactly; the integrand passed in should be `g(t)` where
/// the original integral is `∫ g(t) dt`.
pub fn integrate_endpoint_sqrt<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, tol: f64) -> f64 {
    let span = b - a;
    integrate(
        |theta: f64| {
            let (s, c) = theta.sin_cos();
            let t = a + span * s * s;
            let jac = 2.0 * span * s * c;
            if jac == 0.0 {
                0.0
            } else {
                g(t) * jac
            }
        },
        0.0,
        FRAC_PI_2,
        tol,
    )
}

/// `∫_a^b h(t) / sqrt((t - a)(b - t)) dt`, with the singular weight removed
/// analytically: the integral becomes `2 ∫_0^{π/2} h(a + (b-a) sin²θ) dθ`.
pub fn integrate_arcsine_weight<F: Fn(f64) -> f64>(h: F, a: f64, b: f64, tol: f64) -> f64 {
    let span = b - a;
    2.0 * integrate(
        |theta: f64| {
            let s = theta.sin();
            h(a + span * s * s)
        },
        0.0,
        FRAC_PI_2,
        0.5 * tol,
    )
}
