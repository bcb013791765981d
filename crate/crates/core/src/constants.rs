//! Reference constants: the semiclassical constant, the one-bound-state
//! constant from the radial NLS ground state, and their crossing exponent.
//!
//! With `p = γ + d/2` and `θ = 2/(p − 1)`, the positive radial solution of
//! `−u″ − (d−1)/r u′ + u = u^{1+θ}` makes `V = −u^θ` stationary for
//! `|λ₁(V)|^γ / ∫V_−^p`, with `λ₁ = −1` and eigenfunction `u`. The constant is
//! then `L⁽¹⁾ = 1 / ∫ u^{θp}`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{LtError, Result};

/// Radial step of the shooting integrator.
pub const RADIAL_STEP: f64 = 1e-3;
const RADIAL_MAX: f64 = 40.0;
/// Grid points near the origin filled from the Taylor series in two dimensions.
const SERIES_POINTS: usize = 10;
/// RK4 substeps per grid step for `r < 1` in two dimensions.
const NEAR_ORIGIN_SUBSTEPS: usize = 16;

/// A validated `(γ, d)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaExponent {
    gamma: f64,
    dim: usize,
}

impl GammaExponent {
    pub fn new(gamma: f64, dim: usize) -> Result<Self> {
        let bad = |reason| Err(LtError::InvalidExponent { gamma, dim, reason });
        if !gamma.is_finite() {
            return bad("gamma must be finite");
        }
        match dim {
            1 if gamma < 0.5 => bad("gamma >= 1/2 required in one dimension"),
            2 if gamma <= 0.0 => bad("gamma > 0 required in two dimensions"),
            1 | 2 => Ok(GammaExponent { gamma, dim }),
            _ => bad("dimension must be 1 or 2"),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `γ + d/2`.
    pub fn p(&self) -> f64 {
        self.gamma + 0.5 * self.dim as f64
    }

    /// `2/(γ + d/2 − 1)`; infinite at `p = 1`.
    pub fn theta(&self) -> f64 {
        2.0 / (self.p() - 1.0)
    }
}

/// `Γ(γ+1) / (2^d π^{d/2} Γ(γ+d/2+1))`.
pub fn semiclassical_constant(gamma: f64, dim: usize) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() || dim == 0 {
        return Err(LtError::InvalidExponent { gamma, dim, reason: "need gamma >= 0 and d >= 1" });
    }
    let d = dim as f64;
    Ok(gamma_fn(gamma + 1.0) / (2f64.powf(d) * PI.powf(0.5 * d) * gamma_fn(gamma + 0.5 * d + 1.0)))
}

/// Radial ground state of `−Δu + u = u^{1+θ}` sampled at `r_i = i·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsGroundState {
    exponent: GammaExponent,
    theta: f64,
    step: f64,
    u: Vec<f64>,
    du: Vec<f64>,
    nonlinear_integral: f64,
    mass: f64,
}

impl NlsGroundState {
    pub fn exponent(&self) -> GammaExponent {
        self.exponent
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn peak(&self) -> f64 {
        self.u[0]
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.u.len()).map(|i| i as f64 * self.step).collect()
    }

    pub fn profile(&self) -> &[f64] {
        &self.u
    }

    pub fn derivative(&self) -> &[f64] {
        &self.du
    }

    /// `∫_{R^d} u^{θ(γ+d/2)}`.
    pub fn nonlinear_integral(&self) -> f64 {
        self.nonlinear_integral
    }

    /// `∫_{R^d} u²`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn one_bound_state_constant(&self) -> f64 {
        1.0 / self.nonlinear_integral
    }

    /// `V(r) = −u(r)^θ` at grid radius index `i`.
    pub fn potential_at(&self, i: usize) -> f64 {
        -self.u[i].max(0.0).powf(self.theta)
    }

    /// Sup-norm of the ODE residual by fourth-order central differences,
    /// over interior points with `r ≤ r_max`.
    pub fn residual(&self, r_max: f64) -> f64 {
        let h = self.step;
        let d = self.exponent.dim as f64;
        let last = ((r_max / h) as usize).min(self.u.len().saturating_sub(3));
        let mut worst = 0.0f64;
        for i in 2..last {
            let u = &self.u;
            let r = i as f64 * h;
            let d2 = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h * h);
            let d1 = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
            let res = -d2 - (d - 1.0) / r * d1 + u[i] - u[i].powf(1.0 + self.theta);
            worst = worst.max(res.abs());
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Over,
    Under,
}

struct Trajectory {
    u: Vec<f64>,
    du: Vec<f64>,
    shot: Option<Shot>,
}

fn rk4_step(f: &impl Fn(f64, f64, f64) -> (f64, f64), r: f64, u: f64, v: f64, h: f64) -> (f64, f64) {
    let (k1u, k1v) = f(r, u, v);
    let (k2u, k2v) = f(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
    let (k3u, k3v) = f(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
    let (k4u, k4v) = f(r + h, u + h * k3u, v + h * k3v);
    (
        u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

fn shoot_nls(a: f64, theta: f64, dim: usize, h: f64) -> Trajectory {
    let d = dim as f64;
    let rhs = |r: f64, u: f64, v: f64| {
        let drift = if dim == 1 { 0.0 } else { (d - 1.0) / r * v };
        (v, -drift + u - u.abs().powf(theta) * u)
    };
    let steps = (RADIAL_MAX / h) as usize;
    let mut u = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    u.push(a);
    du.push(0.0);
    let (mut y, mut v, start) = if dim == 1 {
        (a, 0.0, 0)
    } else {
        // Taylor series u = a + c r² + e r⁴ + g r⁶ on the first points, where the
        // 1/r drift spoils the integrator's local error
        let f1 = 1.0 - (1.0 + theta) * a.powf(theta);
        let f2 = -(1.0 + theta) * theta * a.powf(theta - 1.0);
        let c = (a - a.powf(1.0 + theta)) / (2.0 * d);
        let e = f1 * c / (4.0 * (2.0 + d));
        let g = (f1 * e + 0.5 * f2 * c * c) / (6.0 * (4.0 + d));
        let start = SERIES_POINTS;
        for i in 1..=start {
            let r = i as f64 * h;
            let r2 = r * r;
            u.push(a + r2 * (c + r2 * (e + r2 * g)));
            du.push(r * (2.0 * c + r2 * (4.0 * e + r2 * 6.0 * g)));
        }
        (u[start], du[start], start)
    };
    for i in start..steps {
        let r = i as f64 * h;
        if dim > 1 && r < 1.0 {
            let sub = h / NEAR_ORIGIN_SUBSTEPS as f64;
            for j in 0..NEAR_ORIGIN_SUBSTEPS {
                (y, v) = rk4_step(&rhs, r + j as f64 * sub, y, v, sub);
            }
        } else {
            (y, v) = rk4_step(&rhs, r, y, v, h);
        }
        u.push(y);
        du.push(v);
        if y < 0.0 {
            return Trajectory { u, du, shot: Some(Shot::Over) };
        }
        if v > 0.0 {
            return Trajectory { u, du, shot: Some(Shot::Under) };
        }
    }
    Trajectory { u, du, shot: None }
}

/// Simpson's rule on a uniform grid, trapezoid on a leftover last interval.
fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let m = if (n - 1) % 2 == 0 { n } else { n - 1 };
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 < m {
        s += f[i] + 4.0 * f[i + 1] + f[i + 2];
        i += 2;
    }
    s *= h / 3.0;
    if m < n {
        s += 0.5 * h * (f[n - 2] + f[n - 1]);
    }
    s
}

/// `∫_{R^d} g(|x|) dx` for a radial profile sampled at `r_i = i·h`.
fn radial_integral(g: &[f64], h: f64, dim: usize) -> f64 {
    if dim == 1 {
        2.0 * simpson(g, h)
    } else {
        let w: Vec<f64> = g.iter().enumerate().map(|(i, v)| i as f64 * h * v).collect();
        2.0 * PI * simpson(&w, h)
    }
}

/// Positive radial solution by bisection on `u(0)`.
pub fn nls_ground_state(gamma: f64, dim: usize) -> Result<NlsGroundState> {
    let exponent = GammaExponent::new(gamma, dim)?;
    if exponent.p() <= 1.0 {
        return Err(LtError::InvalidExponent { gamma, dim, reason: "need gamma + d/2 > 1 for the nonlinearity" });
    }
    let theta = exponent.theta();
    let h = RADIAL_STEP;

    // u(0) > 1 for the ground state; any a <= 1 undershoots
    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut expansions = 0;
    while shoot_nls(hi, theta, dim, h).shot != Some(Shot::Over) {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(LtError::Shooting(format!("no overshoot found for gamma = {gamma}, d = {dim}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot_nls(mid, theta, dim, h).shot {
            Some(Shot::Over) => hi = mid,
            Some(Shot::Under) => lo = mid,
            None => {
                lo = mid;
                break;
            }
        }
    }
    if (hi - lo) > 1e-12 * hi {
        return Err(LtError::Shooting(format!("bisection on u(0) stalled at [{lo}, {hi}]")));
    }

    let traj = shoot_nls(lo, theta, dim, h);
    // drop the upturn: keep up to the minimum of u
    let end = traj
        .u
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .unwrap_or(traj.u.len());
    let u: Vec<f64> = traj.u[..end].iter().map(|x| x.max(0.0)).collect();
    let du = traj.du[..end].to_vec();
    let power = theta * exponent.p();
    let nonlinear: Vec<f64> = u.iter().map(|x| x.powf(power)).collect();
    let squares: Vec<f64> = u.iter().map(|x| x * x).collect();
    Ok(NlsGroundState {
        exponent,
        theta,
        step: h,
        nonlinear_integral: radial_integral(&nonlinear, h, dim),
        mass: radial_integral(&squares, h, dim),
        u,
        du,
    })
}

/// `1 / ∫ u^{θ(γ+d/2)}` for the NLS ground state.
pub fn one_bound_state_constant(gamma: f64, dim: usize) -> Result<f64> {
    Ok(nls_ground_state(gamma, dim)?.one_bound_state_constant())
}

/// `L⁽¹⁾_{γ,d} / L^{sc}_{γ,d}`.
pub fn one_bound_state_ratio(gamma: f64, dim: usize) -> Result<f64> {
    Ok(one_bound_state_constant(gamma, dim)? / semiclassical_constant(gamma, dim)?)
}

/// The exponent where `L⁽¹⁾_{γ,d} = L^{sc}_{γ,d}`, to `1e−7` in `γ`.
pub fn crossing_exponent(dim: usize) -> Result<f64> {
    let (lo, hi) = match dim {
        1 => (1.0, 2.0),
        2 => (1.0, 1.4),
        _ => return Err(LtError::InvalidExponent { gamma: f64::NAN, dim, reason: "dimension must be 1 or 2" }),
    };
    let g = |gamma: f64| one_bound_state_ratio(gamma, dim).map(|r| r - 1.0);
    bisect(g, lo, hi, 1e-7, "L1 - Lsc")
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64, what: &'static str) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(LtError::Bracket { what, lo, hi });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Lowest eigenvalue of the radial operator `−φ″ − (d−1)/r φ′ + V(r) φ` on
/// `[0, r_max]`, by shooting in `λ` with RK4 step `h`.
///
/// `v` is evaluated at `r = j·h/2`; the eigenvalue is searched in `[v_min, 0)`.
pub fn radial_ground_energy(v: impl Fn(f64) -> f64, dim: usize, r_max: f64, h: f64) -> Result<f64> {
    let d = dim as f64;
    let steps = (r_max / h) as usize;
    // +1 for positive tail / no node, −1 for a node
    let classify = |lambda: f64| -> f64 {
        let rhs = |r: f64, y: f64, w: f64| {
            let drift = if dim == 1 || r == 0.0 { 0.0 } else { (d - 1.0) / r * w };
            (w, -drift + (v(r) - lambda) * y)
        };
        let (mut y, mut w, start) = if dim == 1 {
            (1.0, 0.0, 0)
        } else {
            let c = (v(0.0) - lambda) / (2.0 * d);
            (1.0 + c * h * h, 2.0 * c * h, 1)
        };
        for i in start..steps {
            (y, w) = rk4_step(&rhs, i as f64 * h, y, w, h);
            if y < 0.0 {
                return -1.0;
            }
            if w > 0.0 && v((i + 1) as f64 * h) - lambda > 0.0 {
                return 1.0;
            }
        }
        1.0
    };
    let v_min = (0..=2 * steps).map(|j| v(j as f64 * 0.5 * h)).fold(f64::INFINITY, f64::min);
    if !(v_min < 0.0) {
        return Err(LtError::Bracket { what: "radial ground energy", lo: v_min, hi: 0.0 });
    }
    let (mut lo, mut hi) = (v_min, 0.0);
    if classify(hi - 1e-14) > 0.0 {
        return Err(LtError::Bracket { what: "radial ground energy", lo, hi });
    }
    while hi - lo > 1e-13 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if classify(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lowest eigenvalue of `−Δ − u^θ` for the computed ground state; `−1` up to
/// discretization error.
pub fn self_consistency_energy(state: &NlsGroundState) -> Result<f64> {
    let h = state.step;
    let last = state.u.len() - 1;
    let v = |r: f64| {
        let i = ((r / h).round() as usize).min(last);
        state.potential_at(i)
    };
    let r_max = (last as f64 - 2.0) * h;
    radial_ground_energy(v, state.exponent.dim, r_max.min(30.0), 2.0 * h)
}
