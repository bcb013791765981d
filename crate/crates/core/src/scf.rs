//! Fixed-point maximization of the per-cell Riesz mean under an `L^p` constraint.
//!
//! For `p = γ + d/2` the problem is
//! `sup { Σ_{n≤K} avg_ξ ε_n(ξ)_-^γ : ∫_C V_-^p = I^p }`. One step computes
//! `ρ(x) = avg_ξ Σ_{j≤K} ε_j(ξ)_-^{γ-1} |u_{j,ξ}(x)|²` and sets
//! `V ← −a ρ^{1/(p−1)}` with `a` fixed by the constraint. The objective is convex
//! in `V` and the step maximizes its linearization on the constraint sphere, so
//! the objective is nondecreasing along the iteration.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{potential_lp_integral, riesz_mean_of, BlochSolver, PotentialField};
use crate::constants::{bisect, one_bound_state_constant, semiclassical_constant};
use crate::error::{LtError, Result};
use crate::format::sci;
use crate::lattice::{dual_vectors, dot, make_lattice, Lattice, LatticeKind};

/// Relative slack allowed in the monotone-ascent check.
pub const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfConfig {
    pub gamma: f64,
    pub dim: usize,
    pub lattice: LatticeKind,
    /// Number of bands `K` in the objective.
    pub bands: usize,
    /// Constraint level `I`.
    pub norm: f64,
    pub n_c: usize,
    pub n_b: usize,
    /// Plane-wave cutoff; `None` uses the lattice default for `n_c`.
    pub ecut: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Standard deviation of the initial Gaussian wells.
    pub width: f64,
    /// Relative multiplicative noise on the initial wells.
    pub noise: f64,
    /// Linear mixing weight of the new potential; `None` is the bare iteration.
    pub mixing: Option<f64>,
    pub seed: u64,
}

impl ScfConfig {
    pub fn new(lattice: LatticeKind, gamma: f64, norm: f64) -> Self {
        let dim = lattice.natural_dim();
        ScfConfig {
            gamma,
            dim,
            lattice,
            bands: lattice.default_bands(),
            norm,
            n_c: if dim == 1 { 64 } else { 24 },
            n_b: if dim == 1 { 64 } else { 12 },
            ecut: None,
            tol: 1e-8,
            max_iter: 500,
            width: 0.15,
            noise: 0.0,
            mixing: None,
            seed: 0,
        }
    }

    /// `γ + d/2`.
    pub fn p(&self) -> f64 {
        self.gamma + 0.5 * self.dim as f64
    }

    pub fn validate(&self) -> Result<Lattice> {
        let lattice = make_lattice(self.lattice, self.dim)?;
        let bad = |name, value, reason| Err(LtError::InvalidParameter { name, value, reason });
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(LtError::InvalidExponent {
                gamma: self.gamma,
                dim: self.dim,
                reason: "the fixed-point weight needs gamma > 1",
            });
        }
        if !(self.norm > 0.0) || !self.norm.is_finite() {
            return bad("norm", self.norm, "must be positive");
        }
        if self.bands == 0 {
            return bad("bands", 0.0, "must be at least 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol", self.tol, "must be positive");
        }
        if !(self.width > 0.0) {
            return bad("width", self.width, "must be positive");
        }
        if !(self.noise >= 0.0 && self.noise < 1.0) {
            return bad("noise", self.noise, "must lie in [0, 1)");
        }
        if let Some(m) = self.mixing {
            if !(m > 0.0 && m <= 1.0) {
                return bad("mixing", m, "must lie in (0, 1]");
            }
        }
        Ok(lattice)
    }

    /// Stable textual form, used to key results.
    pub fn canonical(&self) -> String {
        format!(
            "gamma={};dim={};lattice={};bands={};norm={};n_c={};n_b={};ecut={};tol={};max_iter={};width={};noise={};mixing={};seed={}",
            sci(self.gamma),
            self.dim,
            self.lattice,
            self.bands,
            sci(self.norm),
            self.n_c,
            self.n_b,
            self.ecut.map_or("default".into(), sci),
            sci(self.tol),
            self.max_iter,
            sci(self.width),
            sci(self.noise),
            self.mixing.map_or("none".into(), sci),
            self.seed,
        )
    }

    pub fn solver(&self) -> Result<BlochSolver> {
        let lattice = self.validate()?;
        BlochSolver::new(&lattice, self.n_c, self.n_b, self.ecut)
    }
}

fn lp_norm_pow(values: &[f64], p: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / values.len() as f64
}

/// Scales a nonnegative profile `g` to `V = −a g` with `∫ V_-^p = I^p`.
fn normalize_well(g: &[f64], norm: f64, p: f64) -> Result<Vec<f64>> {
    let m = lp_norm_pow(g, p);
    if !(m > 0.0) || !m.is_finite() {
        return Err(LtError::InvalidParameter { name: "initial potential", value: m, reason: "vanishes on the grid" });
    }
    let a = norm / m.powf(1.0 / p);
    Ok(g.iter().map(|x| -a * x).collect())
}

/// Minus a sum of periodized Gaussians at the motif sites, normalized to the constraint.
pub fn init_potential(cfg: &ScfConfig) -> Result<PotentialField> {
    let lattice = cfg.validate()?;
    let d = cfg.dim as f64;
    let w2 = cfg.width * cfg.width;
    // Fourier series of the periodized Gaussian, truncated where e^{-w²|G|²/2} < 1e-18
    let gcut = 2.0 * 41.5 / w2;
    let shell = dual_vectors(&lattice, gcut);
    let prefactor = (2.0 * std::f64::consts::PI * w2).powf(0.5 * d);
    let sites: Vec<_> = lattice.motif().iter().map(|f| lattice.to_cartesian(*f)).collect();
    let points = crate::lattice::CellGrid::new(&lattice, cfg.n_c)?.cartesian_points(&lattice);
    let amps: Vec<f64> = shell.vectors().iter().map(|g| prefactor * (-0.5 * w2 * dot(*g, *g)).exp()).collect();
    let mut g: Vec<f64> = points
        .iter()
        .map(|x| {
            let mut s = 0.0;
            for (gv, amp) in shell.vectors().iter().zip(&amps) {
                for site in &sites {
                    s += amp * dot(*gv, [x[0] - site[0], x[1] - site[1]]).cos();
                }
            }
            s.max(0.0)
        })
        .collect();
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for x in g.iter_mut() {
            *x *= 1.0 + cfg.noise * rng.gen_range(-1.0..1.0);
        }
    }
    PotentialField::new(&lattice, cfg.n_c, normalize_well(&g, cfg.norm, cfg.p())?)
}

/// Per-step output of [`scf_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Objective at the input potential.
    pub objective: f64,
    /// `‖V_next − V‖_{L^p(C)}`.
    pub residual: f64,
    /// The normalization `a` of the new potential.
    pub scale: f64,
    pub negative_bands: usize,
    /// `min ε_{K+1} − max ε_K` at the input potential, when `K+1` bands fit the basis.
    pub gap: Option<f64>,
    /// `|∫ V_next,-^p − I^p| / I^p`.
    pub constraint_defect: f64,
}

fn band_count(solver: &BlochSolver, k: usize) -> usize {
    (k + 1).min(solver.basis().len())
}

fn band_diagnostics(energies: &[Vec<f64>], k: usize) -> (usize, Option<f64>) {
    let bands = energies.first().map_or(0, Vec::len);
    let range = |n: usize| {
        energies.iter().map(|e| e[n]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
    };
    let negative = (0..bands).filter(|&n| range(n).0 < 0.0).count();
    let gap = (bands > k && k > 0).then(|| range(k).0 - range(k - 1).1);
    (negative, gap)
}

/// One fixed-point step from `v`.
pub fn scf_step(solver: &BlochSolver, v: &PotentialField, cfg: &ScfConfig) -> Result<(PotentialField, StepDiagnostics)> {
    let k = cfg.bands;
    let p = cfg.p();
    let gm1 = cfg.gamma - 1.0;
    let out = solver.weighted_density(v, k, band_count(solver, k), |e| if e < 0.0 { (-e).powf(gm1) } else { 0.0 })?;
    let objective = riesz_mean_of(&out.energies, k, cfg.gamma);
    if out.density.iter().all(|r| *r <= 0.0) {
        return Err(LtError::NoNegativeSpectrum { bands: k });
    }
    let shape: Vec<f64> = out.density.iter().map(|r| r.max(0.0).powf(1.0 / (p - 1.0))).collect();
    let scale = cfg.norm / lp_norm_pow(&shape, p).powf(1.0 / p);
    let mut next: Vec<f64> = shape.iter().map(|s| -scale * s).collect();
    if let Some(beta) = cfg.mixing {
        let mixed: Vec<f64> = next.iter().zip(v.values()).map(|(n, o)| beta * n + (1.0 - beta) * o).collect();
        let g: Vec<f64> = mixed.iter().map(|x| (-x).max(0.0)).collect();
        next = normalize_well(&g, cfg.norm, p)?;
    }
    let diff: Vec<f64> = next.iter().zip(v.values()).map(|(a, b)| a - b).collect();
    let residual = lp_norm_pow(&diff, p).powf(1.0 / p);
    let next = v.with_values(next)?;
    let target = cfg.norm.powf(p);
    let constraint_defect = (potential_lp_integral(&next, p) - target).abs() / target;
    let (negative_bands, gap) = band_diagnostics(&out.energies, k);
    Ok((next, StepDiagnostics { objective, residual, scale, negative_bands, gap, constraint_defect }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub config: ScfConfig,
    pub potential: PotentialField,
    pub objective: f64,
    /// `J / (I^p L^sc)`.
    pub ratio_sc: f64,
    /// `J / (I^p L^(1))`.
    pub ratio_1bs: f64,
    pub iterations: usize,
    /// Objective at every iterate, starting with the initial potential.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub residual: f64,
    pub negative_bands: usize,
    pub gap: Option<f64>,
    /// Worst constraint defect over all iterates.
    pub constraint_defect: f64,
    pub warm_start: bool,
}

impl OptimizationResult {
    pub fn to_json(&self) -> String {
        let c = &self.config;
        let opt = |x: Option<f64>| x.map_or("null".to_string(), sci);
        let mut s = String::from("{\"config\":{");
        write!(
            s,
            "\"gamma\":{},\"dim\":{},\"lattice\":\"{}\",\"bands\":{},\"norm\":{},\"n_c\":{},\"n_b\":{},\"ecut\":{},\"tol\":{},\"max_iter\":{},\"width\":{},\"noise\":{},\"mixing\":{},\"seed\":{},\"warm_start\":{}}},",
            sci(c.gamma),
            c.dim,
            c.lattice,
            c.bands,
            sci(c.norm),
            c.n_c,
            c.n_b,
            opt(c.ecut),
            sci(c.tol),
            c.max_iter,
            sci(c.width),
            sci(c.noise),
            opt(c.mixing),
            c.seed,
            self.warm_start,
        )
        .unwrap();
        write!(
            s,
            "\"objective\":{},\"ratio_sc\":{},\"ratio_1bs\":{},\"iterations\":{},\"converged\":{},\"residual\":{},\"negative_bands\":{},\"gap\":{},\"constraint_defect\":{},\"trace\":[",
            sci(self.objective),
            sci(self.ratio_sc),
            sci(self.ratio_1bs),
            self.iterations,
            self.converged,
            sci(self.residual),
            self.negative_bands,
            opt(self.gap),
            sci(self.constraint_defect),
        )
        .unwrap();
        push_list(&mut s, &self.trace);
        s.push_str("],\"potential\":");
        s.push_str(&self.potential.to_json());
        s.push('}');
        s
    }

    /// The sweep CSV row (without trailing newline); see [`CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            sci(c.gamma),
            c.dim,
            c.lattice,
            c.bands,
            sci(c.norm),
            sci(self.objective),
            sci(self.ratio_sc),
            sci(self.ratio_1bs),
            self.iterations,
            self.converged,
        )
    }
}

pub const CSV_HEADER: &str = "gamma,d,lattice,K,I,objective,ratio_sc,ratio_1bs,iterations,converged";

fn push_list(s: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&sci(*x));
    }
}

/// Runs the iteration from the Gaussian initial potential.
pub fn optimize_point(cfg: &ScfConfig) -> Result<OptimizationResult> {
    optimize_from(cfg, None, None)
}

/// Runs the iteration from `start` (rescaled to the constraint) or from
/// [`init_potential`]. `one_bound` may supply a precomputed `L^(1)`.
pub fn optimize_from(cfg: &ScfConfig, start: Option<&PotentialField>, one_bound: Option<f64>) -> Result<OptimizationResult> {
    let solver = cfg.solver()?;
    let p = cfg.p();
    let warm_start = start.is_some();
    let mut v = match start {
        Some(s) => {
            let g: Vec<f64> = s.values().iter().map(|x| (-x).max(0.0)).collect();
            PotentialField::new(solver.lattice(), cfg.n_c, normalize_well(&g, cfg.norm, p)?)?
        }
        None => init_potential(cfg)?,
    };
    let target = cfg.norm.powf(p);
    let mut constraint_defect = (potential_lp_integral(&v, p) - target).abs() / target;

    let mut trace: Vec<f64> = Vec::new();
    let mut best: Option<(f64, PotentialField)> = None;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    let push = |trace: &mut Vec<f64>, j: f64| -> Result<()> {
        if let Some(&prev) = trace.last() {
            if j < prev - MONOTONE_SLACK * (1.0 + prev.abs()) {
                trace.push(j);
                return Err(LtError::NonMonotone { iteration: trace.len() - 1, previous: prev, current: j, trace: trace.clone() });
            }
        }
        trace.push(j);
        Ok(())
    };

    while iterations < cfg.max_iter {
        let (next, diag) = scf_step(&solver, &v, cfg)?;
        push(&mut trace, diag.objective)?;
        if best.as_ref().map_or(true, |(j, _)| diag.objective >= *j) {
            best = Some((diag.objective, v.clone()));
        }
        constraint_defect = constraint_defect.max(diag.constraint_defect);
        residual = diag.residual;
        iterations += 1;
        v = next;
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }

    // evaluate the last iterate
    let final_bands = solver.bands(&v, band_count(&solver, cfg.bands), false)?;
    let j_last = riesz_mean_of(final_bands.energies(), cfg.bands, cfg.gamma);
    push(&mut trace, j_last)?;
    let (potential, objective, energies) = match best {
        Some((j, bv)) if j > j_last => {
            let b = solver.bands(&bv, band_count(&solver, cfg.bands), false)?;
            (bv, j, b.energies().to_vec())
        }
        _ => (v, j_last, final_bands.energies().to_vec()),
    };
    let (negative_bands, gap) = band_diagnostics(&energies, cfg.bands);
    let scale = target;
    let l_sc = semiclassical_constant(cfg.gamma, cfg.dim)?;
    let l_1 = match one_bound {
        Some(x) => x,
        None => one_bound_state_constant(cfg.gamma, cfg.dim)?,
    };
    Ok(OptimizationResult {
        config: cfg.clone(),
        potential,
        objective,
        ratio_sc: objective / (scale * l_sc),
        ratio_1bs: objective / (scale * l_1),
        iterations,
        trace,
        converged,
        residual,
        negative_bands,
        gap,
        constraint_defect,
        warm_start,
    })
}

/// Optimizes at every `I` in `norms`. Independent points run in parallel;
/// with `warm_start` the points run in order, each starting from the previous optimizer.
pub fn sweep_norms(cfg: &ScfConfig, norms: &[f64], warm_start: bool) -> Vec<Result<OptimizationResult>> {
    let l_1 = one_bound_state_constant(cfg.gamma, cfg.dim).ok();
    let at = |norm: f64| ScfConfig { norm, ..cfg.clone() };
    if !warm_start {
        return norms.par_iter().map(|&i| optimize_from(&at(i), None, l_1)).collect();
    }
    let mut out = Vec::with_capacity(norms.len());
    let mut previous: Option<PotentialField> = None;
    for &i in norms {
        let r = optimize_from(&at(i), previous.as_ref(), l_1);
        if let Ok(res) = &r {
            previous = Some(res.potential.clone());
        }
        out.push(r);
    }
    out
}

/// Maximizes `f` on `[lo, hi]` by golden-section search; returns `(x, f(x))`.
pub fn golden_section_max(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalGamma {
    pub gamma: f64,
    /// Maximizing `I` at the final `γ` probe.
    pub norm: f64,
    pub ratio: f64,
    /// `(γ, I*, max ratio)` per outer probe.
    pub probes: Vec<(f64, f64, f64)>,
}

/// Finds `γ*` with `max_{I ∈ window} ratio(γ, I) = 1` by bisection in `γ`
/// and golden-section search in `I`.
pub fn critical_gamma_with(
    mut ratio: impl FnMut(f64, f64) -> Result<f64>,
    gamma_bracket: (f64, f64),
    window: (f64, f64),
    gamma_tol: f64,
    norm_tol: f64,
) -> Result<CriticalGamma> {
    let mut probes = Vec::new();
    let mut inner = |gamma: f64, probes: &mut Vec<(f64, f64, f64)>| -> Result<f64> {
        let (norm, best) = golden_section_max(|i| ratio(gamma, i), window.0, window.1, norm_tol)?;
        probes.push((gamma, norm, best));
        Ok(best - 1.0)
    };
    let gamma = bisect(|g| inner(g, &mut probes), gamma_bracket.0, gamma_bracket.1, gamma_tol, "critical gamma")?;
    let (_, norm, r) = *probes.last().expect("bisection probes at least twice");
    Ok(CriticalGamma { gamma, norm, ratio: r, probes })
}

/// [`critical_gamma_with`] using full optimizations of `cfg` at each `(γ, I)`.
pub fn critical_gamma(
    cfg: &ScfConfig,
    gamma_bracket: (f64, f64),
    window: (f64, f64),
    gamma_tol: f64,
    norm_tol: f64,
) -> Result<CriticalGamma> {
    critical_gamma_with(
        |gamma, norm| {
            let c = ScfConfig { gamma, norm, ..cfg.clone() };
            // L^(1) is not needed for the ratio to L^sc
            Ok(optimize_from(&c, None, Some(f64::NAN))?.ratio_sc)
        },
        gamma_bracket,
        window,
        gamma_tol,
        norm_tol,
    )
}
