//! Plane-wave Bloch solver for `H_ξ = |−i∇ + ξ|² + V` on a unit cell.
//!
//! The potential lives on a regular cell grid and enters the Hamiltonian
//! through its discrete Fourier coefficients, `A[G, G'] = |G + ξ|² δ + V̂(G − G')`,
//! with `G − G'` wrapped modulo the grid. With that choice the matrix element of
//! `V` is exactly the grid quadrature of `e_G* V e_G'`, so the derivative of an
//! eigenvalue with respect to the grid value `V(x_i)` is `|u(x_i)|² / N`, which is
//! what the fixed-point optimizer relies on.
//!
//! Real potentials give `ε_n(−ξ) = ε_n(ξ)` and `u_{−ξ} = conj(u_ξ)`; only one
//! quasimomentum of each `±ξ` pair is diagonalized.

use std::fmt::Write as _;
use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LtError, Result};
use crate::format::sci;
use crate::lattice::{dual_vectors, norm2, BzGrid, CellGrid, Lattice, LatticeKind, PlaneWaveBasis, Vec2};

/// A real periodic potential sampled on the cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    lattice: Lattice,
    grid: CellGrid,
    values: Vec<f64>,
}

impl PotentialField {
    pub fn new(lattice: &Lattice, n_c: usize, values: Vec<f64>) -> Result<Self> {
        let grid = CellGrid::new(lattice, n_c)?;
        if values.len() != grid.len() {
            return Err(LtError::GridSizeMismatch { got: values.len(), expected: grid.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LtError::NonFinitePotential(i));
        }
        Ok(PotentialField { lattice: lattice.clone(), grid, values })
    }

    /// Samples `f` at the Cartesian grid points.
    pub fn from_fn(lattice: &Lattice, n_c: usize, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let grid = CellGrid::new(lattice, n_c)?;
        let values = grid.cartesian_points(lattice).into_iter().map(f).collect();
        Self::new(lattice, n_c, values)
    }

    pub fn constant(lattice: &Lattice, n_c: usize, value: f64) -> Result<Self> {
        Self::from_fn(lattice, n_c, |_| value)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn n_c(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same lattice and grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(&self.lattice, self.grid.n(), values)
    }

    pub fn shifted(&self, constant: f64) -> Self {
        PotentialField {
            values: self.values.iter().map(|v| v + constant).collect(),
            ..self.clone()
        }
    }

    /// `V(· − τ)` for `τ` a whole number of grid steps.
    pub fn translated(&self, steps: [i64; 2]) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            values[self.grid.shifted(i, steps)] = *v;
        }
        PotentialField { values, ..self.clone() }
    }

    /// Compact JSON: lattice kind, grid size and row-major values.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        write!(s, "{{\"lattice\":\"{}\",\"n_c\":{},\"values\":[", self.lattice.kind(), self.grid.n()).unwrap();
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&sci(*v));
        }
        s.push_str("]}");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            lattice: LatticeKind,
            n_c: usize,
            values: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|_| LtError::InvalidParameter {
            name: "potential json",
            value: f64::NAN,
            reason: "expected {\"lattice\", \"n_c\", \"values\"}",
        })?;
        Self::new(&Lattice::new(raw.lattice), raw.n_c, raw.values)
    }

    /// Grid dump: one line per point with fractional coordinates, Cartesian
    /// coordinates and the value.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let dim = self.lattice.dim();
        if dim == 1 {
            s.push_str("f0,x,value\n");
        } else {
            s.push_str("f0,f1,x,y,value\n");
        }
        for (i, v) in self.values.iter().enumerate() {
            let f = self.grid.fractional(i);
            let x = self.lattice.to_cartesian(f);
            if dim == 1 {
                writeln!(s, "{},{},{}", sci(f[0]), sci(x[0]), sci(*v)).unwrap();
            } else {
                writeln!(s, "{},{},{},{},{}", sci(f[0]), sci(f[1]), sci(x[0]), sci(x[1]), sci(*v)).unwrap();
            }
        }
        s
    }
}

/// `∫_C V_-^p` by the grid Riemann sum (`|C| = 1`).
pub fn potential_lp_integral(v: &PotentialField, p: f64) -> f64 {
    let w = v.grid.weight();
    v.values.iter().map(|x| (-x).max(0.0).powf(p)).sum::<f64>() * w
}

/// Forward/inverse FFT plans for one cell grid.
#[derive(Clone)]
struct GridFft {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridFft {
    fn new(grid: &CellGrid) -> Self {
        let mut planner = FftPlanner::new();
        GridFft {
            n: grid.n(),
            dim: grid.dim(),
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        fft.process(data);
        if self.dim == 2 {
            let mut t = vec![Complex64::new(0.0, 0.0); n * n];
            transpose(data, &mut t, n);
            fft.process(&mut t);
            transpose(&t, data, n);
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn slot(&self, z: [i64; 2]) -> usize {
        let n = self.n as i64;
        let i0 = z[0].rem_euclid(n) as usize;
        if self.dim == 1 {
            i0
        } else {
            i0 * self.n + z[1].rem_euclid(n) as usize
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

/// Discrete Fourier coefficients `V̂(m) = N^{-d} Σ_i V(x_i) e^{-2πi m·f_i}`
/// indexed by grid frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    n: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient of the dual vector with integer coordinates `z`, wrapped modulo the grid.
    pub fn get(&self, z: [i64; 2]) -> Complex64 {
        let n = self.n as i64;
        let i0 = z[0].rem_euclid(n) as usize;
        let idx = if self.dim == 1 { i0 } else { i0 * self.n + z[1].rem_euclid(n) as usize };
        self.data[idx]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

pub fn potential_fourier(v: &PotentialField) -> FourierCoefficients {
    let fft = GridFft::new(&v.grid);
    fourier_with(&fft, v)
}

fn fourier_with(fft: &GridFft, v: &PotentialField) -> FourierCoefficients {
    let mut data: Vec<Complex64> = v.values.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    fft.forward(&mut data);
    let w = v.grid.weight();
    data.iter_mut().for_each(|c| *c *= w);
    FourierCoefficients { n: v.grid.n(), dim: v.grid.dim(), data }
}

/// Inverse of [`potential_fourier`]: grid values (real part).
pub fn inverse_fourier(coeffs: &FourierCoefficients, lattice: &Lattice) -> Result<Vec<f64>> {
    let grid = CellGrid::new(lattice, coeffs.n)?;
    let fft = GridFft::new(&grid);
    let mut data = coeffs.data.clone();
    fft.inverse(&mut data);
    Ok(data.into_iter().map(|c| c.re).collect())
}

/// Dense Hermitian matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperatorMatrix {
    size: usize,
    data: Vec<Complex64>,
}

impl HermitianOperatorMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.size + j]
    }

    /// `max |A − A†|` over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.size;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.size, self.size, |i, j| self.get(i, j))
    }

    /// Lowest `count` eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, count: usize) -> Option<Vec<f64>> {
        let mut vals = self.to_faer().self_adjoint_eigenvalues(Side::Lower).ok()?;
        vals.truncate(count);
        Some(vals)
    }

    /// Lowest `count` eigenpairs; eigenvectors are unit columns in the plane-wave basis.
    pub fn lowest_eigenpairs(&self, count: usize) -> Option<(Vec<f64>, Vec<Vec<Complex64>>)> {
        let evd = self.to_faer().self_adjoint_eigen(Side::Lower).ok()?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let count = count.min(self.size);
        let vals = (0..count).map(|j| s[j].re).collect();
        let vecs = (0..count).map(|j| (0..self.size).map(|i| u[(i, j)]).collect()).collect();
        Some((vals, vecs))
    }
}

/// Assembles `H_ξ` in `basis`.
pub fn build_h_xi(vhat: &FourierCoefficients, basis: &PlaneWaveBasis, xi: Vec2) -> Result<HermitianOperatorMatrix> {
    basis.check_grid(vhat.n)?;
    let m = basis.len();
    let coords = basis.coords();
    let vectors = basis.vectors();
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for a in 0..m {
        for b in 0..m {
            let dz = [coords[a][0] - coords[b][0], coords[a][1] - coords[b][1]];
            data[a * m + b] = vhat.get(dz);
        }
        let g = vectors[a];
        data[a * m + a] += norm2([g[0] + xi[0], g[1] + xi[1]]);
    }
    // exact symmetry: V̂(-m) = conj(V̂(m)) holds only to rounding in the FFT
    for a in 0..m {
        data[a * m + a].im = 0.0;
        for b in 0..a {
            let avg = 0.5 * (data[a * m + b] + data[b * m + a].conj());
            data[a * m + b] = avg;
            data[b * m + a] = avg.conj();
        }
    }
    Ok(HermitianOperatorMatrix { size: m, data })
}

/// The lowest Bloch bands on a Brillouin-zone grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    grid: BzGrid,
    xis: Vec<Vec2>,
    dim: usize,
    /// `energies[ξ][n]`, ascending in `n`.
    energies: Vec<Vec<f64>>,
    vectors: Option<Vec<Vec<Vec<Complex64>>>>,
    basis: PlaneWaveBasis,
}

impl BandStructure {
    pub fn grid(&self) -> &BzGrid {
        &self.grid
    }

    /// The quasimomentum at which each `H_ξ` was actually assembled.
    pub fn quasimomenta(&self) -> &[Vec2] {
        &self.xis
    }

    pub fn band_count(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn energies(&self) -> &[Vec<f64>] {
        &self.energies
    }

    pub fn vectors(&self) -> Option<&[Vec<Vec<Complex64>>]> {
        self.vectors.as_deref()
    }

    pub fn basis(&self) -> &PlaneWaveBasis {
        &self.basis
    }

    /// `(min_ξ ε_n, max_ξ ε_n)` for band `n` (zero-based).
    pub fn band_range(&self, n: usize) -> (f64, f64) {
        self.energies.iter().map(|e| e[n]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        })
    }

    /// Bands whose minimum over the grid is negative.
    pub fn negative_band_count(&self) -> usize {
        (0..self.band_count()).filter(|&n| self.band_range(n).0 < 0.0).count()
    }

    /// `min ε_{n+1} − max ε_n`; negative when the bands overlap.
    pub fn gap_above(&self, n: usize) -> Option<f64> {
        if n + 1 >= self.band_count() {
            return None;
        }
        Some(self.band_range(n + 1).0 - self.band_range(n).1)
    }

    /// CSV with columns `xi0[,xi1],n,energy` (band index one-based).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(if self.dim == 1 { "xi0,n,energy\n" } else { "xi0,xi1,n,energy\n" });
        for (xi, row) in self.xis.iter().zip(&self.energies) {
            for (n, e) in row.iter().enumerate() {
                if self.dim == 1 {
                    writeln!(s, "{},{},{}", sci(xi[0]), n + 1, sci(*e)).unwrap();
                } else {
                    writeln!(s, "{},{},{},{}", sci(xi[0]), sci(xi[1]), n + 1, sci(*e)).unwrap();
                }
            }
        }
        s
    }
}

/// `|B|^{-1} ∫_B Σ_n ε_n(ξ)_-^γ`, as the grid average over all stored bands.
pub fn riesz_mean(bands: &BandStructure, gamma: f64) -> f64 {
    riesz_mean_of(bands.energies(), bands.band_count(), gamma)
}

/// Riesz mean restricted to the first `k` bands.
pub fn riesz_mean_of(energies: &[Vec<f64>], k: usize, gamma: f64) -> f64 {
    if energies.is_empty() {
        return 0.0;
    }
    let total: f64 = energies
        .iter()
        .map(|row| row.iter().take(k).map(|e| (-e).max(0.0).powf(gamma)).sum::<f64>())
        .sum();
    total / energies.len() as f64
}

/// Reusable discretization: lattice, grids, plane-wave basis and FFT plans.
#[derive(Clone)]
pub struct BlochSolver {
    lattice: Lattice,
    cell: CellGrid,
    bz: BzGrid,
    basis: PlaneWaveBasis,
    fft: GridFft,
    /// Grid indices that are diagonalized; partners are filled by time reversal.
    representatives: Vec<usize>,
}

/// Output of [`BlochSolver::weighted_density`].
#[derive(Debug, Clone)]
pub struct DensityOutput {
    pub energies: Vec<Vec<f64>>,
    pub density: Vec<f64>,
}

impl BlochSolver {
    /// `ecut = None` picks [`Lattice::default_cutoff`].
    pub fn new(lattice: &Lattice, n_c: usize, n_b: usize, ecut: Option<f64>) -> Result<Self> {
        let cell = CellGrid::new(lattice, n_c)?;
        let bz = BzGrid::new(lattice, n_b)?;
        let ecut = ecut.unwrap_or_else(|| lattice.default_cutoff(n_c));
        if !(ecut > 0.0) {
            return Err(LtError::InvalidParameter { name: "ecut", value: ecut, reason: "must be positive" });
        }
        let basis = dual_vectors(lattice, ecut);
        basis.check_grid(n_c)?;
        let representatives = (0..bz.len()).filter(|&i| bz.partner(i) >= i).collect();
        Ok(BlochSolver { lattice: lattice.clone(), fft: GridFft::new(&cell), cell, bz, basis, representatives })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn cell_grid(&self) -> &CellGrid {
        &self.cell
    }

    pub fn bz_grid(&self) -> &BzGrid {
        &self.bz
    }

    pub fn basis(&self) -> &PlaneWaveBasis {
        &self.basis
    }

    fn check_potential(&self, v: &PotentialField) -> Result<()> {
        if v.grid.n() != self.cell.n() || v.lattice.kind() != self.lattice.kind() {
            return Err(LtError::GridSizeMismatch { got: v.values.len(), expected: self.cell.len() });
        }
        Ok(())
    }

    fn check_bands(&self, count: usize) -> Result<usize> {
        if count == 0 || count > self.basis.len() {
            return Err(LtError::TooManyBands { bands: count, basis: self.basis.len() });
        }
        Ok(count)
    }

    pub fn fourier(&self, v: &PotentialField) -> FourierCoefficients {
        fourier_with(&self.fft, v)
    }

    fn solve_point(
        &self,
        vhat: &FourierCoefficients,
        xi: Vec2,
        count: usize,
        vectors: bool,
    ) -> Result<(Vec<f64>, Option<Vec<Vec<Complex64>>>)> {
        let h = build_h_xi(vhat, &self.basis, xi)?;
        let fail = || LtError::Eigensolver { xi0: xi[0], xi1: xi[1] };
        if vectors {
            let (vals, vecs) = h.lowest_eigenpairs(count).ok_or_else(fail)?;
            Ok((vals, Some(vecs)))
        } else {
            Ok((h.lowest_eigenvalues(count).ok_or_else(fail)?, None))
        }
    }

    /// Lowest `count` bands of `-Δ + v` on the Brillouin-zone grid.
    pub fn bands(&self, v: &PotentialField, count: usize, want_vectors: bool) -> Result<BandStructure> {
        self.check_potential(v)?;
        let count = self.check_bands(count)?;
        let vhat = self.fourier(v);
        let points = self.bz.points();
        let solved: Vec<_> = self
            .representatives
            .par_iter()
            .map(|&i| self.solve_point(&vhat, points[i], count, want_vectors))
            .collect::<Result<_>>()?;

        let total = self.bz.len();
        let mut xis = vec![[0.0; 2]; total];
        let mut energies = vec![Vec::new(); total];
        let mut vectors: Vec<Vec<Vec<Complex64>>> = vec![Vec::new(); if want_vectors { total } else { 0 }];
        let negated = self.basis.negated();
        for (&i, (vals, vecs)) in self.representatives.iter().zip(solved) {
            let p = self.bz.partner(i);
            xis[i] = points[i];
            energies[i] = vals.clone();
            if p != i {
                xis[p] = [-points[i][0], -points[i][1]];
                energies[p] = vals;
            }
            if let Some(vecs) = vecs {
                if p != i {
                    // u_{-ξ} = conj(u_ξ): c'(G) = conj(c(-G))
                    vectors[p] = vecs.iter().map(|c| negated.iter().map(|&j| c[j].conj()).collect()).collect();
                }
                vectors[i] = vecs;
            }
        }
        Ok(BandStructure {
            grid: self.bz.clone(),
            xis,
            dim: self.lattice.dim(),
            energies,
            vectors: want_vectors.then_some(vectors),
            basis: self.basis.clone(),
        })
    }

    /// `|u(x_i)|²` on the cell grid for plane-wave coefficients `c`, normalized so
    /// that its grid average is `Σ|c|²`.
    pub fn density_on_grid(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = vec![Complex64::new(0.0, 0.0); self.cell.len()];
        for (c, z) in coeffs.iter().zip(self.basis.coords()) {
            data[self.fft.slot(*z)] = *c;
        }
        self.fft.inverse(&mut data);
        data.into_iter().map(|u| u.norm_sqr()).collect()
    }

    /// Computes `count` bands at every ξ and the BZ-averaged density
    /// `Σ_{j ≤ weighted} weight(ε_j(ξ)) |u_j,ξ|²` on the cell grid.
    pub fn weighted_density<W>(
        &self,
        v: &PotentialField,
        weighted: usize,
        count: usize,
        weight: W,
    ) -> Result<DensityOutput>
    where
        W: Fn(f64) -> f64 + Sync,
    {
        self.check_potential(v)?;
        let count = self.check_bands(count.max(weighted))?;
        let vhat = self.fourier(v);
        let points = self.bz.points();
        let per_point: Vec<(Vec<f64>, Option<Vec<f64>>)> = self
            .representatives
            .par_iter()
            .map(|&i| -> Result<_> {
                let needs_vectors = {
                    let vals = self.solve_point(&vhat, points[i], count, false)?.0;
                    if vals.iter().take(weighted).all(|e| weight(*e) == 0.0) {
                        return Ok((vals, None));
                    }
                    true
                };
                debug_assert!(needs_vectors);
                let (vals, vecs) = self.solve_point(&vhat, points[i], count, true)?;
                let vecs = vecs.expect("vectors requested");
                let mut rho = vec![0.0; self.cell.len()];
                for (e, c) in vals.iter().zip(&vecs).take(weighted) {
                    let w = weight(*e);
                    if w == 0.0 {
                        continue;
                    }
                    for (r, u2) in rho.iter_mut().zip(self.density_on_grid(c)) {
                        *r += w * u2;
                    }
                }
                Ok((vals, Some(rho)))
            })
            .collect::<Result<_>>()?;

        let total = self.bz.len();
        let mut energies = vec![Vec::new(); total];
        let mut density = vec![0.0; self.cell.len()];
        for (&i, (vals, rho)) in self.representatives.iter().zip(per_point) {
            let p = self.bz.partner(i);
            let multiplicity = if p != i { 2.0 } else { 1.0 };
            if let Some(rho) = rho {
                for (d, r) in density.iter_mut().zip(rho) {
                    *d += multiplicity * r;
                }
            }
            energies[p] = vals.clone();
            energies[i] = vals;
        }
        let w = self.bz.weight();
        density.iter_mut().for_each(|d| *d *= w);
        Ok(DensityOutput { energies, density })
    }
}

/// Lowest `k` bands of `-Δ + v` on an `n_b^d` grid.
pub fn lowest_bands(
    v: &PotentialField,
    k: usize,
    n_b: usize,
    ecut: Option<f64>,
    want_vectors: bool,
) -> Result<BandStructure> {
    BlochSolver::new(v.lattice(), v.n_c(), n_b, ecut)?.bands(v, k, want_vectors)
}

/// Serializable summary of a band structure's extremes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BandSummary {
    pub ranges: Vec<(f64, f64)>,
    pub negative_bands: usize,
}

impl From<&BandStructure> for BandSummary {
    fn from(b: &BandStructure) -> Self {
        BandSummary {
            ranges: (0..b.band_count()).map(|n| b.band_range(n)).collect(),
            negative_bands: b.negative_band_count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeKind;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn line() -> Lattice {
        Lattice::new(LatticeKind::Line)
    }

    #[test]
    fn constant_fourier() {
        let v = PotentialField::constant(&Lattice::new(LatticeKind::Square), 8, -3.0).unwrap();
        let f = potential_fourier(&v);
        assert_abs_diff_eq!(f.get([0, 0]).re, -3.0, epsilon = 1e-14);
        for (i, c) in f.as_slice().iter().enumerate().skip(1) {
            assert!(c.norm() < 1e-14, "index {i}");
        }
    }

    #[test]
    fn cosine_fourier_pair() {
        let v = PotentialField::from_fn(&line(), 16, |x| 2.0 * (2.0 * PI * x[0]).cos()).unwrap();
        let f = potential_fourier(&v);
        assert_abs_diff_eq!(f.get([1, 0]).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.get([-1, 0]).re, 1.0, epsilon = 1e-14);
        assert!(f.get([0, 0]).norm() < 1e-14);
        assert!(f.get([2, 0]).norm() < 1e-14);
    }

    #[test]
    fn fourier_round_trip_and_conjugate_symmetry() {
        let l = Lattice::new(LatticeKind::Triangular);
        let v = PotentialField::from_fn(&l, 12, |x| (x[0] * 3.1).sin() - (x[1] * x[0]).cos()).unwrap();
        let f = potential_fourier(&v);
        for z in [[1, 2], [3, -1], [0, 5]] {
            assert!((f.get([-z[0], -z[1]]) - f.get(z).conj()).norm() < 1e-14);
        }
        let back = inverse_fourier(&f, &l).unwrap();
        for (a, b) in back.iter().zip(v.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let l = line();
        let v = PotentialField::constant(&l, 16, 0.0).unwrap();
        let basis = dual_vectors(&l, (2.0 * PI * 3.0).powi(2));
        let h = build_h_xi(&potential_fourier(&v), &basis, [0.7, 0.0]).unwrap();
        for i in 0..h.size() {
            for j in 0..h.size() {
                let expect = if i == j { (basis.vectors()[i][0] + 0.7).powi(2) } else { 0.0 };
                assert_abs_diff_eq!(h.get(i, j).re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(h.get(i, j).im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn constant_shift_of_eigenvalues() {
        let l = Lattice::new(LatticeKind::Square);
        let mu = 2.5;
        let v = PotentialField::constant(&l, 12, -mu).unwrap();
        let basis = dual_vectors(&l, l.default_cutoff(12));
        let xi = [0.4, -1.1];
        let h = build_h_xi(&potential_fourier(&v), &basis, xi).unwrap();
        let vals = h.lowest_eigenvalues(4).unwrap();
        let mut free: Vec<f64> = basis.vectors().iter().map(|g| norm2([g[0] + xi[0], g[1] + xi[1]]) - mu).collect();
        free.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&free) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn weak_cosine_gap_matches_degenerate_perturbation_theory() {
        // V = 2 cos(2πx): |V̂(±2π)| = 1, gap at ξ = π ≈ 2
        let l = line();
        let v = PotentialField::from_fn(&l, 64, |x| 2.0 * (2.0 * PI * x[0]).cos()).unwrap();
        let b = lowest_bands(&v, 2, 2, None, false).unwrap();
        let at_pi = &b.energies()[1];
        let gap = at_pi[1] - at_pi[0];
        assert!((gap - 2.0).abs() < 0.2, "gap {gap}");
    }

    #[test]
    fn free_line_bands() {
        let l = line();
        let v = PotentialField::constant(&l, 32, 0.0).unwrap();
        let b = lowest_bands(&v, 1, 8, None, false).unwrap();
        for (xi, e) in b.quasimomenta().iter().zip(b.energies()) {
            let d = xi[0].rem_euclid(2.0 * PI);
            let dist = d.min(2.0 * PI - d);
            assert_abs_diff_eq!(e[0], dist * dist, epsilon = 1e-10);
        }
    }

    #[test]
    fn riesz_mean_elementary() {
        let l = line();
        let v = PotentialField::constant(&l, 8, 1.0).unwrap();
        let b = lowest_bands(&v, 2, 4, None, false).unwrap();
        assert_eq!(riesz_mean(&b, 1.5), 0.0);
        assert_abs_diff_eq!(riesz_mean_of(&[vec![-2.0]], 1, 2.0), 4.0);
    }

    #[test]
    fn lp_integral_elementary() {
        let l = Lattice::new(LatticeKind::Triangular);
        let v = PotentialField::constant(&l, 6, -1.7).unwrap();
        assert_abs_diff_eq!(potential_lp_integral(&v, 2.0), 1.7 * 1.7, epsilon = 1e-13);
        let w = PotentialField::from_fn(&l, 6, |x| 1.0 + x[0] * x[0]).unwrap();
        assert_eq!(potential_lp_integral(&w, 2.0), 0.0);
    }

    #[test]
    fn stored_eigenvectors_are_orthonormal() {
        let l = Lattice::new(LatticeKind::Square);
        let v = PotentialField::from_fn(&l, 10, |x| -3.0 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()).unwrap();
        let b = lowest_bands(&v, 3, 3, None, true).unwrap();
        for vecs in b.vectors().unwrap() {
            for i in 0..3 {
                for j in 0..3 {
                    let ip: Complex64 = vecs[i].iter().zip(&vecs[j]).map(|(a, c)| a.conj() * c).sum();
                    assert_abs_diff_eq!(ip.norm(), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let l = line();
        let v = PotentialField::constant(&l, 8, 0.0).unwrap();
        let basis = dual_vectors(&l, (2.0 * PI * 10.0).powi(2));
        assert!(matches!(
            build_h_xi(&potential_fourier(&v), &basis, [0.0, 0.0]),
            Err(LtError::BasisGridMismatch { .. })
        ));
        assert!(BlochSolver::new(&l, 8, 4, Some(1e6)).is_err());
        assert!(PotentialField::new(&l, 8, vec![0.0; 7]).is_err());
        assert!(PotentialField::new(&l, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let l = Lattice::new(LatticeKind::Honeycomb);
        let v = PotentialField::from_fn(&l, 4, |x| x[0] - 2.0 * x[1]).unwrap();
        let back = PotentialField::from_json(&v.to_json()).unwrap();
        assert_eq!(back.lattice().kind(), LatticeKind::Honeycomb);
        for (a, b) in back.values().iter().zip(v.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-11 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn density_of_unit_vector_averages_to_one() {
        let l = Lattice::new(LatticeKind::Triangular);
        let s = BlochSolver::new(&l, 12, 2, None).unwrap();
        let m = s.basis().len();
        let c: Vec<Complex64> =
            (0..m).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let c: Vec<Complex64> = c.iter().map(|z| z / norm.sqrt()).collect();
        let rho = s.density_on_grid(&c);
        assert_abs_diff_eq!(rho.iter().sum::<f64>() / rho.len() as f64, 1.0, epsilon = 1e-12);
    }
}
