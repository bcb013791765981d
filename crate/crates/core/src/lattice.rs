//! Bravais lattices of unit covolume, their duals, and the sampling grids used
//! throughout the crate.
//!
//! Points are stored as `[f64; 2]`; in one dimension the second component is
//! always zero. Every lattice is normalized so that its unit cell has volume 1,
//! which makes the Brillouin zone volume `(2π)^d`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LtError, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm2(a: Vec2) -> f64 {
    dot(a, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Line,
    Square,
    Triangular,
    /// Triangular Bravais lattice carrying a two-site motif.
    Honeycomb,
}

impl LatticeKind {
    pub fn natural_dim(self) -> usize {
        match self {
            LatticeKind::Line => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::Line => "line",
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Honeycomb => "honeycomb",
        }
    }

    /// Band count used when the caller does not choose one: one band per motif site.
    pub fn default_bands(self) -> usize {
        match self {
            LatticeKind::Honeycomb => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatticeKind {
    type Err = LtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" => Ok(LatticeKind::Line),
            "square" => Ok(LatticeKind::Square),
            "triangular" => Ok(LatticeKind::Triangular),
            "honeycomb" | "hexagonal" => Ok(LatticeKind::Honeycomb),
            other => Err(LtError::UnknownLatticeKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    kind: LatticeKind,
    dim: usize,
    basis: Vec<Vec2>,
    dual: Vec<Vec2>,
    motif: Vec<Vec2>,
}

/// Builds the unit-covolume lattice of the given kind.
///
/// The honeycomb lattice is the triangular Bravais lattice with motif sites at
/// fractional coordinates (1/3, 1/3) and (2/3, 2/3); all other kinds carry a
/// single site at the origin.
pub fn make_lattice(kind: LatticeKind, dim: usize) -> Result<Lattice> {
    if kind.natural_dim() != dim {
        return Err(LtError::UnsupportedLattice { kind: kind.to_string(), dim });
    }
    let (basis, motif): (Vec<Vec2>, Vec<Vec2>) = match kind {
        LatticeKind::Line => (vec![[1.0, 0.0]], vec![[0.0, 0.0]]),
        LatticeKind::Square => (vec![[1.0, 0.0], [0.0, 1.0]], vec![[0.0, 0.0]]),
        LatticeKind::Triangular | LatticeKind::Honeycomb => {
            // |v|^2 sin(60°) = 1
            let a = (2.0 / 3f64.sqrt()).sqrt();
            let basis = vec![[a, 0.0], [0.5 * a, 0.5 * 3f64.sqrt() * a]];
            let motif = if kind == LatticeKind::Honeycomb {
                vec![[1.0 / 3.0, 1.0 / 3.0], [2.0 / 3.0, 2.0 / 3.0]]
            } else {
                vec![[0.0, 0.0]]
            };
            (basis, motif)
        }
    };
    let dual = dual_basis(&basis);
    Ok(Lattice { kind, dim, basis, dual, motif })
}

fn dual_basis(basis: &[Vec2]) -> Vec<Vec2> {
    match basis.len() {
        1 => vec![[2.0 * PI / basis[0][0], 0.0]],
        _ => {
            let [a, b] = [basis[0], basis[1]];
            let det = a[0] * b[1] - a[1] * b[0];
            // rows of 2π (A^{-1})^T
            vec![
                [2.0 * PI * b[1] / det, -2.0 * PI * b[0] / det],
                [-2.0 * PI * a[1] / det, 2.0 * PI * a[0] / det],
            ]
        }
    }
}

impl Lattice {
    pub fn new(kind: LatticeKind) -> Self {
        make_lattice(kind, kind.natural_dim()).expect("natural dimension is always supported")
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Vec2] {
        &self.basis
    }

    pub fn dual(&self) -> &[Vec2] {
        &self.dual
    }

    /// Motif sites in fractional coordinates.
    pub fn motif(&self) -> &[Vec2] {
        &self.motif
    }

    pub fn cell_volume(&self) -> f64 {
        match self.dim {
            1 => self.basis[0][0].abs(),
            _ => {
                let [a, b] = [self.basis[0], self.basis[1]];
                (a[0] * b[1] - a[1] * b[0]).abs()
            }
        }
    }

    pub fn bz_volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Cartesian position of a point given in fractional coordinates of the basis.
    pub fn to_cartesian(&self, frac: Vec2) -> Vec2 {
        let mut out = [0.0; 2];
        for (i, v) in self.basis.iter().enumerate() {
            out[0] += frac[i] * v[0];
            out[1] += frac[i] * v[1];
        }
        out
    }

    /// Cartesian quasimomentum from fractional coordinates of the dual basis.
    pub fn to_cartesian_dual(&self, frac: Vec2) -> Vec2 {
        let mut out = [0.0; 2];
        for (i, b) in self.dual.iter().enumerate() {
            out[0] += frac[i] * b[0];
            out[1] += frac[i] * b[1];
        }
        out
    }

    /// Largest deviation of `b_i · v_j` from `2π δ_ij`.
    pub fn duality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, b) in self.dual.iter().enumerate() {
            for (j, v) in self.basis.iter().enumerate() {
                let target = if i == j { 2.0 * PI } else { 0.0 };
                worst = worst.max((dot(*b, *v) - target).abs());
            }
        }
        worst
    }

    /// Cutoff `|G|^2` of the largest sphere whose plane waves stay distinct on an
    /// `n_c`-point grid per axis.
    pub fn nyquist_cutoff(&self, n_c: usize) -> f64 {
        let m = ((n_c.max(1) - 1) / 2) as f64;
        let vmax = self.basis.iter().map(|v| norm2(*v).sqrt()).fold(0.0, f64::max);
        (2.0 * PI * m / vmax).powi(2)
    }

    /// Default plane-wave cutoff for a cell grid: half the Nyquist cutoff, so a
    /// single doubling still fits on the grid.
    pub fn default_cutoff(&self, n_c: usize) -> f64 {
        0.5 * self.nyquist_cutoff(n_c)
    }

    /// Shortest representative of `xi` modulo the dual lattice (nearest-image search).
    pub fn reduce_to_bz(&self, xi: Vec2) -> Vec2 {
        let mut best = xi;
        let mut best_n = norm2(xi);
        let range: &[i32] = &[-1, 0, 1];
        let second: &[i32] = if self.dim == 2 { range } else { &[0] };
        for &z0 in range {
            for &z1 in second {
                let g = self.to_cartesian_dual([z0 as f64, z1 as f64]);
                let cand = [xi[0] + g[0], xi[1] + g[1]];
                let n = norm2(cand);
                if n < best_n - 1e-12 * (1.0 + best_n) {
                    best = cand;
                    best_n = n;
                }
            }
        }
        best
    }
}

/// Regular `n^d` grid in the unit cell, row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGrid {
    n: usize,
    dim: usize,
}

impl CellGrid {
    pub fn new(lattice: &Lattice, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LtError::InvalidParameter {
                name: "n_c",
                value: 0.0,
                reason: "cell grid needs at least one point per axis",
            });
        }
        Ok(CellGrid { n, dim: lattice.dim() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Per-axis integer indices of flat index `idx`.
    pub fn indices(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    pub fn flat(&self, i: [usize; 2]) -> usize {
        match self.dim {
            1 => i[0] % self.n,
            _ => (i[0] % self.n) * self.n + (i[1] % self.n),
        }
    }

    pub fn fractional(&self, idx: usize) -> Vec2 {
        let [i0, i1] = self.indices(idx);
        let n = self.n as f64;
        [i0 as f64 / n, if self.dim == 2 { i1 as f64 / n } else { 0.0 }]
    }

    pub fn fractional_points(&self) -> Vec<Vec2> {
        (0..self.len()).map(|i| self.fractional(i)).collect()
    }

    pub fn cartesian_points(&self, lattice: &Lattice) -> Vec<Vec2> {
        (0..self.len()).map(|i| lattice.to_cartesian(self.fractional(i))).collect()
    }

    /// Flat index of the point shifted by `shift` grid steps along each axis.
    pub fn shifted(&self, idx: usize, shift: [i64; 2]) -> usize {
        let [i0, i1] = self.indices(idx);
        let n = self.n as i64;
        let j0 = (i0 as i64 + shift[0]).rem_euclid(n) as usize;
        let j1 = (i1 as i64 + shift[1]).rem_euclid(n) as usize;
        self.flat([j0, j1])
    }
}

/// Γ-centred uniform grid of quasimomenta with equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BzGrid {
    n: usize,
    dim: usize,
    fractional: Vec<Vec2>,
    points: Vec<Vec2>,
}

impl BzGrid {
    pub fn new(lattice: &Lattice, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LtError::InvalidParameter {
                name: "n_b",
                value: 0.0,
                reason: "Brillouin-zone grid needs at least one point per axis",
            });
        }
        let dim = lattice.dim();
        let total = n.pow(dim as u32);
        let centred = |j: usize| {
            let f = j as f64 / n as f64;
            if f >= 0.5 {
                f - 1.0
            } else {
                f
            }
        };
        let mut fractional = Vec::with_capacity(total);
        for idx in 0..total {
            let (j0, j1) = if dim == 1 { (idx, 0) } else { (idx / n, idx % n) };
            fractional.push([centred(j0), if dim == 2 { centred(j1) } else { 0.0 }]);
        }
        let points = fractional
            .iter()
            .map(|f| lattice.reduce_to_bz(lattice.to_cartesian_dual(*f)))
            .collect();
        Ok(BzGrid { n, dim, fractional, points })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn fractional(&self) -> &[Vec2] {
        &self.fractional
    }

    /// Cartesian quasimomenta, each reduced to its shortest representative.
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Index of the grid point at `-xi`.
    pub fn partner(&self, idx: usize) -> usize {
        let n = self.n;
        match self.dim {
            1 => (n - idx % n) % n,
            _ => {
                let (j0, j1) = (idx / n, idx % n);
                ((n - j0) % n) * n + (n - j1) % n
            }
        }
    }
}

/// Dual-lattice vectors inside a cutoff sphere, ordered by length then
/// lexicographically by integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveBasis {
    ecut: f64,
    dim: usize,
    coords: Vec<[i64; 2]>,
    vectors: Vec<Vec2>,
    negated: Vec<usize>,
}

/// Enumerates all `G = Σ z_i b_i` with `|G|^2 <= ecut`.
pub fn dual_vectors(lattice: &Lattice, ecut: f64) -> PlaneWaveBasis {
    let dim = lattice.dim();
    let radius = ecut.max(0.0).sqrt();
    // |z_i| = |G · v_i| / 2π <= |G| |v_i| / 2π
    let bound = |i: usize| -> i64 {
        if i >= dim {
            0
        } else {
            (radius * norm2(lattice.basis()[i]).sqrt() / (2.0 * PI)).floor() as i64 + 1
        }
    };
    let (b0, b1) = (bound(0), bound(1));
    let mut entries: Vec<(i64, [i64; 2], Vec2)> = Vec::new();
    let scale = (2.0 * PI).powi(2);
    for z0 in -b0..=b0 {
        for z1 in -b1..=b1 {
            let g = lattice.to_cartesian_dual([z0 as f64, z1 as f64]);
            let n2 = norm2(g);
            if n2 <= ecut * (1.0 + 1e-12) || (z0 == 0 && z1 == 0) {
                // quantized length gives a strict ordering robust to last-bit noise
                let key = (n2 / scale * 1e9).round() as i64;
                entries.push((key, [z0, z1], g));
            }
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let coords: Vec<[i64; 2]> = entries.iter().map(|e| e.1).collect();
    let vectors: Vec<Vec2> = entries.iter().map(|e| e.2).collect();
    let lookup: std::collections::HashMap<[i64; 2], usize> =
        coords.iter().enumerate().map(|(i, z)| (*z, i)).collect();
    let negated = coords.iter().map(|z| lookup[&[-z[0], -z[1]]]).collect();
    PlaneWaveBasis { ecut, dim, coords, vectors, negated }
}

impl PlaneWaveBasis {
    pub fn ecut(&self) -> f64 {
        self.ecut
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[i64; 2]] {
        &self.coords
    }

    pub fn vectors(&self) -> &[Vec2] {
        &self.vectors
    }

    /// Index of `-G` for each basis vector.
    pub fn negated(&self) -> &[usize] {
        &self.negated
    }

    pub fn max_index(&self) -> i64 {
        self.coords.iter().flat_map(|z| [z[0].abs(), z[1].abs()]).max().unwrap_or(0)
    }

    /// Fails when two basis vectors would alias onto the same frequency of an
    /// `n`-point grid.
    pub fn check_grid(&self, n: usize) -> Result<()> {
        let limit = ((n.max(1) - 1) / 2) as i64;
        let needed = self.max_index();
        if needed > limit {
            return Err(LtError::BasisGridMismatch { needed, grid: n, limit });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_lattice_and_dual() {
        let l = make_lattice(LatticeKind::Line, 1).unwrap();
        assert_eq!(l.basis(), &[[1.0, 0.0]]);
        assert_abs_diff_eq!(l.dual()[0][0], 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(l.bz_volume(), 2.0 * PI);
    }

    #[test]
    fn square_lattice_and_dual() {
        let l = make_lattice(LatticeKind::Square, 2).unwrap();
        assert_eq!(l.basis(), &[[1.0, 0.0], [0.0, 1.0]]);
        assert_abs_diff_eq!(l.dual()[0][0], 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(l.dual()[0][1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.dual()[1][1], 2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn triangular_geometry() {
        let l = make_lattice(LatticeKind::Triangular, 2).unwrap();
        let expected_len = (2.0 / 3f64.sqrt()).sqrt();
        for v in l.basis() {
            assert_abs_diff_eq!(norm2(*v).sqrt(), expected_len, epsilon = 1e-14);
        }
        let cos = dot(l.basis()[0], l.basis()[1]) / expected_len.powi(2);
        assert_abs_diff_eq!(cos, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(l.cell_volume(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn every_lattice_is_dual_consistent() {
        for kind in [LatticeKind::Line, LatticeKind::Square, LatticeKind::Triangular, LatticeKind::Honeycomb] {
            let l = Lattice::new(kind);
            assert!(l.duality_defect() < 1e-12, "{kind}");
            assert_abs_diff_eq!(l.cell_volume(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn honeycomb_has_two_sites() {
        let l = Lattice::new(LatticeKind::Honeycomb);
        assert_eq!(l.motif().len(), 2);
        assert_eq!(LatticeKind::Honeycomb.default_bands(), 2);
    }

    #[test]
    fn kind_dimension_mismatch_is_rejected() {
        assert!(make_lattice(LatticeKind::Line, 2).is_err());
        assert!(make_lattice(LatticeKind::Square, 1).is_err());
        assert!("cubic".parse::<LatticeKind>().is_err());
        assert_eq!("Hexagonal".parse::<LatticeKind>().unwrap(), LatticeKind::Honeycomb);
    }

    #[test]
    fn line_plane_waves() {
        let l = Lattice::new(LatticeKind::Line);
        let b = dual_vectors(&l, (2.0 * PI * 2.5).powi(2));
        assert_eq!(b.len(), 5);
        let zs: Vec<i64> = b.coords().iter().map(|z| z[0]).collect();
        assert_eq!(zs, vec![0, -1, 1, -2, 2]);
    }

    #[test]
    fn tiny_cutoff_keeps_only_origin() {
        for kind in [LatticeKind::Line, LatticeKind::Square, LatticeKind::Triangular] {
            let b = dual_vectors(&Lattice::new(kind), 1e-9);
            assert_eq!(b.len(), 1);
            assert_eq!(b.coords()[0], [0, 0]);
        }
    }

    #[test]
    fn square_first_shell() {
        let b = dual_vectors(&Lattice::new(LatticeKind::Square), (2.0 * PI).powi(2));
        assert_eq!(b.len(), 5);
        assert_eq!(b.coords(), &[[0, 0], [-1, 0], [0, -1], [0, 1], [1, 0]]);
    }

    #[test]
    fn basis_is_closed_under_negation() {
        for kind in [LatticeKind::Line, LatticeKind::Square, LatticeKind::Triangular] {
            let b = dual_vectors(&Lattice::new(kind), 3000.0);
            for (i, z) in b.coords().iter().enumerate() {
                let j = b.negated()[i];
                assert_eq!(b.coords()[j], [-z[0], -z[1]]);
            }
        }
    }

    #[test]
    fn line_bz_grid() {
        let l = Lattice::new(LatticeKind::Line);
        let g = BzGrid::new(&l, 4).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0].rem_euclid(2.0 * PI)).collect();
        for (x, e) in xs.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI]) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(g.weight(), 0.25);
        assert_eq!(g.partner(1), 3);
        assert_eq!(g.partner(2), 2);
        assert_eq!(g.partner(0), 0);
    }

    #[test]
    fn square_cell_grid() {
        let l = Lattice::new(LatticeKind::Square);
        let g = CellGrid::new(&l, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert_abs_diff_eq!(g.weight(), 0.25);
        assert_eq!(g.fractional(3), [0.5, 0.5]);
    }

    #[test]
    fn grid_weights_sum_to_one() {
        for kind in [LatticeKind::Line, LatticeKind::Triangular] {
            let l = Lattice::new(kind);
            for n in [1, 3, 8] {
                let c = CellGrid::new(&l, n).unwrap();
                assert_abs_diff_eq!(c.weight() * c.len() as f64, 1.0, epsilon = 1e-14);
                let b = BzGrid::new(&l, n).unwrap();
                assert_abs_diff_eq!(b.weight() * b.len() as f64, 1.0, epsilon = 1e-14);
                assert_eq!(b.points()[0], [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn grids_are_deterministic() {
        let l = Lattice::new(LatticeKind::Triangular);
        assert_eq!(BzGrid::new(&l, 7).unwrap(), BzGrid::new(&l, 7).unwrap());
        assert_eq!(dual_vectors(&l, 900.0), dual_vectors(&l, 900.0));
    }

    #[test]
    fn default_cutoff_fits_grid_after_doubling() {
        for kind in [LatticeKind::Line, LatticeKind::Square, LatticeKind::Triangular] {
            let l = Lattice::new(kind);
            for n in [16, 24, 40] {
                let b = dual_vectors(&l, 2.0 * l.default_cutoff(n));
                b.check_grid(n).unwrap();
            }
        }
    }

    #[test]
    fn zero_sized_grids_are_rejected() {
        let l = Lattice::new(LatticeKind::Line);
        assert!(CellGrid::new(&l, 0).is_err());
        assert!(BzGrid::new(&l, 0).is_err());
    }
}
