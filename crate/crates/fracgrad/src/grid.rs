//! Uniform grids, cell sets with a far-field tag, scalar fields, and the
//! angular-sector algebra used to describe set membership far from the grid.
//!
//! Every geometric object in the suite lives on a [`GridSpec`]: a square box
//! subdivided into equal cells. A [`CellSet`] is a bitmask over those cells
//! plus a [`FarField`] describing membership outside the grid box, so that
//! complements and truncation-tail terms are exact for the set algebra the
//! solver needs. A [`ScalarField`] carries one value per cell together with
//! the constant assumed beyond the truncation radius.

use crate::error::{FracError, Result};

/// Linear index of a grid cell (row-major: `iy * cells + ix` in 2D).
pub type CellIndex = usize;

/// A uniform square grid: `cells` subdivisions per axis of a box with the
/// given lower corner and side length, in 1 or 2 dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Lower corner of the box (second coordinate ignored in 1D).
    pub origin: [f64; 2],
    /// Side length of the box (same on every axis).
    pub extent: f64,
    /// Number of cells per axis.
    pub cells: usize,
}

impl GridSpec {
    /// Creates a grid, validating dimension, extent, and cell count.
    pub fn new(dim: usize, origin: [f64; 2], extent: f64, cells: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(FracError::InvalidParameter {
                name: "dim",
                reason: format!("must be 1 or 2, got {dim}"),
            });
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(FracError::InvalidParameter {
                name: "extent",
                reason: format!("must be positive and finite, got {extent}"),
            });
        }
        if cells == 0 {
            return Err(FracError::InvalidParameter {
                name: "cells",
                reason: "must be at least 1".to_string(),
            });
        }
        Ok(GridSpec { dim, origin, extent, cells })
    }

    /// Cell side length.
    pub fn h(&self) -> f64 {
        self.extent / self.cells as f64
    }

    /// Cell measure h^n.
    pub fn cell_measure(&self) -> f64 {
        let h = self.h();
        if self.dim == 1 {
            h
        } else {
            h * h
        }
    }

    /// Total number of cells.
    pub fn num_cells(&self) -> usize {
        if self.dim == 1 {
            self.cells
        } else {
            self.cells * self.cells
        }
    }

    /// Linear index from per-axis indices (`iy` ignored in 1D).
    pub fn index(&self, ix: usize, iy: usize) -> CellIndex {
        debug_assert!(ix < self.cells && (self.dim == 1 || iy < self.cells));
        if self.dim == 1 {
            ix
        } else {
            iy * self.cells + ix
        }
    }

    /// Per-axis indices from a linear index (`iy` = 0 in 1D).
    pub fn coords(&self, i: CellIndex) -> (usize, usize) {
        if self.dim == 1 {
            (i, 0)
        } else {
            (i % self.cells, i / self.cells)
        }
    }

    /// Whether integer axis coordinates fall inside the grid.
    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        let n = self.cells as i64;
        ix >= 0 && ix < n && (self.dim == 1 || (iy >= 0 && iy < n))
    }

    /// Center of a cell.
    pub fn center(&self, i: CellIndex) -> [f64; 2] {
        let h = self.h();
        let (ix, iy) = self.coords(i);
        [
            self.origin[0] + (ix as f64 + 0.5) * h,
            if self.dim == 1 { 0.0 } else { self.origin[1] + (iy as f64 + 0.5) * h },
        ]
    }

    /// Center of the grid box, the reference point for far-field angles.
    pub fn box_center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.extent,
            if self.dim == 1 { 0.0 } else { self.origin[1] + 0.5 * self.extent },
        ]
    }

    /// Angle of the direction `(dx, dy)` in [0, 2π). In 1D the result is 0
    /// for +x and π for −x.
    pub fn angle_of(dx: f64, dy: f64) -> f64 {
        let a = dy.atan2(dx);
        if a < 0.0 {
            a + 2.0 * std::f64::consts::PI
        } else {
            a
        }
    }
}

/// Angular sectors: a normalized union of half-open intervals [a, b) of
/// angles in [0, 2π), kept sorted, disjoint, and merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Sectors {
    /// Sorted, pairwise-disjoint, non-adjacent intervals with
    /// 0 ≤ a < b ≤ 2π.
    intervals: Vec<(f64, f64)>,
}

const TAU: f64 = 2.0 * std::f64::consts::PI;

impl Sectors {
    /// No directions.
    pub fn empty() -> Self {
        Sectors { intervals: Vec::new() }
    }

    /// All directions.
    pub fn full() -> Self {
        Sectors { intervals: vec![(0.0, TAU)] }
    }

    /// Builds from arbitrary (possibly wrapping, overlapping, unsorted)
    /// intervals; each is taken modulo 2π and intervals spanning the cut at 0
    /// are split.
    pub fn from_intervals<I: IntoIterator<Item = (f64, f64)>>(iter: I) -> Self {
        let mut parts: Vec<(f64, f64)> = Vec::new();
        for (a, b) in iter {
            if !(b > a) {
                continue;
            }
            if b - a >= TAU {
                return Sectors::full();
            }
            let a0 = a.rem_euclid(TAU);
            let b0 = a0 + (b - a);
            if b0 <= TAU {
                parts.push((a0, b0));
            } else {
                parts.push((a0, TAU));
                parts.push((0.0, b0 - TAU));
            }
        }
        Self::normalize(parts)
    }

    fn normalize(mut parts: Vec<(f64, f64)>) -> Self {
        parts.retain(|&(a, b)| b > a);
        parts.sort_by(|x, y| x.partial_cmp(y).expect("angles are finite"));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in parts {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Sectors { intervals: merged }
    }

    /// The normalized intervals.
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Total angular measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }

    /// Whether the direction θ (any real angle) belongs to the sectors.
    pub fn contains(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(TAU);
        self.intervals.iter().any(|&(a, b)| t >= a && t < b)
    }

    /// Union of two sector sets.
    pub fn union(&self, other: &Sectors) -> Sectors {
        let mut parts = self.intervals.clone();
        parts.extend_from_slice(&other.intervals);
        Self::normalize(parts)
    }

    /// Intersection of two sector sets.
    pub fn intersect(&self, other: &Sectors) -> Sectors {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let lo = a.max(c);
                let hi = b.min(d);
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        Self::normalize(out)
    }

    /// Complement within [0, 2π).
    pub fn complement(&self) -> Sectors {
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < TAU {
            out.push((cursor, TAU));
        }
        Self::normalize(out)
    }

    /// Sectors rotated by π (the antipodal directions).
    pub fn rotate_half_turn(&self) -> Sectors {
        Self::from_intervals(
            self.intervals
                .iter()
                .map(|&(a, b)| (a + std::f64::consts::PI, b + std::f64::consts::PI)),
        )
    }
}

/// Set membership outside the grid box (equivalently, beyond any truncation
/// radius that the grid covers): nothing, everything, or a cone of
/// directions measured from the grid box center.
#[derive(Debug, Clone, PartialEq)]
pub enum FarField {
    /// The set is bounded: no far membership.
    Empty,
    /// The complement is bounded: everything far away belongs to the set.
    Full,
    /// Conical far shape: a far point belongs to the set iff its direction
    /// from the grid box center lies in the sectors.
    Cone(Sectors),
}

impl FarField {
    /// Far field of the complement set.
    pub fn complement(&self) -> FarField {
        match self {
            FarField::Empty => FarField::Full,
            FarField::Full => FarField::Empty,
            FarField::Cone(s) => FarField::Cone(s.complement()),
        }
    }

    /// Whether a far point in direction θ belongs to the set.
    pub fn contains_direction(&self, theta: f64) -> bool {
        match self {
            FarField::Empty => false,
            FarField::Full => true,
            FarField::Cone(s) => s.contains(theta),
        }
    }

    /// The sectors of directions belonging to the set.
    pub fn sectors(&self) -> Sectors {
        match self {
            FarField::Empty => Sectors::empty(),
            FarField::Full => Sectors::full(),
            FarField::Cone(s) => s.clone(),
        }
    }

    fn combine(a: &FarField, b: &FarField, union: bool) -> FarField {
        let s = if union {
            a.sectors().union(&b.sectors())
        } else {
            a.sectors().intersect(&b.sectors())
        };
        FarField::from_sectors(s)
    }

    /// Canonical form: full-measure sectors become `Full`, empty become
    /// `Empty`.
    pub fn from_sectors(s: Sectors) -> FarField {
        if s.intervals().is_empty() {
            FarField::Empty
        } else if (s.measure() - TAU).abs() < 1e-12 {
            FarField::Full
        } else {
            FarField::Cone(s)
        }
    }
}

/// A set of grid cells plus a far-field tag. Complements, unions, and
/// intersections act on both parts, so the algebra stays exact for bounded
/// sets, cobounded sets, and cones alike.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    grid: GridSpec,
    bits: Vec<u64>,
    far: FarField,
}

impl CellSet {
    /// The empty set on a grid (far field empty).
    pub fn empty(grid: GridSpec) -> Self {
        let words = grid.num_cells().div_ceil(64);
        CellSet { grid, bits: vec![0; words], far: FarField::Empty }
    }

    /// The set of all cells (far field full — this is "all of space").
    pub fn all(grid: GridSpec) -> Self {
        let mut s = Self::empty(grid);
        for i in 0..grid.num_cells() {
            s.insert(i);
        }
        s.far = FarField::Full;
        s
    }

    /// The grid this set lives on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The far-field tag.
    pub fn far(&self) -> &FarField {
        &self.far
    }

    /// Replaces the far-field tag.
    pub fn with_far(mut self, far: FarField) -> Self {
        self.far = far;
        self
    }

    /// Membership of a grid cell.
    pub fn contains(&self, i: CellIndex) -> bool {
        debug_assert!(i < self.grid.num_cells());
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    /// Membership of integer axis coordinates that may fall off the grid;
    /// off-grid coordinates are resolved by the far field.
    pub fn contains_extended(&self, ix: i64, iy: i64) -> bool {
        if self.grid.in_bounds(ix, iy) {
            self.contains(self.grid.index(ix as usize, iy as usize))
        } else {
            let h = self.grid.h();
            let c = self.grid.box_center();
            let x = self.grid.origin[0] + (ix as f64 + 0.5) * h - c[0];
            let y = if self.grid.dim == 1 {
                0.0
            } else {
                self.grid.origin[1] + (iy as f64 + 0.5) * h - c[1]
            };
            self.far.contains_direction(GridSpec::angle_of(x, y))
        }
    }

    /// Inserts a cell.
    pub fn insert(&mut self, i: CellIndex) {
        debug_assert!(i < self.grid.num_cells());
        self.bits[i / 64] |= 1 << (i % 64);
    }

    /// Removes a cell.
    pub fn remove(&mut self, i: CellIndex) {
        debug_assert!(i < self.grid.num_cells());
        self.bits[i / 64] &= !(1 << (i % 64));
    }

    /// Number of grid cells in the set (far field not counted).
    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lebesgue measure of the gridded part: count · h^n.
    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_measure()
    }

    /// True if no grid cell is in the set (far field may still be nonempty).
    pub fn is_empty_on_grid(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Iterates the member cells in ascending linear order.
    pub fn iter(&self) -> impl Iterator<Item = CellIndex> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let b = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    /// Member cells as a vector (ascending).
    pub fn cells(&self) -> Vec<CellIndex> {
        self.iter().collect()
    }

    fn assert_same_grid(&self, other: &CellSet) {
        assert!(
            self.grid == other.grid,
            "cell sets live on different grids; rebuild them on a common grid first"
        );
    }

    /// Set union (far fields combined).
    pub fn union(&self, other: &CellSet) -> CellSet {
        self.assert_same_grid(other);
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        CellSet { grid: self.grid, bits, far: FarField::combine(&self.far, &other.far, true) }
    }

    /// Set intersection (far fields combined).
    pub fn intersect(&self, other: &CellSet) -> CellSet {
        self.assert_same_grid(other);
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        CellSet { grid: self.grid, bits, far: FarField::combine(&self.far, &other.far, false) }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &CellSet) -> CellSet {
        self.intersect(&other.complement())
    }

    /// Complement: flips every grid cell and the far field.
    pub fn complement(&self) -> CellSet {
        let n = self.grid.num_cells();
        let mut bits: Vec<u64> = self.bits.iter().map(|w| !w).collect();
        let tail = n % 64;
        if tail != 0 {
            let last = bits.len() - 1;
            bits[last] &= (1u64 << tail) - 1;
        }
        CellSet { grid: self.grid, bits, far: self.far.complement() }
    }

    /// Whether `self ⊆ other` on the grid (far fields not compared).
    pub fn is_subset_on_grid(&self, other: &CellSet) -> bool {
        self.assert_same_grid(other);
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Morphological dilation: all cells whose center lies at distance
    /// strictly less than `r + h/2` from the center of some member cell.
    /// The far field is preserved.
    pub fn dilate(&self, r: f64) -> CellSet {
        let h = self.grid.h();
        let reach = r + 0.5 * h;
        let w = (reach / h).ceil() as i64;
        let mut offsets: Vec<(i64, i64)> = Vec::new();
        let ys: Vec<i64> = if self.grid.dim == 1 { vec![0] } else { (-w..=w).collect() };
        for dy in &ys {
            for dx in -w..=w {
                let d = h * (((dx * dx + dy * dy) as f64).sqrt());
                if d < reach {
                    offsets.push((dx, *dy));
                }
            }
        }
        let mut out = CellSet::empty(self.grid);
        out.far = self.far.clone();
        for i in self.iter() {
            let (ix, iy) = self.grid.coords(i);
            for &(dx, dy) in &offsets {
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if self.grid.in_bounds(jx, jy) {
                    out.insert(self.grid.index(jx as usize, jy as usize));
                }
            }
        }
        out
    }

    /// Largest center-to-center distance between member cells (0 for sets
    /// with fewer than two cells). Computed on boundary cells only, which is
    /// exact because extreme points of a finite point set are extreme among
    /// cells with an exterior neighbor.
    pub fn center_diameter(&self) -> f64 {
        let boundary: Vec<CellIndex> = self
            .iter()
            .filter(|&i| {
                let (ix, iy) = self.grid.coords(i);
                self.neighbor_offsets().iter().any(|&(dx, dy)| {
                    let jx = ix as i64 + dx;
                    let jy = iy as i64 + dy;
                    !self.grid.in_bounds(jx, jy)
                        || !self.contains(self.grid.index(jx as usize, jy as usize))
                })
            })
            .collect();
        let mut best: f64 = 0.0;
        for (a, &i) in boundary.iter().enumerate() {
            let ci = self.grid.center(i);
            for &j in &boundary[a + 1..] {
                let cj = self.grid.center(j);
                let d = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2)).sqrt();
                best = best.max(d);
            }
        }
        best
    }

    /// Face-neighbor offsets for the grid dimension.
    pub fn neighbor_offsets(&self) -> Vec<(i64, i64)> {
        if self.grid.dim == 1 {
            vec![(-1, 0), (1, 0)]
        } else {
            vec![(-1, 0), (1, 0), (0, -1), (0, 1)]
        }
    }

    /// Whether cell `i` is a member that touches the complement within its
    /// 3ⁿ neighborhood (diagonals included; off-grid neighbors resolved by
    /// far-field direction). This is the measure-theoretic inner boundary
    /// in the grid sense.
    pub fn is_inner_boundary(&self, i: CellIndex) -> bool {
        if !self.contains(i) {
            return false;
        }
        let (ix, iy) = self.grid.coords(i);
        let range: &[i64] = if self.grid.dim == 1 { &[0] } else { &[-1, 0, 1] };
        for &dy in range {
            for dx in [-1i64, 0, 1] {
                if dx == 0 && dy == 0 {
                    continue;
                }
                if !self.contains_extended(ix as i64 + dx, iy as i64 + dy) {
                    return true;
                }
            }
        }
        false
    }

    /// All inner-boundary cells as a bounded set (far field empty).
    pub fn inner_boundary(&self) -> CellSet {
        let mut b = CellSet::empty(self.grid);
        for i in self.iter() {
            if self.is_inner_boundary(i) {
                b.insert(i);
            }
        }
        b
    }

    /// Number of face-connected components of the gridded part.
    pub fn component_count(&self) -> usize {
        let n = self.grid.num_cells();
        let mut seen = vec![false; n];
        let offs = self.neighbor_offsets();
        let mut components = 0;
        for start in self.iter() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (ix, iy) = self.grid.coords(i);
                for &(dx, dy) in &offs {
                    let jx = ix as i64 + dx;
                    let jy = iy as i64 + dy;
                    if self.grid.in_bounds(jx, jy) {
                        let j = self.grid.index(jx as usize, jy as usize);
                        if self.contains(j) && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        components
    }
}

/// A scalar field on a grid: one value per cell (interior cells hold the
/// unknown/solution, exterior cells hold the prescribed datum) plus the
/// constant value assumed beyond the truncation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    /// The grid every index refers to.
    pub grid: GridSpec,
    /// Interior cells (the domain Ω). Its far field must be `Empty`.
    pub omega: CellSet,
    /// One value per grid cell.
    pub values: Vec<f64>,
    /// Constant value beyond the truncation radius / off the grid.
    pub far_value: f64,
}

impl ScalarField {
    /// Creates a field with every value set to `fill` (exterior and interior
    /// alike) and the given far constant.
    pub fn constant(grid: GridSpec, omega: CellSet, fill: f64, far_value: f64) -> Result<Self> {
        if omega.grid() != &grid {
            return Err(FracError::GridMismatch("omega lives on a different grid".into()));
        }
        if omega.far() != &FarField::Empty {
            return Err(FracError::InvalidParameter {
                name: "omega",
                reason: "the domain must be bounded (far field Empty)".into(),
            });
        }
        Ok(ScalarField { grid, omega, values: vec![fill; grid.num_cells()], far_value })
    }

    /// The superlevel set {cells : value ≥ t}, far field set by the far
    /// constant.
    pub fn superlevel(&self, t: f64) -> CellSet {
        let mut s = CellSet::empty(self.grid);
        for i in 0..self.grid.num_cells() {
            if self.values[i] >= t {
                s.insert(i);
            }
        }
        s.with_far(if self.far_value >= t { FarField::Full } else { FarField::Empty })
    }

    /// Sorted distinct values taken by the datum: every exterior grid cell's
    /// value plus the far constant. These are the thresholds at which the
    /// exterior condition of the level problem can change.
    pub fn exterior_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = (0..self.grid.num_cells())
            .filter(|&i| !self.omega.contains(i))
            .map(|i| self.values[i])
            .collect();
        levels.push(self.far_value);
        levels.sort_by(|a, b| a.partial_cmp(b).expect("datum values are finite"));
        levels.dedup();
        levels
    }

    /// Minimum and maximum over the datum (exterior cells and far constant).
    pub fn exterior_range(&self) -> (f64, f64) {
        let levels = self.exterior_levels();
        (levels[0], *levels.last().expect("levels include the far value"))
    }

    /// Maximum |value| over interior and exterior cells and the far constant.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(self.far_value.abs(), |m, v| m.max(v.abs()))
    }
}
