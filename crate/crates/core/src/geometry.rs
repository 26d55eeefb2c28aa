//! Axis-aligned regions, the uniform grid partition of the modelled domain,
//! scaled regions, inscribed L∞ balls and voxel tilings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an abstract state. Partition cells are `0..v`; the absorbing
/// region (everything outside the domain) is `v`.
pub type StateId = usize;

/// Closed axis-aligned box `[lower, upper]` with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl HyperRect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidGeometry(format!(
                "bound dimensions differ or are empty ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (q, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "dimension {q}: lower {lo} must be finite and below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Builds a box without validation; callers guarantee `lower < upper`.
    pub(crate) fn from_bounds_unchecked(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (hi - lo))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .collect()
    }

    /// Closed membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// True iff `other ⊆ self`.
    pub fn contains_box(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|q| other.lower[q] >= self.lower[q] && other.upper[q] <= self.upper[q])
    }

    /// True iff the interiors overlap (positive-measure intersection).
    pub fn interiors_overlap(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|q| other.lower[q] < self.upper[q] && other.upper[q] > self.lower[q])
    }

    /// Minkowski shift by a displacement vector.
    pub fn translated(&self, w: &[f64]) -> HyperRect {
        HyperRect {
            lower: self.lower.iter().zip(w).map(|(a, b)| a + b).collect(),
            upper: self.upper.iter().zip(w).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Region scaled about its center: `R(λ)` keeps the center and multiplies
/// every half-width by `λ`. `λ = 0` collapses to the center point.
pub fn scale_region(region: &HyperRect, lambda: f64) -> Result<HyperRect> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scaling factor must be finite and nonnegative, got {lambda}"
        )));
    }
    let (lower, upper) = (0..region.dim())
        .map(|q| {
            let c = 0.5 * (region.lower[q] + region.upper[q]);
            let h = 0.5 * (region.upper[q] - region.lower[q]);
            (c - lambda * h, c + lambda * h)
        })
        .unzip();
    Ok(HyperRect::from_bounds_unchecked(lower, upper))
}

/// Radius of the largest `x'`-centred L∞ ball inside `region(λ)`:
/// `min_q (λ·h_q − |x'_q − d_q|)`.
///
/// Negative when `x'` lies outside the scaled region; callers read that as
/// "no coverage".
pub fn inscribed_ball_radius(region: &HyperRect, lambda: f64, x_prime: &[f64]) -> f64 {
    (0..region.dim())
        .map(|q| {
            let c = 0.5 * (region.lower[q] + region.upper[q]);
            let h = 0.5 * (region.upper[q] - region.lower[q]);
            lambda * h - (x_prime[q] - c).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxRelation {
    Disjoint,
    Intersecting,
    Contained,
}

/// Classifies `shifted` against `cell`. Faces that merely touch are
/// `Disjoint`; containment uses closed boxes.
pub fn box_relation(cell: &HyperRect, shifted: &HyperRect) -> BoxRelation {
    if cell.contains_box(shifted) {
        BoxRelation::Contained
    } else if cell.interiors_overlap(shifted) {
        BoxRelation::Intersecting
    } else {
        BoxRelation::Disjoint
    }
}

/// Uniform rectangular grid over a bounded domain, plus the implicit
/// absorbing region outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    domain: HyperRect,
    cells_per_dim: Vec<usize>,
    cell_width: Vec<f64>,
}

impl Partition {
    pub fn new(domain: HyperRect, cells_per_dim: Vec<usize>) -> Result<Self> {
        if cells_per_dim.len() != domain.dim() {
            return Err(Error::InvalidGeometry(format!(
                "domain has {} dimensions but {} cell counts were given",
                domain.dim(),
                cells_per_dim.len()
            )));
        }
        if cells_per_dim.contains(&0) {
            return Err(Error::InvalidGeometry(
                "every dimension needs at least one cell".into(),
            ));
        }
        let cell_width = domain
            .widths()
            .iter()
            .zip(&cells_per_dim)
            .map(|(w, &c)| w / c as f64)
            .collect();
        Ok(Self {
            domain,
            cells_per_dim,
            cell_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &HyperRect {
        &self.domain
    }

    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells_per_dim
    }

    pub fn cell_width(&self) -> &[f64] {
        &self.cell_width
    }

    /// Number of grid cells `v`.
    pub fn num_cells(&self) -> usize {
        self.cells_per_dim.iter().product()
    }

    /// Id of the absorbing region (the complement of the domain).
    pub fn absorbing(&self) -> StateId {
        self.num_cells()
    }

    /// Grid multi-index of a cell. The first dimension varies fastest.
    pub fn multi_index(&self, cell: StateId) -> Vec<usize> {
        let mut rest = cell;
        self.cells_per_dim
            .iter()
            .map(|&c| {
                let i = rest % c;
                rest /= c;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> StateId {
        idx.iter()
            .zip(&self.cells_per_dim)
            .rev()
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn cell_lower(&self, q: usize, k: usize) -> f64 {
        self.domain.lower[q] + k as f64 * self.cell_width[q]
    }

    pub fn cell_upper(&self, q: usize, k: usize) -> f64 {
        if k + 1 == self.cells_per_dim[q] {
            self.domain.upper[q]
        } else {
            self.domain.lower[q] + (k + 1) as f64 * self.cell_width[q]
        }
    }

    /// Cell `i` as a closed box. Panics on the absorbing id.
    pub fn cell(&self, cell: StateId) -> HyperRect {
        assert!(cell < self.num_cells(), "cell {cell} out of range");
        let idx = self.multi_index(cell);
        let lower = (0..self.dim()).map(|q| self.cell_lower(q, idx[q])).collect();
        let upper = (0..self.dim()).map(|q| self.cell_upper(q, idx[q])).collect();
        HyperRect::from_bounds_unchecked(lower, upper)
    }

    pub fn cells(&self) -> impl Iterator<Item = HyperRect> + '_ {
        (0..self.num_cells()).map(|i| self.cell(i))
    }

    /// Grid index along dimension `q`, or `None` outside the domain.
    /// Cells are half-open `[lower, upper)`; the upper domain face is closed.
    pub fn axis_index(&self, q: usize, v: f64) -> Option<usize> {
        let lo = self.domain.lower[q];
        let hi = self.domain.upper[q];
        if !(v >= lo && v <= hi) {
            return None;
        }
        let k = ((v - lo) / self.cell_width[q]).floor() as usize;
        Some(k.min(self.cells_per_dim[q] - 1))
    }

    /// The abstraction function: the cell containing `x`, or the absorbing id.
    pub fn region_of(&self, x: &[f64]) -> StateId {
        debug_assert_eq!(x.len(), self.dim());
        let mut flat = 0;
        let mut stride = 1;
        for (q, v) in x.iter().enumerate() {
            match self.axis_index(q, *v) {
                Some(k) => flat += k * stride,
                None => return self.absorbing(),
            }
            stride *= self.cells_per_dim[q];
        }
        flat
    }

    pub fn voxelize(&self, cell: StateId, voxels_per_dim: &[usize]) -> Result<Voxelization> {
        if cell >= self.num_cells() {
            return Err(Error::InvalidArgument(format!(
                "state {cell} is the absorbing region or out of range"
            )));
        }
        Voxelization::new(cell, self.cell(cell), voxels_per_dim)
    }
}

/// Uniform tiling of one partition cell into `∏ voxels_per_dim` voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct Voxelization {
    region_index: StateId,
    region: HyperRect,
    voxels_per_dim: Vec<usize>,
    half_width: Vec<f64>,
}

impl Voxelization {
    pub fn new(region_index: StateId, region: HyperRect, voxels_per_dim: &[usize]) -> Result<Self> {
        if voxels_per_dim.len() != region.dim() || voxels_per_dim.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "voxel grid {voxels_per_dim:?} does not match a {}-dimensional region",
                region.dim()
            )));
        }
        let half_width = region
            .widths()
            .iter()
            .zip(voxels_per_dim)
            .map(|(w, &m)| w / (2.0 * m as f64))
            .collect();
        Ok(Self {
            region_index,
            region,
            voxels_per_dim: voxels_per_dim.to_vec(),
            half_width,
        })
    }

    pub fn region_index(&self) -> StateId {
        self.region_index
    }

    pub fn region(&self) -> &HyperRect {
        &self.region
    }

    pub fn voxels_per_dim(&self) -> &[usize] {
        &self.voxels_per_dim
    }

    pub fn len(&self) -> usize {
        self.voxels_per_dim.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Voxel half-widths `δ_φ` (identical for all voxels).
    pub fn half_width(&self) -> &[f64] {
        &self.half_width
    }

    /// Centre of voxel `k` (first dimension fastest, as for cells).
    pub fn center(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.region.dim()];
        self.center_into(k, &mut out);
        out
    }

    pub fn center_into(&self, k: usize, out: &mut [f64]) {
        let mut rest = k;
        for q in 0..self.region.dim() {
            let m = self.voxels_per_dim[q];
            let iq = rest % m;
            rest /= m;
            out[q] = self.region.lower[q] + (2 * iq + 1) as f64 * self.half_width[q];
        }
    }

    pub fn voxel(&self, k: usize) -> HyperRect {
        let c = self.center(k);
        let lower = c.iter().zip(&self.half_width).map(|(c, h)| c - h).collect();
        let upper = c.iter().zip(&self.half_width).map(|(c, h)| c + h).collect();
        HyperRect::from_bounds_unchecked(lower, upper)
    }

    /// Voxel containing `x`, clamped onto the tiling for points on or just
    /// outside the region boundary.
    pub fn voxel_of(&self, x: &[f64]) -> usize {
        let mut flat = 0;
        let mut stride = 1;
        for q in 0..self.region.dim() {
            let m = self.voxels_per_dim[q];
            let rel = (x[q] - self.region.lower[q]) / (2.0 * self.half_width[q]);
            let iq = if rel <= 0.0 {
                0
            } else {
                (rel.floor() as usize).min(m - 1)
            };
            flat += iq * stride;
            stride *= m;
        }
        flat
    }
}
