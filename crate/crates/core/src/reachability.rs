//! Sample-based underapproximation of backward reachable sets.
//!
//! For a source cell `R_i` and a destination cell `R_j`, every nominal sample
//! `(x, u, x')` with `x ∈ R_i`, `x' ∈ R_j` certifies the L∞ neighbourhood
//!
//! ```text
//! A_j(x) = { y ∈ R_i : ‖J⁺(R_i)·|x − y|‖∞ ≤ r_j(x', λ) }
//! ```
//!
//! as a subset of `Pre(R_j(λ))`. Each cell is tiled into voxels; a voxel is
//! covered once some sample's `A_j(x)` contains it. The smallest scaling
//! factor that covers a voxel is over-approximated by the chord of
//! `λ ↦ r_j(x', λ)` through `λ = 1` and `λ = 2`, and the pair's factor is the
//! max over voxels of the min over samples.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{inscribed_ball_radius, HyperRect, Partition, StateId, Voxelization};
use crate::systems::{cell_samples, input_grid, Dataset, DynamicsModel, JacobianBound, SamplingGrid};

/// Chord over-approximation of the smallest covering factor:
///
/// `λ⁺ = 1 + (‖J⁺·(|x − c_φ| + δ_φ)‖∞ − r₁) / (r₂ − r₁)`
pub fn lambda_plus(
    jplus: &JacobianBound,
    x: &[f64],
    c_phi: &[f64],
    delta_phi: &[f64],
    r1: f64,
    r2: f64,
) -> Result<f64> {
    if !(r2 > r1) {
        return Err(Error::DegenerateSample { r1, r2 });
    }
    let reach = voxel_reach(jplus, x, c_phi, delta_phi);
    Ok(1.0 + (reach - r1) / (r2 - r1))
}

/// `‖J⁺·(|x − c_φ| + δ_φ)‖∞`: the radius a ball around `x'` must have for
/// `A_j(x)` to swallow the voxel.
#[inline]
pub fn voxel_reach(jplus: &JacobianBound, x: &[f64], c_phi: &[f64], delta_phi: &[f64]) -> f64 {
    let mut v = [0.0f64; MAX_INLINE_DIM];
    if x.len() <= MAX_INLINE_DIM {
        for q in 0..x.len() {
            v[q] = (x[q] - c_phi[q]).abs() + delta_phi[q];
        }
        jplus.apply_inf_norm(&v[..x.len()])
    } else {
        let v: Vec<f64> = (0..x.len())
            .map(|q| (x[q] - c_phi[q]).abs() + delta_phi[q])
            .collect();
        jplus.apply_inf_norm(&v)
    }
}

const MAX_INLINE_DIM: usize = 8;

/// Exact smallest `λ` with `B_t(x') ⊆ target(λ)` for a rectangular target,
/// where `t = ‖J⁺·(|x − c_φ| + δ_φ)‖∞`.
pub fn lambda_star_rect(
    jplus: &JacobianBound,
    x: &[f64],
    c_phi: &[f64],
    delta_phi: &[f64],
    target: &HyperRect,
    x_prime: &[f64],
) -> f64 {
    let t = voxel_reach(jplus, x, c_phi, delta_phi);
    let d = target.center();
    let h = target.half_widths();
    (0..target.dim())
        .map(|q| (t + (x_prime[q] - d[q]).abs()) / h[q])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Membership in `A_j(x) = { y ∈ source : ‖J⁺·|x − y|‖∞ ≤ r }`.
pub fn membership_a(jplus: &JacobianBound, x: &[f64], r: f64, y: &[f64], source: &HyperRect) -> bool {
    if !source.contains(y) {
        return false;
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
    jplus.apply_inf_norm(&d) <= r
}

/// Scaling factor and per-voxel controls for one `(i, j)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub target: StateId,
    pub lambda: f64,
    /// Flat per-voxel inputs (`voxels × input_dim`).
    pub inputs: Vec<f64>,
    /// Dataset index of the sample attaining the per-voxel minimum.
    pub triples: Vec<usize>,
}

impl PairEntry {
    pub fn control(&self, voxel: usize, input_dim: usize) -> &[f64] {
        &self.inputs[voxel * input_dim..(voxel + 1) * input_dim]
    }
}

/// Result of the max-min over one pair, before it is turned into a
/// [`PairEntry`]. `argmin[φ]` indexes into the sample list handed in.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLambda {
    pub lambda: f64,
    pub argmin: Vec<Option<usize>>,
    pub degenerate: usize,
}

/// Samples of one `(i, j)` bucket in flat layout.
pub struct BucketView<'a> {
    pub state_dim: usize,
    pub xs: &'a [f64],
    pub x_next: &'a [f64],
}

/// `λ_{i→j} = max_φ min_samples λ⁺(φ, sample)`, with ties in the inner min
/// broken by the earliest sample. `+∞` if any voxel has no usable sample.
pub fn max_min_lambda(
    jplus: &JacobianBound,
    voxels: &Voxelization,
    target: &HyperRect,
    bucket: &BucketView<'_>,
) -> PairLambda {
    let n = bucket.state_dim;
    let count = bucket.xs.len() / n;
    let mut r1 = Vec::with_capacity(count);
    let mut inv_span = Vec::with_capacity(count);
    let mut usable = Vec::with_capacity(count);
    let mut degenerate = 0;
    for k in 0..count {
        let xp = &bucket.x_next[k * n..(k + 1) * n];
        let a = inscribed_ball_radius(target, 1.0, xp);
        let b = inscribed_ball_radius(target, 2.0, xp);
        if b > a {
            usable.push(k);
            r1.push(a);
            inv_span.push(1.0 / (b - a));
        } else {
            degenerate += 1;
        }
    }

    let m = voxels.len();
    let delta = voxels.half_width();
    let mut argmin = vec![None; m];
    let mut lambda = f64::NEG_INFINITY;
    let mut c = vec![0.0; n];
    for (phi, slot) in argmin.iter_mut().enumerate() {
        voxels.center_into(phi, &mut c);
        let mut best = f64::INFINITY;
        let mut best_k = None;
        for (s, &k) in usable.iter().enumerate() {
            let x = &bucket.xs[k * n..(k + 1) * n];
            let reach = voxel_reach(jplus, x, &c, delta);
            let lp = 1.0 + (reach - r1[s]) * inv_span[s];
            if lp < best {
                best = lp;
                best_k = Some(k);
            }
        }
        *slot = best_k;
        lambda = lambda.max(best);
    }
    if m == 0 {
        lambda = f64::INFINITY;
    }
    PairLambda {
        lambda,
        argmin,
        degenerate,
    }
}

/// `λ_{i→j}` and per-voxel minimisers from a materialised dataset. Only
/// samples with `x ∈ R_i` and `x' ∈ R_j` take part; the returned indices are
/// dataset indices.
pub fn compute_lambda_ij(
    dataset: &Dataset,
    partition: &Partition,
    voxels: &Voxelization,
    target: StateId,
    jplus: &JacobianBound,
) -> PairLambda {
    let source = voxels.region_index();
    let n = partition.dim();
    let members: Vec<usize> = dataset.by_destination[target]
        .iter()
        .copied()
        .filter(|&idx| partition.region_of(&dataset.triples[idx].x) == source)
        .collect();
    let mut xs = Vec::with_capacity(members.len() * n);
    let mut x_next = Vec::with_capacity(members.len() * n);
    for &idx in &members {
        xs.extend_from_slice(&dataset.triples[idx].x);
        x_next.extend_from_slice(&dataset.triples[idx].x_next);
    }
    let view = BucketView {
        state_dim: n,
        xs: &xs,
        x_next: &x_next,
    };
    let mut res = max_min_lambda(jplus, voxels, &partition.cell(target), &view);
    for a in res.argmin.iter_mut().flatten() {
        *a = members[*a];
    }
    res
}

/// Scaling factors of every sampled `(i, j)` pair, with the enabling bound
/// `Λ`. Factors do not depend on `Λ`, so re-thresholding is free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTable {
    num_cells: usize,
    input_dim: usize,
    voxels_per_dim: Vec<usize>,
    lambda_max: f64,
    /// Per source cell, entries sorted by target.
    pairs: Vec<Vec<PairEntry>>,
    degenerate_samples: usize,
}

impl ActionTable {
    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn voxels_per_dim(&self) -> &[usize] {
        &self.voxels_per_dim
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn degenerate_samples(&self) -> usize {
        self.degenerate_samples
    }

    /// Same factors, different enabling bound.
    pub fn with_lambda_max(&self, lambda_max: f64) -> Self {
        Self {
            lambda_max,
            ..self.clone()
        }
    }

    /// All pairs with a finite factor leaving `source`.
    pub fn entries(&self, source: StateId) -> &[PairEntry] {
        self.pairs.get(source).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entry(&self, source: StateId, target: StateId) -> Option<&PairEntry> {
        let row = self.pairs.get(source)?;
        row.binary_search_by_key(&target, |e| e.target)
            .ok()
            .map(|k| &row[k])
    }

    /// `λ_{i→j}`, `+∞` for pairs without samples.
    pub fn lambda(&self, source: StateId, target: StateId) -> f64 {
        self.entry(source, target).map_or(f64::INFINITY, |e| e.lambda)
    }

    pub fn is_enabled(&self, source: StateId, target: StateId) -> bool {
        self.lambda(source, target) <= self.lambda_max
    }

    /// `Act(s_i)` as entries, in target order.
    pub fn enabled(&self, source: StateId) -> impl Iterator<Item = &PairEntry> + '_ {
        let cap = self.lambda_max;
        self.entries(source).iter().filter(move |e| e.lambda <= cap)
    }

    pub fn enabled_count(&self) -> usize {
        (0..self.num_cells).map(|i| self.enabled(i).count()).sum()
    }

    /// One JSON object per line: source, target, λ, enabled flag, voxel count.
    pub fn write_diagnostics(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let voxels: usize = self.voxels_per_dim.iter().product();
        for (i, row) in self.pairs.iter().enumerate() {
            for e in row {
                let rec = serde_json::json!({
                    "source": i,
                    "target": e.target,
                    "lambda": e.lambda,
                    "enabled": e.lambda <= self.lambda_max,
                    "voxels": voxels,
                });
                writeln!(w, "{rec}").map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

struct RowResult {
    entries: Vec<PairEntry>,
    degenerate: usize,
}

fn validate_lambda_max(lambda_max: f64) -> Result<()> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "maximum scaling factor must be positive, got {lambda_max}"
        )));
    }
    Ok(())
}

/// Groups sample indices by destination cell (absorbing dropped), keeping
/// sample order inside each group.
fn group_by_destination(dest: &[StateId], absorbing: StateId) -> Vec<(StateId, Vec<usize>)> {
    let mut order: Vec<usize> = (0..dest.len()).filter(|&k| dest[k] != absorbing).collect();
    order.sort_by_key(|&k| dest[k]);
    let mut groups: Vec<(StateId, Vec<usize>)> = Vec::new();
    for k in order {
        match groups.last_mut() {
            Some((j, ks)) if *j == dest[k] => ks.push(k),
            _ => groups.push((dest[k], vec![k])),
        }
    }
    groups
}

/// Shared per-source computation. `x`, `x_next`, `u` fetch sample data by
/// local index; `global` maps a local index to its dataset index.
fn source_row(
    partition: &Partition,
    voxels: &Voxelization,
    jplus: &JacobianBound,
    groups: Vec<(StateId, Vec<usize>)>,
    x: impl Fn(usize) -> Vec<f64>,
    x_next: impl Fn(usize) -> Vec<f64>,
    u: impl Fn(usize) -> Vec<f64>,
    global: impl Fn(usize) -> usize,
) -> RowResult {
    let n = partition.dim();
    let mut entries = Vec::with_capacity(groups.len());
    let mut degenerate = 0;
    for (target, ks) in groups {
        let mut xs = Vec::with_capacity(ks.len() * n);
        let mut xn = Vec::with_capacity(ks.len() * n);
        for &k in &ks {
            xs.extend(x(k));
            xn.extend(x_next(k));
        }
        let view = BucketView {
            state_dim: n,
            xs: &xs,
            x_next: &xn,
        };
        let res = max_min_lambda(jplus, voxels, &partition.cell(target), &view);
        degenerate += res.degenerate;
        if !res.lambda.is_finite() {
            continue;
        }
        let mut inputs = Vec::new();
        let mut triples = Vec::with_capacity(res.argmin.len());
        for a in &res.argmin {
            let local = ks[a.expect("finite factor implies every voxel is covered")];
            inputs.extend(u(local));
            triples.push(global(local));
        }
        entries.push(PairEntry {
            target,
            lambda: res.lambda,
            inputs,
            triples,
        });
    }
    RowResult { entries, degenerate }
}

fn assemble(
    partition: &Partition,
    input_dim: usize,
    voxels_per_dim: &[usize],
    lambda_max: f64,
    rows: Vec<RowResult>,
) -> ActionTable {
    let degenerate_samples = rows.iter().map(|r| r.degenerate).sum();
    ActionTable {
        num_cells: partition.num_cells(),
        input_dim,
        voxels_per_dim: voxels_per_dim.to_vec(),
        lambda_max,
        pairs: rows.into_iter().map(|r| r.entries).collect(),
        degenerate_samples,
    }
}

/// Enabled actions from a materialised dataset.
pub fn compute_enabled_actions(
    dataset: &Dataset,
    partition: &Partition,
    model: &dyn DynamicsModel,
    voxels_per_dim: &[usize],
    lambda_max: f64,
) -> Result<ActionTable> {
    validate_lambda_max(lambda_max)?;
    partition.voxelize(0, voxels_per_dim)?;
    let absorbing = partition.absorbing();
    let rows = exec::map_range(partition.num_cells(), |i| {
        let members = &dataset.by_source[i];
        let voxels = partition.voxelize(i, voxels_per_dim).expect("validated above");
        let jplus = model.jacobian_bound(voxels.region());
        let dest: Vec<StateId> = members
            .iter()
            .map(|&idx| partition.region_of(&dataset.triples[idx].x_next))
            .collect();
        let groups = group_by_destination(&dest, absorbing);
        let t = |k: usize| &dataset.triples[members[k]];
        source_row(
            partition,
            &voxels,
            &jplus,
            groups,
            |k| t(k).x.clone(),
            |k| t(k).x_next.clone(),
            |k| t(k).u.clone(),
            |k| members[k],
        )
    });
    Ok(assemble(partition, model.input_dim(), voxels_per_dim, lambda_max, rows))
}

/// Enabled actions computed cell by cell without materialising the whole
/// dataset. Produces exactly the table [`compute_enabled_actions`] builds
/// from [`generate_dataset`](crate::systems::generate_dataset) output.
pub fn build_action_table(
    model: &dyn DynamicsModel,
    partition: &Partition,
    grid: &SamplingGrid,
    voxels_per_dim: &[usize],
    lambda_max: f64,
) -> Result<ActionTable> {
    validate_lambda_max(lambda_max)?;
    grid.validate(model.state_dim(), model.input_dim())?;
    partition.voxelize(0, voxels_per_dim)?;
    let inputs = input_grid(model.input_box(), &grid.inputs);
    let absorbing = partition.absorbing();
    let rows = exec::map_range(partition.num_cells(), |i| {
        let cs = cell_samples(model, partition, grid, &inputs, i);
        let voxels = partition.voxelize(i, voxels_per_dim).expect("validated above");
        let jplus = model.jacobian_bound(voxels.region());
        let groups = group_by_destination(&cs.destination, absorbing);
        source_row(
            partition,
            &voxels,
            &jplus,
            groups,
            |k| cs.x(k).to_vec(),
            |k| cs.x_next(k).to_vec(),
            |k| cs.u(k).to_vec(),
            |k| cs.first_index + k,
        )
    });
    Ok(assemble(partition, model.input_dim(), voxels_per_dim, lambda_max, rows))
}
