use serde::{Deserialize, Serialize};

use super::DynamicsModel;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{HyperRect, Partition, StateId};

/// Grid resolution of the nominal-transition dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingGrid {
    /// State samples per cell along each state dimension.
    pub states_per_cell: Vec<usize>,
    /// Input samples along each input dimension.
    pub inputs: Vec<usize>,
}

impl SamplingGrid {
    pub fn validate(&self, state_dim: usize, input_dim: usize) -> Result<()> {
        if self.states_per_cell.len() != state_dim || self.states_per_cell.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "state grid {:?} must have {state_dim} positive entries",
                self.states_per_cell
            )));
        }
        if self.inputs.len() != input_dim || self.inputs.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "input grid {:?} must have {input_dim} positive entries",
                self.inputs
            )));
        }
        Ok(())
    }

    pub fn states_per_cell_total(&self) -> usize {
        self.states_per_cell.iter().product()
    }

    pub fn inputs_total(&self) -> usize {
        self.inputs.iter().product()
    }

    /// Triples generated per partition cell.
    pub fn samples_per_cell(&self) -> usize {
        self.states_per_cell_total() * self.inputs_total()
    }
}

/// One nominal transition `(x, u, f(x, u))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTriple {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub x_next: Vec<f64>,
}

/// Cell-interior state grid: points sit half a grid step away from every
/// face, so no sample lies on a cell boundary. Flat, first dimension fastest.
pub fn state_grid(region: &HyperRect, per_dim: &[usize]) -> Vec<f64> {
    let n = region.dim();
    let total: usize = per_dim.iter().product();
    let mut out = Vec::with_capacity(total * n);
    for k in 0..total {
        let mut rest = k;
        for q in 0..n {
            let m = per_dim[q];
            let iq = rest % m;
            rest /= m;
            let step = (region.upper()[q] - region.lower()[q]) / m as f64;
            out.push(region.lower()[q] + (iq as f64 + 0.5) * step);
        }
    }
    out
}

/// Input grid over `U`: endpoints included when a dimension has two or
/// more points, the centre when it has one. Flat, first dimension fastest.
pub fn input_grid(input_box: &HyperRect, per_dim: &[usize]) -> Vec<f64> {
    let p = input_box.dim();
    let total: usize = per_dim.iter().product();
    let mut out = Vec::with_capacity(total * p);
    for k in 0..total {
        let mut rest = k;
        for q in 0..p {
            let m = per_dim[q];
            let iq = rest % m;
            rest /= m;
            let (lo, hi) = (input_box.lower()[q], input_box.upper()[q]);
            out.push(if m == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * iq as f64 / (m - 1) as f64
            });
        }
    }
    out
}

/// All nominal transitions whose source state lies in one cell.
///
/// Local sample `k` pairs state `k / inputs_total` with input
/// `k % inputs_total`; its global dataset index is `first_index + k`.
#[derive(Debug, Clone)]
pub struct CellSamples {
    pub cell: StateId,
    pub first_index: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub inputs_total: usize,
    pub states: Vec<f64>,
    pub inputs: Vec<f64>,
    pub next: Vec<f64>,
    pub destination: Vec<StateId>,
}

impl CellSamples {
    pub fn len(&self) -> usize {
        self.destination.len()
    }

    pub fn is_empty(&self) -> bool {
        self.destination.is_empty()
    }

    pub fn x(&self, k: usize) -> &[f64] {
        let s = k / self.inputs_total;
        &self.states[s * self.state_dim..(s + 1) * self.state_dim]
    }

    pub fn u(&self, k: usize) -> &[f64] {
        let a = k % self.inputs_total;
        &self.inputs[a * self.input_dim..(a + 1) * self.input_dim]
    }

    pub fn x_next(&self, k: usize) -> &[f64] {
        &self.next[k * self.state_dim..(k + 1) * self.state_dim]
    }
}

/// Evaluates the nominal map on the state grid of `cell` crossed with the
/// input grid.
pub fn cell_samples(
    model: &dyn DynamicsModel,
    partition: &Partition,
    grid: &SamplingGrid,
    inputs: &[f64],
    cell: StateId,
) -> CellSamples {
    let n = model.state_dim();
    let p = model.input_dim();
    let states = state_grid(&partition.cell(cell), &grid.states_per_cell);
    let n_inputs = inputs.len() / p;
    let n_states = states.len() / n;
    let total = n_states * n_inputs;
    let mut next = vec![0.0; total * n];
    let mut destination = Vec::with_capacity(total);
    for s in 0..n_states {
        let x = &states[s * n..(s + 1) * n];
        for a in 0..n_inputs {
            let k = s * n_inputs + a;
            let out = &mut next[k * n..(k + 1) * n];
            model.nominal(x, &inputs[a * p..(a + 1) * p], out);
            destination.push(partition.region_of(out));
        }
    }
    CellSamples {
        cell,
        first_index: cell * total,
        state_dim: n,
        input_dim: p,
        inputs_total: n_inputs,
        states,
        inputs: inputs.to_vec(),
        next,
        destination,
    }
}

/// Materialised dataset with source and destination buckets.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub triples: Vec<SampleTriple>,
    /// Triple indices per source state (length `v + 1`).
    pub by_source: Vec<Vec<usize>>,
    /// Triple indices per destination state, absorbing included (length `v + 1`).
    pub by_destination: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Builds the buckets for an arbitrary list of triples.
    pub fn from_triples(partition: &Partition, triples: Vec<SampleTriple>) -> Self {
        let slots = partition.num_cells() + 1;
        let mut by_source = vec![Vec::new(); slots];
        let mut by_destination = vec![Vec::new(); slots];
        for (idx, t) in triples.iter().enumerate() {
            by_source[partition.region_of(&t.x)].push(idx);
            by_destination[partition.region_of(&t.x_next)].push(idx);
        }
        Self {
            triples,
            by_source,
            by_destination,
        }
    }
}

/// Grid dataset over every partition cell. Triple order (and hence every
/// index) is fixed by the grid and independent of worker count.
pub fn generate_dataset(model: &dyn DynamicsModel, partition: &Partition, grid: &SamplingGrid) -> Result<Dataset> {
    grid.validate(model.state_dim(), model.input_dim())?;
    let inputs = input_grid(model.input_box(), &grid.inputs);
    let per_cell = exec::map_range(partition.num_cells(), |cell| {
        cell_samples(model, partition, grid, &inputs, cell)
    });
    let slots = partition.num_cells() + 1;
    let mut triples = Vec::with_capacity(per_cell.iter().map(CellSamples::len).sum());
    let mut by_source = vec![Vec::new(); slots];
    let mut by_destination = vec![Vec::new(); slots];
    for cs in &per_cell {
        for k in 0..cs.len() {
            let idx = triples.len();
            debug_assert_eq!(idx, cs.first_index + k);
            by_source[cs.cell].push(idx);
            by_destination[cs.destination[k]].push(idx);
            triples.push(SampleTriple {
                x: cs.x(k).to_vec(),
                u: cs.u(k).to_vec(),
                x_next: cs.x_next(k).to_vec(),
            });
        }
    }
    Ok(Dataset {
        triples,
        by_source,
        by_destination,
    })
}
