//! Refinement of the abstract scheduler into a piecewise-constant feedback
//! law, closed-loop simulation and Monte Carlo checks of the certified
//! lower bound.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{HyperRect, Partition, StateId, Voxelization};
use crate::imdp::{write_file, Scheduler};
use crate::reachability::ActionTable;
use crate::systems::DynamicsModel;

/// Scheduler plus per-voxel controls: inside cell `i` with scheduled target
/// `j`, apply the input stored for the voxel that contains `x`.
#[derive(Debug, Clone)]
pub struct RefinedPolicy<'a> {
    scheduler: &'a Scheduler,
    table: &'a ActionTable,
    partition: &'a Partition,
    voxels: Vec<Voxelization>,
}

impl<'a> RefinedPolicy<'a> {
    pub fn new(scheduler: &'a Scheduler, table: &'a ActionTable, partition: &'a Partition) -> Result<Self> {
        let voxels = (0..partition.num_cells())
            .map(|i| partition.voxelize(i, table.voxels_per_dim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scheduler,
            table,
            partition,
            voxels,
        })
    }

    pub fn scheduler(&self) -> &Scheduler {
        self.scheduler
    }

    pub fn partition(&self) -> &Partition {
        self.partition
    }

    /// Scheduled target cell and the voxel control at `x`, time `k`.
    pub fn decide(&self, x: &[f64], k: usize) -> Result<(StateId, &'a [f64])> {
        let i = self.partition.region_of(x);
        if i >= self.partition.num_cells() {
            return Err(Error::PolicyUndefined { state: i });
        }
        let j = self
            .scheduler
            .choice_at(i, k)
            .ok_or(Error::PolicyUndefined { state: i })?;
        let entry = self
            .table
            .entry(i, j)
            .filter(|e| e.lambda <= self.table.lambda_max())
            .ok_or(Error::PolicyUndefined { state: i })?;
        let voxel = self.voxels[i].voxel_of(x);
        Ok((j, entry.control(voxel, self.table.input_dim())))
    }
}

/// `π_k(x)`.
pub fn policy_input<'a>(policy: &RefinedPolicy<'a>, x: &[f64], k: usize) -> Result<&'a [f64]> {
    policy.decide(x, k).map(|(_, u)| u)
}

/// Continuous reach-avoid sets: goal boxes, unsafe boxes and optionally the
/// complement of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSpec {
    pub goal: Vec<HyperRect>,
    pub unsafe_boxes: Vec<HyperRect>,
    /// When set, leaving this box is unsafe.
    pub safe_domain: Option<HyperRect>,
}

impl ContinuousSpec {
    pub fn is_goal(&self, x: &[f64]) -> bool {
        self.goal.iter().any(|g| g.contains(x))
    }

    pub fn is_unsafe(&self, x: &[f64]) -> bool {
        self.unsafe_boxes.iter().any(|u| u.contains(x)) || self.safe_domain.as_ref().is_some_and(|d| !d.contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReachedGoal,
    HitUnsafe,
    ExhaustedHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub outcome: Outcome,
    pub steps: usize,
}

/// Runs `x ← f(x, π(x)) + w` from `x0` until the goal or an unsafe state is
/// hit, or `max_steps` transitions have been taken. Unsafe is checked
/// before goal; a state where the policy is undefined counts as unsafe.
pub fn simulate<R: Rng + ?Sized>(
    model: &dyn DynamicsModel,
    policy: &RefinedPolicy<'_>,
    spec: &ContinuousSpec,
    x0: &[f64],
    max_steps: usize,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    if max_steps == 0 {
        return Err(Error::InvalidArgument("simulation needs at least one step".into()));
    }
    let n = model.state_dim();
    let mut x = x0.to_vec();
    let mut states = vec![x.clone()];
    let mut inputs = Vec::new();
    let mut w = vec![0.0; n];
    let mut next = vec![0.0; n];
    let outcome = loop {
        if spec.is_unsafe(&x) {
            break Outcome::HitUnsafe;
        }
        if spec.is_goal(&x) {
            break Outcome::ReachedGoal;
        }
        if inputs.len() == max_steps {
            break Outcome::ExhaustedHorizon;
        }
        let u = match policy_input(policy, &x, inputs.len()) {
            Ok(u) => u,
            Err(Error::PolicyUndefined { .. }) => break Outcome::HitUnsafe,
            Err(e) => return Err(e),
        };
        model.nominal(&x, u, &mut next);
        model.noise().sample_into(rng, &mut w);
        for q in 0..n {
            x[q] = next[q] + w[q];
        }
        inputs.push(u.to_vec());
        states.push(x.clone());
    };
    Ok(TrajectoryRecord {
        steps: inputs.len(),
        states,
        inputs,
        outcome,
    })
}

/// Two-sided 95% Wilson score interval for `successes` out of `runs`.
pub fn wilson_interval(successes: usize, runs: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if runs == 0 {
        return (0.0, 1.0);
    }
    let n = runs as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub runs: usize,
    pub successes: usize,
    pub empirical: f64,
    pub wilson_lower: f64,
    pub wilson_upper: f64,
    pub imdp_bound: f64,
    pub pass: bool,
}

/// Random stream of run `run` under master `seed`; independent of how runs
/// are spread over workers.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Simulates `runs` episodes from `x0` and checks that the empirical success
/// rate does not refute `imdp_bound`: the check passes iff the Wilson upper
/// limit reaches the bound. The first `keep` trajectories are returned.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_validate(
    model: &dyn DynamicsModel,
    policy: &RefinedPolicy<'_>,
    spec: &ContinuousSpec,
    x0: &[f64],
    runs: usize,
    max_steps: usize,
    seed: u64,
    imdp_bound: f64,
    keep: usize,
) -> Result<(ValidationSummary, Vec<TrajectoryRecord>)> {
    if runs < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 runs, got {runs}")));
    }
    let records = exec::map_range(runs, |r| {
        let mut rng = run_rng(seed, r);
        simulate(model, policy, spec, x0, max_steps, &mut rng)
    });
    let mut successes = 0;
    let mut kept = Vec::with_capacity(keep.min(runs));
    for (r, rec) in records.into_iter().enumerate() {
        let rec = rec?;
        if rec.outcome == Outcome::ReachedGoal {
            successes += 1;
        }
        if r < keep {
            kept.push(rec);
        }
    }
    let (wilson_lower, wilson_upper) = wilson_interval(successes, runs);
    let summary = ValidationSummary {
        runs,
        successes,
        empirical: successes as f64 / runs as f64,
        wilson_lower,
        wilson_upper,
        imdp_bound,
        pass: wilson_upper >= imdp_bound,
    };
    Ok((summary, kept))
}

/// One row per cell in id order (first index fastest):
/// `idx_0..idx_{n-1},center_0..center_{n-1},value,action`.
pub fn value_heatmap(scheduler: &Scheduler, partition: &Partition, path: &Path) -> Result<()> {
    let n = partition.dim();
    let mut out = String::new();
    let cols: Vec<String> = (0..n)
        .map(|q| format!("idx_{q}"))
        .chain((0..n).map(|q| format!("center_{q}")))
        .collect();
    writeln!(out, "{},value,action", cols.join(",")).expect("writing to a String");
    for (s, cell) in partition.cells().enumerate() {
        for k in partition.multi_index(s) {
            write!(out, "{k},").expect("writing to a String");
        }
        for c in cell.center() {
            write!(out, "{c},").expect("writing to a String");
        }
        let action = scheduler.choice[s].map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, "{},{action}", scheduler.values[s]).expect("writing to a String");
    }
    write_file(path, out.as_bytes())
}

/// `k,x_0..x_{n-1},u_0..u_{p-1}`; the final state has empty input columns.
pub fn write_trajectory_csv(record: &TrajectoryRecord, input_dim: usize, path: &Path) -> Result<()> {
    let n = record.states.first().map_or(0, Vec::len);
    let mut out = String::from("k");
    for q in 0..n {
        write!(out, ",x_{q}").expect("writing to a String");
    }
    for q in 0..input_dim {
        write!(out, ",u_{q}").expect("writing to a String");
    }
    out.push('\n');
    for (k, x) in record.states.iter().enumerate() {
        write!(out, "{k}").expect("writing to a String");
        for v in x {
            write!(out, ",{v}").expect("writing to a String");
        }
        match record.inputs.get(k) {
            Some(u) => {
                for v in u {
                    write!(out, ",{v}").expect("writing to a String");
                }
            }
            None => out.push_str(&",".repeat(input_dim)),
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}
