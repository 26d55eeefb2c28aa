//! Interval MDP over partition cells, reach-avoid objectives and robust
//! value iteration against a dynamic adversary.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{HyperRect, Partition, StateId};
use crate::intervals::{
    beta_per_transition, check_row, count_outcomes, CpTable, IntervalRow, NoiseSet, ProbabilityInterval,
    TransitionCounts,
};
use crate::reachability::ActionTable;

/// Abstract action `a_j`: steer towards `R_j(λ_{i→j})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImdpAction {
    /// Target cell `j`.
    pub target: StateId,
    pub row: IntervalRow,
}

/// `v` cells, then the absorbing state `v`, then the terminal sink `v + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalImdp {
    num_states: usize,
    initial: StateId,
    actions: Vec<Vec<ImdpAction>>,
}

impl IntervalImdp {
    /// Checks row feasibility, successor ids and that the two terminal
    /// states have no actions.
    pub fn new(num_states: usize, initial: StateId, actions: Vec<Vec<ImdpAction>>) -> Result<Self> {
        if num_states < 2 || actions.len() != num_states || initial >= num_states {
            return Err(Error::InvalidArgument(format!(
                "IMDP needs one action list per state and a valid initial state ({num_states} states, {} lists, initial {initial})",
                actions.len()
            )));
        }
        for (s, acts) in actions.iter().enumerate() {
            if s >= num_states - 2 && !acts.is_empty() {
                return Err(Error::InvalidArgument(format!("terminal state {s} has actions")));
            }
            for a in acts {
                if a.row.iter().any(|(t, _)| *t >= num_states) {
                    return Err(Error::InvalidArgument(format!("row of state {s} leaves the state space")));
                }
                check_row(&a.row)?;
            }
        }
        Ok(Self {
            num_states,
            initial,
            actions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn absorbing(&self) -> StateId {
        self.num_states - 2
    }

    pub fn sink(&self) -> StateId {
        self.num_states - 1
    }

    pub fn actions(&self, s: StateId) -> &[ImdpAction] {
        &self.actions[s]
    }

    pub fn action(&self, s: StateId, target: StateId) -> Option<&ImdpAction> {
        self.actions[s].iter().find(|a| a.target == target)
    }

    pub fn num_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    pub fn num_transitions(&self) -> usize {
        self.actions.iter().flatten().map(|a| a.row.len()).sum()
    }
}

/// Everything [`assemble_imdp`] produces besides the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionStats {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_transitions: usize,
    pub noise_samples: usize,
    pub beta: f64,
}

/// Counts outcomes of every enabled action against one shared noise set,
/// sets `β = risk / T` from the resulting transition count `T`, and
/// attaches Clopper-Pearson intervals.
pub fn assemble_imdp(
    partition: &Partition,
    table: &ActionTable,
    noise: &NoiseSet,
    overall_risk: f64,
    initial: StateId,
) -> Result<(IntervalImdp, AbstractionStats)> {
    let v = partition.num_cells();
    if noise.dim() != partition.dim() {
        return Err(Error::InvalidArgument("noise and state dimensions differ".into()));
    }
    let pairs: Vec<(StateId, StateId, f64)> = (0..v)
        .flat_map(|i| table.enabled(i).map(move |e| (i, e.target, e.lambda)))
        .collect();
    let counts: Vec<TransitionCounts> = exec::map_slice(&pairs, |&(_, j, lambda)| {
        let target = scaled_cell(partition, j, lambda);
        count_outcomes(noise, &target, partition)
    });
    let total: usize = counts.iter().map(|c| c.successors.len()).sum();
    let beta = beta_per_transition(total.max(1), overall_risk)?;
    let cp = CpTable::for_counts(noise.len() as u64, beta, &counts)?;
    let rows = exec::map_slice(&counts, |c| cp.row(c));

    let mut actions = vec![Vec::new(); v + 2];
    for (&(i, j, _), row) in pairs.iter().zip(rows) {
        actions[i].push(ImdpAction { target: j, row: row? });
    }
    let imdp = IntervalImdp::new(v + 2, initial, actions)?;
    let stats = AbstractionStats {
        num_states: imdp.num_states(),
        num_actions: imdp.num_actions(),
        num_transitions: imdp.num_transitions(),
        noise_samples: noise.len(),
        beta,
    };
    Ok((imdp, stats))
}

fn scaled_cell(partition: &Partition, j: StateId, lambda: f64) -> HyperRect {
    crate::geometry::scale_region(&partition.cell(j), lambda).expect("enabled factors are finite and nonnegative")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

/// Goal and unsafe labels over all IMDP states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachAvoidSpec {
    goal: Vec<bool>,
    unsafe_: Vec<bool>,
    pub horizon: Horizon,
}

impl ReachAvoidSpec {
    /// Labels from explicit state sets; states in both count as unsafe.
    pub fn from_sets(num_states: usize, goal: &[StateId], unsafe_states: &[StateId], horizon: Horizon) -> Result<Self> {
        let mut g = vec![false; num_states];
        let mut u = vec![false; num_states];
        for &s in goal {
            *g.get_mut(s)
                .ok_or_else(|| Error::InvalidArgument(format!("goal state {s} out of range")))? = true;
        }
        for &s in unsafe_states {
            *u.get_mut(s)
                .ok_or_else(|| Error::InvalidArgument(format!("unsafe state {s} out of range")))? = true;
        }
        for (gs, us) in g.iter_mut().zip(&u) {
            if *us {
                *gs = false;
            }
        }
        Ok(Self {
            goal: g,
            unsafe_: u,
            horizon,
        })
    }

    pub fn num_states(&self) -> usize {
        self.goal.len()
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goal[s]
    }

    pub fn is_unsafe(&self, s: StateId) -> bool {
        self.unsafe_[s]
    }

    pub fn goal_states(&self) -> Vec<StateId> {
        (0..self.goal.len()).filter(|&s| self.goal[s]).collect()
    }

    pub fn unsafe_states(&self) -> Vec<StateId> {
        (0..self.unsafe_.len()).filter(|&s| self.unsafe_[s]).collect()
    }
}

/// Goal cells are those inside some goal box (closed containment), unsafe
/// cells those whose interior meets an unsafe box. With `outside_unsafe` the
/// absorbing state is unsafe as well. Conflicts resolve to unsafe.
pub fn map_spec(
    partition: &Partition,
    goal: &[HyperRect],
    unsafe_boxes: &[HyperRect],
    outside_unsafe: bool,
    horizon: Horizon,
) -> Result<ReachAvoidSpec> {
    let n = partition.dim();
    if goal.iter().chain(unsafe_boxes).any(|b| b.dim() != n) {
        return Err(Error::InvalidArgument("specification boxes must match the state dimension".into()));
    }
    let v = partition.num_cells();
    let mut goal_states = Vec::new();
    let mut unsafe_states = Vec::new();
    for (s, cell) in partition.cells().enumerate() {
        if goal.iter().any(|g| g.contains_box(&cell)) {
            goal_states.push(s);
        }
        if unsafe_boxes.iter().any(|u| u.interiors_overlap(&cell)) {
            unsafe_states.push(s);
        }
    }
    if outside_unsafe {
        unsafe_states.push(v);
    }
    ReachAvoidSpec::from_sets(v + 2, &goal_states, &unsafe_states, horizon)
}

/// Adversarial distribution over `row` minimising the expectation of
/// `values`: successors in ascending value order receive as much of their
/// slack as the remaining mass allows.
pub fn inner_min_distribution(row: &[(StateId, ProbabilityInterval)], values: &[f64]) -> Result<Vec<f64>> {
    check_row(row)?;
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        values[row[a].0]
            .total_cmp(&values[row[b].0])
            .then(row[a].0.cmp(&row[b].0))
    });
    let mut mu: Vec<f64> = row.iter().map(|(_, iv)| iv.lower).collect();
    let mut remaining = 1.0 - mu.iter().sum::<f64>();
    for k in order {
        if remaining <= 0.0 {
            break;
        }
        let add = (row[k].1.upper - row[k].1.lower).min(remaining);
        mu[k] += add;
        remaining -= add;
    }
    Ok(mu)
}

/// `min_μ Σ μ(s′)·values(s′)` over the distributions the row admits.
pub fn inner_min_expectation(row: &[(StateId, ProbabilityInterval)], values: &[f64]) -> Result<f64> {
    let mu = inner_min_distribution(row, values)?;
    Ok(row.iter().zip(&mu).map(|((s, _), p)| p * values[*s]).sum())
}

/// Inner minimum for a row already known to be feasible, with a reusable
/// ordering buffer.
fn inner_min_unchecked(row: &[(StateId, ProbabilityInterval)], values: &[f64], order: &mut Vec<usize>) -> f64 {
    order.clear();
    order.extend(0..row.len());
    order.sort_by(|&a, &b| {
        values[row[a].0]
            .total_cmp(&values[row[b].0])
            .then(row[a].0.cmp(&row[b].0))
    });
    let mut remaining = 1.0;
    let mut acc = 0.0;
    for (s, iv) in row {
        acc += iv.lower * values[*s];
        remaining -= iv.lower;
    }
    for &k in order.iter() {
        if remaining <= 0.0 {
            break;
        }
        let (s, iv) = &row[k];
        let add = (iv.upper - iv.lower).min(remaining);
        acc += add * values[*s];
        remaining -= add;
    }
    acc.clamp(0.0, 1.0)
}

/// Robust values and the maximising scheduler. Choices are target cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scheduler {
    pub values: Vec<f64>,
    /// Stationary choice (infinite horizon) or the first-step choice.
    pub choice: Vec<Option<StateId>>,
    /// Finite horizon only: `per_step[k]` is the choice at time `k`.
    pub per_step: Vec<Vec<Option<StateId>>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl Scheduler {
    /// Choice at time `k`; stationary schedulers ignore `k`.
    pub fn choice_at(&self, s: StateId, k: usize) -> Option<StateId> {
        if self.per_step.is_empty() {
            self.choice[s]
        } else {
            self.per_step.get(k).and_then(|c| c[s])
        }
    }
}

/// Stopping parameters for the infinite-horizon iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ViSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

fn terminal(imdp: &IntervalImdp, spec: &ReachAvoidSpec, s: StateId) -> bool {
    spec.is_goal(s) || spec.is_unsafe(s) || s >= imdp.absorbing()
}

/// One Jacobi sweep: new values and greedy choices from `values`. A state
/// keeps its previous choice unless another action is strictly better, so
/// ties between a progressing action and a self-loop never switch to the
/// self-loop.
fn sweep(
    imdp: &IntervalImdp,
    spec: &ReachAvoidSpec,
    values: &[f64],
    previous: &[Option<StateId>],
) -> Vec<(f64, Option<StateId>)> {
    exec::map_range(imdp.num_states(), |s| {
        if terminal(imdp, spec, s) {
            return (values[s], None);
        }
        let mut order = Vec::new();
        let mut best = 0.0;
        let mut choice = None;
        let mut kept = None;
        for a in imdp.actions(s) {
            let q = inner_min_unchecked(&a.row, values, &mut order);
            if previous[s] == Some(a.target) {
                kept = Some(q);
            }
            if choice.is_none() || q > best {
                best = q;
                choice = Some(a.target);
            }
        }
        if kept == Some(best) {
            choice = previous[s];
        }
        (best, choice)
    })
}

/// Robust value iteration for `P(reach goal while avoiding unsafe)` under
/// the worst-case dynamic adversary.
///
/// Values start at 1 on goal states and 0 elsewhere and increase
/// monotonically; states without actions stay at 0.
pub fn robust_value_iteration(imdp: &IntervalImdp, spec: &ReachAvoidSpec, settings: ViSettings) -> Result<Scheduler> {
    if spec.num_states() != imdp.num_states() {
        return Err(Error::InvalidArgument(format!(
            "specification covers {} states, IMDP has {}",
            spec.num_states(),
            imdp.num_states()
        )));
    }
    let mut values: Vec<f64> = (0..imdp.num_states())
        .map(|s| if spec.is_goal(s) { 1.0 } else { 0.0 })
        .collect();
    match spec.horizon {
        Horizon::Finite(h) => {
            let mut per_step = vec![Vec::new(); h];
            let mut residual = 0.0;
            let mut previous = vec![None; imdp.num_states()];
            for k in (0..h).rev() {
                let out = sweep(imdp, spec, &values, &previous);
                residual = out
                    .iter()
                    .zip(&values)
                    .map(|((v, _), old)| (v - old).abs())
                    .fold(0.0, f64::max);
                values = out.iter().map(|(v, _)| *v).collect();
                previous = out.into_iter().map(|(_, c)| c).collect();
                per_step[k] = previous.clone();
            }
            let choice = per_step.first().cloned().unwrap_or_else(|| vec![None; imdp.num_states()]);
            Ok(Scheduler {
                values,
                choice,
                per_step,
                iterations: h,
                residual,
                converged: true,
            })
        }
        Horizon::Infinite => {
            let mut choice = vec![None; imdp.num_states()];
            let mut residual = f64::INFINITY;
            let mut iterations = 0;
            while iterations < settings.max_iter {
                let out = sweep(imdp, spec, &values, &choice);
                iterations += 1;
                residual = out
                    .iter()
                    .zip(&values)
                    .map(|((v, _), old)| (v - old).abs())
                    .fold(0.0, f64::max);
                values = out.iter().map(|(v, _)| *v).collect();
                choice = out.into_iter().map(|(_, c)| c).collect();
                if residual < settings.tol {
                    break;
                }
            }
            let converged = residual < settings.tol;
            if !converged {
                log::warn!(
                    "value iteration stopped after {iterations} sweeps with residual {residual:.3e}"
                );
            }
            Ok(Scheduler {
                values,
                choice,
                per_step: Vec::new(),
                iterations,
                residual,
                converged,
            })
        }
    }
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.16e}")
}

/// Writes the explicit interval model to `path` and state labels to
/// `labels_path`.
///
/// Transition file: a header `states choices transitions`, then one line
/// `s c t [lower,upper] a_j` per successor, where `c` numbers the actions of
/// `s` from 0 and `j` is the action's target cell. Probabilities carry 17
/// significant digits. Labels file: a header declaring `init`, `goal`,
/// `unsafe`, `absorbing` and `sink`, then `s: labels...` per labelled state.
pub fn export_prism(imdp: &IntervalImdp, spec: &ReachAvoidSpec, path: &Path, labels_path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(
        out,
        "{} {} {}",
        imdp.num_states(),
        imdp.num_actions(),
        imdp.num_transitions()
    )
    .expect("writing to a String");
    for s in 0..imdp.num_states() {
        for (c, a) in imdp.actions(s).iter().enumerate() {
            for (t, iv) in &a.row {
                writeln!(
                    out,
                    "{s} {c} {t} [{},{}] a_{}",
                    fmt_prob(iv.lower),
                    fmt_prob(iv.upper),
                    a.target
                )
                .expect("writing to a String");
            }
        }
    }
    write_file(path, out.as_bytes())?;

    let mut lab = String::from("0=\"init\" 1=\"goal\" 2=\"unsafe\" 3=\"absorbing\" 4=\"sink\"\n");
    for s in 0..imdp.num_states() {
        let mut tags = Vec::new();
        if s == imdp.initial() {
            tags.push("0");
        }
        if spec.is_goal(s) {
            tags.push("1");
        }
        if spec.is_unsafe(s) {
            tags.push("2");
        }
        if s == imdp.absorbing() {
            tags.push("3");
        }
        if s == imdp.sink() {
            tags.push("4");
        }
        if !tags.is_empty() {
            writeln!(lab, "{s}: {}", tags.join(" ")).expect("writing to a String");
        }
    }
    write_file(labels_path, lab.as_bytes())
}

/// `state,idx_0..idx_{n-1},value,action` per state. Terminal states leave
/// the index columns empty; states without a choice leave `action` empty.
pub fn write_values_csv(partition: &Partition, scheduler: &Scheduler, path: &Path) -> Result<()> {
    let n = partition.dim();
    let mut out = String::from("state");
    for q in 0..n {
        write!(out, ",idx_{q}").expect("writing to a String");
    }
    out.push_str(",value,action\n");
    for (s, value) in scheduler.values.iter().enumerate() {
        write!(out, "{s}").expect("writing to a String");
        if s < partition.num_cells() {
            for k in partition.multi_index(s) {
                write!(out, ",{k}").expect("writing to a String");
            }
        } else {
            out.push_str(&",".repeat(n));
        }
        let action = scheduler.choice[s].map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, ",{value},{action}").expect("writing to a String");
    }
    write_file(path, out.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
