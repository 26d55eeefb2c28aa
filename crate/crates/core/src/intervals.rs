//! PAC bounds on transition probabilities.
//!
//! A single set of noise samples is shifted onto each target box
//! `R_j(λ_{i→j})`. Counting how often the shifted box lands inside (`Ň`) or
//! touches (`N̂`) each cell gives two binomial observations, turned into a
//! probability interval by one-sided Clopper-Pearson bounds.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{HyperRect, Partition, StateId};
use crate::systems::DynamicsModel;

/// Natural log of the gamma function (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (k, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const CF_EPS: f64 = 1e-12;
const CF_MAX_ITER: usize = 100_000;

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x ∈ [0, 1]`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

const BISECT_TOL: f64 = 1e-10;
const BISECT_MAX_ITER: usize = 100;

/// Bisection for an increasing `g` on `[0, 1]`; returns the bracket.
fn bisect_increasing(g: impl Fn(f64) -> f64, target: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECT_MAX_ITER {
        if hi - lo < BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// One-sided `β/2` Clopper-Pearson bounds for `k` successes out of `n`.
///
/// The lower bound solves `P(Bin(n, p) ≥ k) = β/2`, the upper bound solves
/// `P(Bin(n, p) ≤ k) = β/2`. Both are rounded outward to the bisection
/// bracket.
pub fn clopper_pearson(k: u64, n: u64, beta: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= k <= n and n > 0, got k = {k}, n = {n}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence parameter must be in (0, 1), got {beta}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    let half = beta / 2.0;
    let lower = if k == 0 {
        0.0
    } else {
        // P(X ≥ k) = I_p(k, n − k + 1), increasing in p.
        bisect_increasing(|p| reg_inc_beta(kf, nf - kf + 1.0, p), half).0
    };
    let upper = if k == n {
        1.0
    } else {
        // P(X ≤ k) = 1 − I_p(k + 1, n − k), decreasing in p.
        bisect_increasing(|p| reg_inc_beta(kf + 1.0, nf - kf, p), 1.0 - half).1
    };
    Ok((lower, upper))
}

/// `β = risk / T`: per-transition error for `T` transitions and an overall
/// failure budget `risk`.
pub fn beta_per_transition(total_transitions: usize, overall_risk: f64) -> Result<f64> {
    if total_transitions == 0 {
        return Err(Error::InvalidArgument("transition count must be at least 1".into()));
    }
    validate_risk(overall_risk)?;
    Ok(overall_risk / total_transitions as f64)
}

/// Worst-case union bound over `|S|² · |Act|` potential transitions.
pub fn beta_union_bound(num_states: usize, num_actions: usize, overall_risk: f64) -> Result<f64> {
    validate_risk(overall_risk)?;
    let t = (num_states as f64).powi(2) * num_actions as f64;
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument("need at least one state and one action".into()));
    }
    Ok(overall_risk / t)
}

fn validate_risk(risk: f64) -> Result<()> {
    if !(risk > 0.0 && risk < 1.0) {
        return Err(Error::InvalidArgument(format!("overall risk must be in (0, 1), got {risk}")));
    }
    Ok(())
}

/// Fixed set of i.i.d. noise samples shared by every transition.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSet {
    dim: usize,
    data: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl NoiseSet {
    pub fn new(samples: &[Vec<f64>]) -> Result<Self> {
        let dim = samples.first().map_or(0, Vec::len);
        if samples.is_empty() || dim == 0 || samples.iter().any(|w| w.len() != dim) {
            return Err(Error::InvalidArgument(
                "noise set must be non-empty with samples of equal dimension".into(),
            ));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("noise samples must be finite".into()));
        }
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for w in samples {
            for q in 0..dim {
                min[q] = min[q].min(w[q]);
                max[q] = max[q].max(w[q]);
            }
        }
        Ok(Self {
            dim,
            data: samples.concat(),
            min,
            max,
        })
    }

    /// `count` draws from the model's noise distribution.
    pub fn draw<R: Rng + ?Sized>(model: &dyn DynamicsModel, rng: &mut R, count: usize) -> Result<Self> {
        model.noise().validate()?;
        Self::new(&crate::systems::sample_noise(model, rng, count))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, l: usize) -> &[f64] {
        &self.data[l * self.dim..(l + 1) * self.dim]
    }
}

/// Sample counts of one successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessorCount {
    pub state: StateId,
    /// Samples whose shifted box lies inside the successor (`Ň`).
    pub check: u64,
    /// Samples whose shifted box meets the successor (`N̂`).
    pub hat: u64,
}

/// Counts for one `(i, j)` transition, successors with `N̂ > 0` only,
/// sorted by state id. The absorbing state is included when hit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n: u64,
    pub successors: Vec<SuccessorCount>,
}

impl TransitionCounts {
    fn find(&self, state: StateId) -> Option<&SuccessorCount> {
        self.successors
            .binary_search_by_key(&state, |c| c.state)
            .ok()
            .map(|k| &self.successors[k])
    }

    pub fn check(&self, state: StateId) -> u64 {
        self.find(state).map_or(0, |c| c.check)
    }

    pub fn hat(&self, state: StateId) -> u64 {
        self.find(state).map_or(0, |c| c.hat)
    }
}

/// Cells along axis `q` meeting `[lo, hi]` in a set of positive length.
/// A zero-length interval maps to the cell that owns the point.
fn overlap_range(partition: &Partition, q: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
    if !(hi > lo) {
        return partition.axis_index(q, lo).map(|k| (k, k));
    }
    let (x_lo, x_hi) = (partition.domain().lower()[q], partition.domain().upper()[q]);
    if hi <= x_lo || lo >= x_hi {
        return None;
    }
    let c = partition.cells_per_dim()[q];
    let w = partition.cell_width()[q];
    let clamp = |v: f64| (v.max(0.0) as usize).min(c - 1);
    let mut k0 = clamp(((lo - x_lo) / w).floor());
    while k0 > 0 && partition.cell_upper(q, k0 - 1) > lo {
        k0 -= 1;
    }
    while k0 < c - 1 && partition.cell_upper(q, k0) <= lo {
        k0 += 1;
    }
    let mut k1 = clamp(((hi - x_lo) / w).ceil() - 1.0);
    while k1 < c - 1 && partition.cell_lower(q, k1 + 1) < hi {
        k1 += 1;
    }
    while k1 > 0 && partition.cell_lower(q, k1) >= hi {
        k1 -= 1;
    }
    Some((k0, k1))
}

/// Counts, for each noise sample `w`, where `target + w` lands.
///
/// Cells are closed for containment; only positive-measure overlap counts as
/// intersecting. For the absorbing state, `N̂` counts shifted boxes not
/// inside the domain and `Ň` those with no overlap with the domain.
pub fn count_outcomes(noise: &NoiseSet, target: &HyperRect, partition: &Partition) -> TransitionCounts {
    let n = partition.dim();
    let (t_lo, t_hi) = (target.lower(), target.upper());
    let (x_lo, x_hi) = (partition.domain().lower(), partition.domain().upper());

    // Window of cells any sample can reach, for dense accumulation.
    let mut window = Vec::with_capacity(n);
    for q in 0..n {
        window.push(overlap_range(partition, q, t_lo[q] + noise.min[q], t_hi[q] + noise.max[q]));
    }
    let reachable = window.iter().all(Option::is_some);
    let (w0, extent): (Vec<usize>, Vec<usize>) = window
        .iter()
        .map(|r| r.map_or((0, 0), |(a, b)| (a, b - a + 1)))
        .unzip();
    let size = if reachable { extent.iter().product() } else { 0 };
    let mut check = vec![0u64; size];
    let mut hat = vec![0u64; size];
    let (mut abs_check, mut abs_hat) = (0u64, 0u64);

    let mut ranges = vec![(0usize, 0usize); n];
    let mut idx = vec![0usize; n];
    for l in 0..noise.len() {
        let w = noise.get(l);
        let mut inside = true;
        let mut outside = false;
        for q in 0..n {
            let (lo, hi) = (t_lo[q] + w[q], t_hi[q] + w[q]);
            if lo < x_lo[q] || hi > x_hi[q] {
                inside = false;
            }
            match overlap_range(partition, q, lo, hi) {
                Some(r) => ranges[q] = r,
                None => outside = true,
            }
        }
        if !inside {
            abs_hat += 1;
        }
        if outside {
            abs_check += 1;
            continue;
        }
        let single = inside && ranges.iter().all(|(a, b)| a == b);
        // Walk the cells in the box of ranges, first dimension fastest.
        for q in 0..n {
            idx[q] = ranges[q].0;
        }
        loop {
            let mut off = 0;
            let mut stride = 1;
            for q in 0..n {
                off += (idx[q] - w0[q]) * stride;
                stride *= extent[q];
            }
            hat[off] += 1;
            if single {
                check[off] += 1;
            }
            let mut q = 0;
            while q < n {
                if idx[q] < ranges[q].1 {
                    idx[q] += 1;
                    break;
                }
                idx[q] = ranges[q].0;
                q += 1;
            }
            if q == n {
                break;
            }
        }
    }

    let mut successors = Vec::new();
    for off in 0..size {
        if hat[off] == 0 {
            continue;
        }
        let mut rest = off;
        for q in 0..n {
            idx[q] = w0[q] + rest % extent[q];
            rest /= extent[q];
        }
        successors.push(SuccessorCount {
            state: partition.flat_index(&idx),
            check: check[off],
            hat: hat[off],
        });
    }
    successors.sort_by_key(|c| c.state);
    if abs_hat > 0 {
        successors.push(SuccessorCount {
            state: partition.absorbing(),
            check: abs_check,
            hat: abs_hat,
        });
    }
    TransitionCounts {
        n: noise.len() as u64,
        successors,
    }
}

/// `[p̌, p̂]` with `0 ≤ p̌ ≤ p̂ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ProbabilityInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(0.0 <= lower && lower <= upper && upper <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid probability interval [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn point(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Successor list of one state-action pair.
pub type IntervalRow = Vec<(StateId, ProbabilityInterval)>;

const ROW_SLACK: f64 = 1e-12;

/// `Σ p̌ ≤ 1 ≤ Σ p̂`, up to rounding.
pub fn check_row(row: &[(StateId, ProbabilityInterval)]) -> Result<()> {
    let lower_sum: f64 = row.iter().map(|(_, iv)| iv.lower).sum();
    let upper_sum: f64 = row.iter().map(|(_, iv)| iv.upper).sum();
    if lower_sum > 1.0 + ROW_SLACK || upper_sum < 1.0 - ROW_SLACK {
        return Err(Error::InfeasibleRow { lower_sum, upper_sum });
    }
    Ok(())
}

/// Intervals for one transition: `p̌` from `Ň`, `p̂` from `N̂`.
pub fn build_transition_intervals(counts: &TransitionCounts, beta: f64) -> Result<IntervalRow> {
    let mut row = Vec::with_capacity(counts.successors.len());
    for c in &counts.successors {
        let lower = clopper_pearson(c.check, counts.n, beta)?.0;
        let upper = clopper_pearson(c.hat, counts.n, beta)?.1;
        row.push((c.state, ProbabilityInterval::new(lower, upper)?));
    }
    check_row(&row)?;
    Ok(row)
}

/// Clopper-Pearson bounds for fixed `N` and `β`, evaluated once per
/// distinct count.
#[derive(Debug, Clone)]
pub struct CpTable {
    n: u64,
    beta: f64,
    bounds: Vec<Option<(f64, f64)>>,
}

impl CpTable {
    /// Precomputes the bounds for every count used by `counts`.
    pub fn for_counts<'a>(n: u64, beta: f64, counts: impl IntoIterator<Item = &'a TransitionCounts>) -> Result<Self> {
        let mut ks = BTreeSet::new();
        for c in counts {
            for s in &c.successors {
                ks.insert(s.check);
                ks.insert(s.hat);
            }
        }
        let ks: Vec<u64> = ks.into_iter().collect();
        let values = exec::map_slice(&ks, |&k| clopper_pearson(k, n, beta));
        let mut bounds = vec![None; n as usize + 1];
        for (k, v) in ks.iter().zip(values) {
            *bounds
                .get_mut(*k as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("count {k} exceeds {n}")))? = Some(v?);
        }
        Ok(Self { n, beta, bounds })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn bounds(&self, k: u64) -> Result<(f64, f64)> {
        match self.bounds.get(k as usize).copied().flatten() {
            Some(b) => Ok(b),
            None => clopper_pearson(k, self.n, self.beta),
        }
    }

    pub fn row(&self, counts: &TransitionCounts) -> Result<IntervalRow> {
        let mut row = Vec::with_capacity(counts.successors.len());
        for c in &counts.successors {
            let lower = self.bounds(c.check)?.0;
            let upper = self.bounds(c.hat)?.1;
            row.push((c.state, ProbabilityInterval::new(lower, upper)?));
        }
        check_row(&row)?;
        Ok(row)
    }
}
