//! Independent reference implementations used by the integration tests.
//! None of these call into the numerics they check.

#![allow(dead_code)]

use std::path::PathBuf;

use pacimdp::imdp::{Horizon, ImdpAction, IntervalImdp, ReachAvoidSpec};
use pacimdp::intervals::ProbabilityInterval;
use pacimdp::pipeline::RunConfig;
use rand::Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

pub fn load_config(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

// ---------------------------------------------------------------------------
// Binomial tails by direct summation, and Clopper-Pearson by bisection on them.

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `P(Bin(n, p) ≥ k)`.
pub fn binom_tail_ge(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (k..=n)
        .map(|i| (ln_choose(n, i) + i as f64 * lp + (n - i) as f64 * lq).exp())
        .sum::<f64>()
        .min(1.0)
}

/// `P(Bin(n, p) ≤ k)`.
pub fn binom_tail_le(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (0..=k)
        .map(|i| (ln_choose(n, i) + i as f64 * lp + (n - i) as f64 * lq).exp())
        .sum::<f64>()
        .min(1.0)
}

/// Root of a monotone `g` on `[0, 1]`, `increasing` giving its direction.
fn bisect(g: impl Fn(f64) -> f64, target: f64, increasing: bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn clopper_pearson_oracle(k: u64, n: u64, beta: f64) -> (f64, f64) {
    let half = beta / 2.0;
    let lower = if k == 0 {
        0.0
    } else {
        bisect(|p| binom_tail_ge(k, n, p), half, true)
    };
    let upper = if k == n {
        1.0
    } else {
        bisect(|p| binom_tail_le(k, n, p), half, false)
    };
    (lower, upper)
}

// ---------------------------------------------------------------------------
// Scaling factors.

/// Smallest `λ` with `min_q (λ·h_q − |x'_q − d_q|) ≥ t`, by bisection.
pub fn lambda_star_bisect(t: f64, half_widths: &[f64], offsets: &[f64]) -> f64 {
    let ok = |l: f64| {
        half_widths
            .iter()
            .zip(offsets)
            .all(|(h, a)| l * h - a.abs() >= t)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while !ok(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

// ---------------------------------------------------------------------------
// Small interval MDPs: brute-force adversary enumeration and plain VI.

/// Decision states `0..active`, then a goal state, the absorbing state and
/// the sink. `rows[s][a]` lists `(successor, lower, upper)`.
#[derive(Debug, Clone)]
pub struct SmallImdp {
    pub active: usize,
    pub rows: Vec<Vec<Vec<(usize, f64, f64)>>>,
}

impl SmallImdp {
    pub fn goal(&self) -> usize {
        self.active
    }

    pub fn num_states(&self) -> usize {
        self.active + 3
    }

    /// Random instance whose rows each have `support` successors among the
    /// decision states, the goal and the absorbing state.
    pub fn random<R: Rng>(rng: &mut R, active: usize, actions: usize, support: usize, point: bool) -> Self {
        let reachable = active + 2;
        let rows = (0..active)
            .map(|_| {
                (0..actions)
                    .map(|_| {
                        let mut succ: Vec<usize> = (0..reachable).collect();
                        for k in 0..support {
                            let m = rng.random_range(k..reachable);
                            succ.swap(k, m);
                        }
                        succ.truncate(support);
                        succ.sort_unstable();
                        let w: Vec<f64> = (0..support).map(|_| rng.random_range(0.05..1.0)).collect();
                        let total: f64 = w.iter().sum();
                        succ.iter()
                            .zip(&w)
                            .map(|(&s, &wi)| {
                                let p = wi / total;
                                if point {
                                    (s, p, p)
                                } else {
                                    let lo = p * rng.random_range(0.0..1.0);
                                    let hi = (p + rng.random_range(0.0..0.5)).min(1.0);
                                    (s, lo, hi)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { active, rows }
    }

    pub fn to_imdp(&self) -> (IntervalImdp, ReachAvoidSpec) {
        let n = self.num_states();
        let mut actions: Vec<Vec<ImdpAction>> = vec![Vec::new(); n];
        for (s, acts) in self.rows.iter().enumerate() {
            for (a, row) in acts.iter().enumerate() {
                actions[s].push(ImdpAction {
                    target: a,
                    row: row
                        .iter()
                        .map(|&(t, lo, hi)| (t, ProbabilityInterval::new(lo, hi).unwrap()))
                        .collect(),
                });
            }
        }
        let imdp = IntervalImdp::new(n, 0, actions).unwrap();
        let spec = ReachAvoidSpec::from_sets(n, &[self.goal()], &[], Horizon::Infinite).unwrap();
        (imdp, spec)
    }
}

/// Vertices of `{ p : lower ≤ p ≤ upper, Σ p = 1 }`.
pub fn row_vertices(row: &[(usize, f64, f64)]) -> Vec<Vec<f64>> {
    let m = row.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for free in 0..m {
        for mask in 0..(1u32 << (m - 1)) {
            let mut p = vec![0.0; m];
            let mut bit = 0;
            for (k, &(_, lo, hi)) in row.iter().enumerate() {
                if k == free {
                    continue;
                }
                p[k] = if mask >> bit & 1 == 1 { hi } else { lo };
                bit += 1;
            }
            let rest = 1.0 - p.iter().sum::<f64>();
            let (_, lo, hi) = row[free];
            if rest >= lo - 1e-12 && rest <= hi + 1e-12 {
                p[free] = rest.clamp(lo, hi);
                if !out.iter().any(|v| v.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-14)) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Reach probability of `goal` in the Markov chain given by one
/// distribution per decision state; other states are terminal.
pub fn chain_reach(active: usize, goal: usize, n: usize, dist: &[Vec<(usize, f64)>]) -> Vec<f64> {
    // States that reach the goal with positive probability.
    let mut can = vec![false; n];
    can[goal] = true;
    loop {
        let mut changed = false;
        for s in 0..active {
            if !can[s] && dist[s].iter().any(|&(t, p)| p > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let idx: Vec<usize> = (0..active).filter(|&s| can[s]).collect();
    let m = idx.len();
    let pos = |s: usize| idx.iter().position(|&x| x == s);
    // (I − P_TT) v = P_T,goal
    let mut a = vec![vec![0.0; m + 1]; m];
    for (r, &s) in idx.iter().enumerate() {
        a[r][r] = 1.0;
        for &(t, p) in &dist[s] {
            if t == goal {
                a[r][m] += p;
            } else if let Some(c) = pos(t) {
                a[r][c] -= p;
            }
        }
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for c in col..=m {
            a[col][c] /= d;
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let mut v = vec![0.0; n];
    v[goal] = 1.0;
    for (r, &s) in idx.iter().enumerate() {
        v[s] = a[r][m];
    }
    v
}

/// `max_σ min_τ P(reach goal)` over stationary deterministic policies and
/// stationary vertex adversaries, by exhaustive enumeration.
pub fn brute_force_values(imdp: &SmallImdp) -> Vec<f64> {
    let n = imdp.num_states();
    let goal = imdp.goal();
    let verts: Vec<Vec<Vec<Vec<f64>>>> = imdp
        .rows
        .iter()
        .map(|acts| acts.iter().map(|r| row_vertices(r)).collect())
        .collect();
    let mut best = vec![0.0f64; n];
    best[goal] = 1.0;
    let mut policy = vec![0usize; imdp.active];
    loop {
        let mut worst = vec![f64::INFINITY; n];
        let mut choice = vec![0usize; imdp.active];
        loop {
            let dist: Vec<Vec<(usize, f64)>> = (0..imdp.active)
                .map(|s| {
                    let row = &imdp.rows[s][policy[s]];
                    let p = &verts[s][policy[s]][choice[s]];
                    row.iter().zip(p).map(|(&(t, _, _), &q)| (t, q)).collect()
                })
                .collect();
            let v = chain_reach(imdp.active, goal, n, &dist);
            for s in 0..n {
                worst[s] = worst[s].min(v[s]);
            }
            if !advance(&mut choice, |s| verts[s][policy[s]].len()) {
                break;
            }
        }
        for s in 0..n {
            best[s] = best[s].max(worst[s]);
        }
        if !advance(&mut policy, |s| imdp.rows[s].len()) {
            break;
        }
    }
    best
}

/// Odometer increment; false once every combination has been visited.
fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for (s, d) in digits.iter_mut().enumerate() {
        *d += 1;
        if *d < radix(s) {
            return true;
        }
        *d = 0;
    }
    false
}

/// Standard value iteration for an MDP given by point rows.
pub fn plain_value_iteration(imdp: &SmallImdp, tol: f64) -> Vec<f64> {
    let n = imdp.num_states();
    let mut v = vec![0.0; n];
    v[imdp.goal()] = 1.0;
    for _ in 0..1_000_000 {
        let mut next = v.clone();
        for s in 0..imdp.active {
            next[s] = imdp.rows[s]
                .iter()
                .map(|row| row.iter().map(|&(t, p, _)| p * v[t]).sum::<f64>())
                .fold(0.0, f64::max);
        }
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff < tol {
            break;
        }
    }
    v
}
