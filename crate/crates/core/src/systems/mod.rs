//! Sampled dynamics `x⁺ = f(x, u) + w`: the model interface, Jacobian
//! bounds, additive noise and grid datasets of nominal transitions.

mod benchmarks;
mod dataset;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperRect;

pub use benchmarks::{CarParking, InvertedPendulum, LipschitzModel, NonlinearOscillator, SystemConfig};
pub use dataset::{
    cell_samples, generate_dataset, input_grid, state_grid, CellSamples, Dataset, SampleTriple,
    SamplingGrid,
};

/// Dense square matrix of nonnegative entries bounding `|∂f_p/∂x_q|` over a
/// region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianBound {
    n: usize,
    entries: Vec<f64>,
}

impl JacobianBound {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("Jacobian bound must be square".into()));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::InvalidArgument(
                "Jacobian bound entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.entries[p * self.n + q]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `‖J⁺ · v‖∞` for a nonnegative vector `v`.
    #[inline]
    pub fn apply_inf_norm(&self, v: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for row in self.entries.chunks_exact(self.n) {
            let s: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            best = best.max(s);
        }
        best
    }

    /// Entrywise `J⁺ · v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Additive i.i.d. noise `w` with independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
    Gaussian { mean: Vec<f64>, std_dev: Vec<f64> },
}

impl NoiseModel {
    pub fn dim(&self) -> usize {
        match self {
            NoiseModel::Uniform { lower, .. } => lower.len(),
            NoiseModel::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Uniform { lower, upper } => {
                if lower.len() != upper.len() || lower.iter().zip(upper).any(|(a, b)| !(a <= b)) {
                    return Err(Error::InvalidArgument(
                        "uniform noise bounds must be ordered and of equal length".into(),
                    ));
                }
            }
            NoiseModel::Gaussian { mean, std_dev } => {
                if mean.len() != std_dev.len() || std_dev.iter().any(|s| !(*s >= 0.0)) {
                    return Err(Error::InvalidArgument(
                        "gaussian noise needs one nonnegative standard deviation per mean".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            NoiseModel::Uniform { lower, upper } => {
                for (o, (lo, hi)) in out.iter_mut().zip(lower.iter().zip(upper)) {
                    *o = if lo == hi { *lo } else { rng.random_range(*lo..*hi) };
                }
            }
            NoiseModel::Gaussian { mean, std_dev } => {
                for (o, (m, s)) in out.iter_mut().zip(mean.iter().zip(std_dev)) {
                    *o = if *s == 0.0 {
                        *m
                    } else {
                        Normal::new(*m, *s).expect("validated std_dev").sample(rng)
                    };
                }
            }
        }
    }
}

/// A discrete-time system with additive noise and sampling access to the
/// nominal map.
pub trait DynamicsModel: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn input_dim(&self) -> usize;

    /// Compact admissible input set `U`.
    fn input_box(&self) -> &HyperRect;

    /// Writes `f(x, u)` into `out`. Must be deterministic.
    fn nominal(&self, x: &[f64], u: &[f64], out: &mut [f64]);

    fn noise(&self) -> &NoiseModel;

    /// Entrywise supremum of `|∂f/∂x|` over `x ∈ region` and `u ∈ U`.
    fn jacobian_bound(&self, region: &HyperRect) -> JacobianBound;
}

/// `f(x, u)` with the input checked against `U`.
pub fn step_nominal(model: &dyn DynamicsModel, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != model.input_dim() || !model.input_box().contains(u) {
        return Err(Error::InputOutOfDomain { input: u.to_vec() });
    }
    let mut out = vec![0.0; model.state_dim()];
    model.nominal(x, u, &mut out);
    Ok(out)
}

/// `count` i.i.d. noise draws.
pub fn sample_noise<R: Rng + ?Sized>(model: &dyn DynamicsModel, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
    let n = model.state_dim();
    (0..count)
        .map(|_| {
            let mut w = vec![0.0; n];
            model.noise().sample_into(rng, &mut w);
            w
        })
        .collect()
}
