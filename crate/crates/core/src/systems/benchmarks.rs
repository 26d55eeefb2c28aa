use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DynamicsModel, JacobianBound, NoiseModel};
use crate::error::Result;
use crate::geometry::HyperRect;

/// Planar car with speed/heading inputs:
/// `p⁺ = p + 10·δ·v·(cos θ, sin θ) + w`.
#[derive(Debug, Clone)]
pub struct CarParking {
    pub delta: f64,
    input_box: HyperRect,
    noise: NoiseModel,
}

impl CarParking {
    pub fn new(delta: f64, input_box: HyperRect, noise: NoiseModel) -> Self {
        Self {
            delta,
            input_box,
            noise,
        }
    }

    pub fn standard(delta: f64) -> Self {
        Self::new(
            delta,
            HyperRect::new(vec![-0.1, -PI], vec![0.1, PI]).expect("static bounds"),
            NoiseModel::Uniform {
                lower: vec![-0.55, -0.55],
                upper: vec![0.55, 0.55],
            },
        )
    }
}

impl DynamicsModel for CarParking {
    fn name(&self) -> &str {
        "car_parking"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn input_box(&self) -> &HyperRect {
        &self.input_box
    }

    fn nominal(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let gain = 10.0 * self.delta * u[0];
        let (s, c) = u[1].sin_cos();
        out[0] = x[0] + gain * c;
        out[1] = x[1] + gain * s;
    }

    fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn jacobian_bound(&self, _region: &HyperRect) -> JacobianBound {
        JacobianBound::identity(2)
    }
}

/// Inverted pendulum, state `(θ, ω)`, torque input. The torque enters the
/// velocity update without a `δ` factor.
#[derive(Debug, Clone)]
pub struct InvertedPendulum {
    pub delta: f64,
    pub gravity: f64,
    pub length: f64,
    pub mass: f64,
    input_box: HyperRect,
    noise: NoiseModel,
}

impl InvertedPendulum {
    pub fn new(delta: f64, gravity: f64, length: f64, mass: f64, input_box: HyperRect, noise: NoiseModel) -> Self {
        Self {
            delta,
            gravity,
            length,
            mass,
            input_box,
            noise,
        }
    }

    pub fn standard() -> Self {
        Self::new(
            0.1,
            9.81,
            1.0,
            1.0,
            HyperRect::new(vec![-17.5], vec![17.5]).expect("static bounds"),
            NoiseModel::Uniform {
                lower: vec![-0.1, -0.2],
                upper: vec![0.1, 0.2],
            },
        )
    }
}

/// `sup |cos θ|` over `[a, b]`.
fn sup_abs_cos(a: f64, b: f64) -> f64 {
    // |cos| peaks at multiples of π and is otherwise maximised at an endpoint.
    if (a / PI).ceil() <= (b / PI).floor() {
        1.0
    } else {
        a.cos().abs().max(b.cos().abs())
    }
}

impl DynamicsModel for InvertedPendulum {
    fn name(&self) -> &str {
        "inverted_pendulum"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn input_box(&self) -> &HyperRect {
        &self.input_box
    }

    fn nominal(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let (theta, omega) = (x[0], x[1]);
        out[0] = theta + self.delta * omega;
        out[1] = omega + self.delta * (-self.gravity / self.length) * (-theta).sin()
            + u[0] / (self.mass * self.length * self.length);
    }

    fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn jacobian_bound(&self, region: &HyperRect) -> JacobianBound {
        let coupling = self.delta * self.gravity / self.length
            * sup_abs_cos(region.lower()[0], region.upper()[0]);
        JacobianBound::from_rows(vec![vec![1.0, self.delta], vec![coupling, 1.0]])
            .expect("nonnegative by construction")
    }
}

/// Harmonic oscillator with cubic damping, state `(x, v)`, force input.
#[derive(Debug, Clone)]
pub struct NonlinearOscillator {
    pub delta: f64,
    pub damping: f64,
    input_box: HyperRect,
    noise: NoiseModel,
}

impl NonlinearOscillator {
    pub fn new(delta: f64, damping: f64, input_box: HyperRect, noise: NoiseModel) -> Self {
        Self {
            delta,
            damping,
            input_box,
            noise,
        }
    }

    pub fn standard() -> Self {
        Self::new(
            1.0,
            0.0075,
            HyperRect::new(vec![-1.0], vec![1.0]).expect("static bounds"),
            NoiseModel::Gaussian {
                mean: vec![0.0, 0.0],
                std_dev: vec![0.5, 0.5],
            },
        )
    }
}

impl DynamicsModel for NonlinearOscillator {
    fn name(&self) -> &str {
        "nonlinear_oscillator"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn input_box(&self) -> &HyperRect {
        &self.input_box
    }

    fn nominal(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let (pos, vel) = (x[0], x[1]);
        let d = self.delta;
        out[0] = pos + d * vel + d * d * u[0] / 2.0;
        out[1] = vel - self.damping * d * vel * vel * vel + d * u[0];
    }

    fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn jacobian_bound(&self, region: &HyperRect) -> JacobianBound {
        let (a, b) = (region.lower()[1], region.upper()[1]);
        let slope = |v: f64| (1.0 - 3.0 * self.damping * self.delta * v * v).abs();
        let nearest_zero = 0.0f64.clamp(a, b);
        let dv = slope(a).max(slope(b)).max(slope(nearest_zero));
        JacobianBound::from_rows(vec![vec![1.0, self.delta], vec![0.0, dv]])
            .expect("nonnegative by construction")
    }
}

type NominalFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// Black-box model whose state sensitivity is known only through a constant
/// Lipschitz-style bound valid on the whole domain.
#[derive(Clone)]
pub struct LipschitzModel {
    name: String,
    state_dim: usize,
    input_box: HyperRect,
    map: Arc<NominalFn>,
    bound: JacobianBound,
    noise: NoiseModel,
}

impl LipschitzModel {
    pub fn new(
        name: impl Into<String>,
        input_box: HyperRect,
        bound: JacobianBound,
        noise: NoiseModel,
        map: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            state_dim: bound.dim(),
            input_box,
            map: Arc::new(map),
            bound,
            noise,
        }
    }
}

impl fmt::Debug for LipschitzModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzModel")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl DynamicsModel for LipschitzModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn input_dim(&self) -> usize {
        self.input_box.dim()
    }

    fn input_box(&self) -> &HyperRect {
        &self.input_box
    }

    fn nominal(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        (self.map)(x, u, out)
    }

    fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn jacobian_bound(&self, _region: &HyperRect) -> JacobianBound {
        self.bound.clone()
    }
}

/// Benchmark selection with every physical parameter explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "benchmark", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    CarParking {
        delta: f64,
        input_lower: Vec<f64>,
        input_upper: Vec<f64>,
        noise: NoiseModel,
    },
    InvertedPendulum {
        delta: f64,
        gravity: f64,
        length: f64,
        mass: f64,
        input_lower: Vec<f64>,
        input_upper: Vec<f64>,
        noise: NoiseModel,
    },
    NonlinearOscillator {
        delta: f64,
        damping: f64,
        input_lower: Vec<f64>,
        input_upper: Vec<f64>,
        noise: NoiseModel,
    },
}

impl SystemConfig {
    pub fn car_parking() -> Self {
        SystemConfig::CarParking {
            delta: 1.0,
            input_lower: vec![-0.1, -PI],
            input_upper: vec![0.1, PI],
            noise: NoiseModel::Uniform {
                lower: vec![-0.55, -0.55],
                upper: vec![0.55, 0.55],
            },
        }
    }

    pub fn inverted_pendulum() -> Self {
        SystemConfig::InvertedPendulum {
            delta: 0.1,
            gravity: 9.81,
            length: 1.0,
            mass: 1.0,
            input_lower: vec![-17.5],
            input_upper: vec![17.5],
            noise: NoiseModel::Uniform {
                lower: vec![-0.1, -0.2],
                upper: vec![0.1, 0.2],
            },
        }
    }

    pub fn nonlinear_oscillator() -> Self {
        SystemConfig::NonlinearOscillator {
            delta: 1.0,
            damping: 0.0075,
            input_lower: vec![-1.0],
            input_upper: vec![1.0],
            noise: NoiseModel::Gaussian {
                mean: vec![0.0, 0.0],
                std_dev: vec![0.5, 0.5],
            },
        }
    }

    pub fn build(&self) -> Result<Arc<dyn DynamicsModel>> {
        Ok(match self {
            SystemConfig::CarParking {
                delta,
                input_lower,
                input_upper,
                noise,
            } => {
                noise.validate()?;
                let u = HyperRect::new(input_lower.clone(), input_upper.clone())?;
                Arc::new(CarParking::new(*delta, u, noise.clone()))
            }
            SystemConfig::InvertedPendulum {
                delta,
                gravity,
                length,
                mass,
                input_lower,
                input_upper,
                noise,
            } => {
                noise.validate()?;
                let u = HyperRect::new(input_lower.clone(), input_upper.clone())?;
                Arc::new(InvertedPendulum::new(*delta, *gravity, *length, *mass, u, noise.clone()))
            }
            SystemConfig::NonlinearOscillator {
                delta,
                damping,
                input_lower,
                input_upper,
                noise,
            } => {
                noise.validate()?;
                let u = HyperRect::new(input_lower.clone(), input_upper.clone())?;
                Arc::new(NonlinearOscillator::new(*delta, *damping, u, noise.clone()))
            }
        })
    }
}
