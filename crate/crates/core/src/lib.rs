//! Data-driven abstraction of sampled nonlinear systems into interval MDPs
//! with PAC transition bounds, and reach-avoid controller synthesis on top.

pub mod error;
pub mod exec;
pub mod geometry;
pub mod imdp;
pub mod intervals;
pub mod pipeline;
pub mod reachability;
pub mod synthesis;
pub mod systems;

pub use error::{Error, Result};
