//! A small feedforward engine: exactly what the trap construction needs and
//! nothing more. Single-sample forward passes, exact reverse-mode gradients,
//! cross-entropy over softmax, SGD and Adam.
//!
//! Everything is generic over [`Real`] so that training can run in `f32`
//! while verification paths run the same code in `f64`.

mod arch;
pub mod gradcheck;
mod layers;
mod network;
mod optim;
mod params;
mod tensor;

pub use arch::{Architecture, LayerPlan, LayerSpec};
pub use network::{Example, Labeled, Network};
pub use optim::{sgd_step, adam_step, Adam, AdamState, OptimizerConfig, OptimizerState};
pub use params::ParameterVector;
pub use tensor::{Label, Real, Tensor};
