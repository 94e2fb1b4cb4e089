//! The server-side decision: how far did ε move, relative to how far it
//! moves when the client trains on the target alone?

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::fedsim::{client_train, ClientConfig};
use crate::nn::{Architecture, Labeled, Network, OptimizerConfig, Real};
use crate::trap::{craft_parameters, TrapSpec};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionConfig {
    /// ξ
    pub threshold: f64,
    /// B, as used by the client.
    pub batch_size: usize,
}

impl DecisionConfig {
    pub fn new(threshold: f64, batch_size: usize) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidConfig(format!("threshold must be positive, got {threshold}")));
        }
        if batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        Ok(DecisionConfig { threshold, batch_size })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    /// Δ
    pub delta: f64,
    /// T̂
    pub decision: bool,
    /// ε as crafted.
    pub eps_initial: f64,
    /// ε after the client's training run.
    pub eps_client: f64,
    /// ε after one step on the target alone.
    pub eps_reference: f64,
}

/// Everything the server fixes before querying the client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub m: usize,
    pub epsilon: f64,
    pub client: ClientConfig,
    pub decision: DecisionConfig,
}

/// ε after one optimizer step (same optimizer and learning rate as the
/// client, fresh state) on the single-sample batch `{target}`.
pub fn reference_eps<F: Real, S: Labeled<F>>(
    theta: &Network<F>,
    trap: &TrapSpec,
    target: &S,
    optimizer: &OptimizerConfig,
) -> Result<F> {
    let idx = trap.epsilon_index(theta.arch())?;
    let mut cfg = ClientConfig::new(1, 1, 1, *optimizer);
    cfg.shuffle_per_epoch = false;
    let phi = client_train(theta, core::slice::from_ref(target), &cfg)?;
    Ok(phi.values()[idx])
}

/// `Δ = B · |ε̂ - ε| / |ε̃ - ε|`.
pub fn decision_statistic(eps_initial: f64, eps_client: f64, eps_reference: f64, batch_size: usize) -> Result<f64> {
    let denom = (eps_reference - eps_initial).abs();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroReference);
    }
    Ok(batch_size as f64 * (eps_client - eps_initial).abs() / denom)
}

/// `T̂ = 1` iff `Δ ≥ ξ`.
pub fn decide(delta: f64, threshold: f64) -> bool {
    delta >= threshold
}

/// Craft θ around `target`, let the client train on `dataset`, run the
/// reference step and decide.
pub fn run_attack<F: Real, S: Labeled<F>>(
    arch: &Architecture,
    dataset: &[S],
    target: &S,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<AttackOutcome> {
    if cfg.decision.batch_size != cfg.client.batch_size {
        return Err(Error::InvalidConfig(format!(
            "decision batch size {} differs from client batch size {}",
            cfg.decision.batch_size, cfg.client.batch_size
        )));
    }
    let (theta, trap) = craft_parameters::<F, S>(arch, target, cfg.m, cfg.epsilon, seed)?;
    let theta = Network::with_parameters(arch.clone(), theta)?;
    let idx = trap.epsilon_index(arch)?;
    let eps_initial = theta.params().values()[idx];

    let phi = client_train(&theta, dataset, &cfg.client)?;
    let eps_client = phi.values()[idx];
    let eps_reference = reference_eps(&theta, &trap, target, &cfg.client.optimizer)?;

    let delta = decision_statistic(
        eps_initial.as_f64(),
        eps_client.as_f64(),
        eps_reference.as_f64(),
        cfg.decision.batch_size,
    )?;
    Ok(AttackOutcome {
        delta,
        decision: decide(delta, cfg.decision.threshold),
        eps_initial: eps_initial.as_f64(),
        eps_client: eps_client.as_f64(),
        eps_reference: eps_reference.as_f64(),
    })
}
