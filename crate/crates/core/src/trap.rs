//! Crafting the trap parameters and the closed-form trap oracles.
//!
//! The trap lives in f1, the layers after the split:
//!
//! ```text
//! f0(x) ──a_m──▶ [unit 2m:   +a_m - η_m] ─ReLU─┐
//!        └─────▶ [unit 2m+1: -a_m + η_m] ─ReLU─┴─(-1)─▶ [aggregator: ... + ε] ─ReLU─ b ─(+1)─▶ logit y_t
//! ```
//!
//! Because `ReLU(z) + ReLU(-z) = |z|`, the aggregator computes
//! `b = ReLU(ε - Σ_m |a_m - η_m|)`. Everything else in f1 has zero weights
//! and bias −1, so it is dead: its output is 0 and no gradient passes it.
//! Away from the target, `b` is locally constant at zero and every gradient
//! except the final-layer biases vanishes.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nn::{Architecture, Label, LayerSpec, Labeled, Network, ParameterVector, Real};
use crate::{seed, Error, Result};

/// Default margin.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// The trap actually embedded in a crafted parameter vector.
///
/// Unit placement is fixed: pair units `0..2M` of the first f1 Linear
/// (unit `2m` carries `+a_m`, unit `2m+1` carries `-a_m`) and unit 0 of the
/// second f1 Linear as the aggregator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    #[serde(rename = "M")]
    pub m: usize,
    /// Selected f0-output coordinates, in selection order.
    pub indices: Vec<usize>,
    /// Target values at `indices` (signed).
    pub etas: Vec<f64>,
    pub epsilon: f64,
    pub target_label: Label,
    /// Seed used for the random f0 initialization.
    pub seed: u64,
}

/// Layer indices of the three f1 Linear layers hosting the trap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrapHost {
    pub pair_layer: usize,
    pub aggregator_layer: usize,
    pub output_layer: usize,
}

impl TrapHost {
    /// f1 must be `[Flatten*] Linear ReLU Linear ReLU Linear`.
    pub fn locate(arch: &Architecture) -> Result<Self> {
        let layers = arch.layers();
        let mut i = arch.split_index();
        while i < layers.len() && layers[i].spec == LayerSpec::Flatten {
            i += 1;
        }
        let kinds: Vec<&LayerSpec> = layers[i..].iter().map(|l| &l.spec).collect();
        match kinds.as_slice() {
            [LayerSpec::Linear { .. }, LayerSpec::Relu, LayerSpec::Linear { .. }, LayerSpec::Relu, LayerSpec::Linear { .. }] => {
                Ok(TrapHost {
                    pair_layer: i,
                    aggregator_layer: i + 2,
                    output_layer: i + 4,
                })
            }
            _ => Err(Error::InvalidArchitecture(format!(
                "f1 must be Linear -> ReLU -> Linear -> ReLU -> Linear, got {:?}",
                kinds.iter().map(|k| k.name()).collect::<Vec<_>>()
            ))),
        }
    }

    pub fn pair_width(&self, arch: &Architecture) -> usize {
        arch.layers()[self.pair_layer].output_shape[0]
    }
}

impl TrapSpec {
    /// Flat index of the aggregator bias ε.
    pub fn epsilon_index(&self, arch: &Architecture) -> Result<usize> {
        let host = TrapHost::locate(arch)?;
        Ok(arch.layers()[host.aggregator_layer].bias_offset)
    }

    /// `Σ_m |a_m - η_m|` for an f0 output.
    pub fn deviation<F: Real>(&self, f0_out: &[F]) -> f64 {
        self.indices
            .iter()
            .zip(&self.etas)
            .map(|(&i, &eta)| (f0_out[i].as_f64() - eta).abs())
            .sum()
    }

    /// Whether an f0 output falls inside the trap (`Σ|a - η| <= ε`).
    pub fn triggers<F: Real>(&self, f0_out: &[F]) -> bool {
        self.deviation(f0_out) <= self.epsilon
    }

    /// The selected components of an f0 output.
    pub fn selected<F: Real>(&self, f0_out: &[F]) -> Vec<f64> {
        self.indices.iter().map(|&i| f0_out[i].as_f64()).collect()
    }
}

/// Indices of the `m` largest-magnitude components (ties go to the smaller
/// index) and the signed values there.
pub fn select_components<F: Real>(f0_out: &[F], m: usize) -> Result<(Vec<usize>, Vec<F>)> {
    if m == 0 || m > f0_out.len() {
        return Err(Error::TooManyComponents {
            requested: m,
            width: f0_out.len(),
        });
    }
    let mut order: Vec<usize> = (0..f0_out.len()).collect();
    order.sort_by(|&i, &j| {
        f0_out[j]
            .abs()
            .partial_cmp(&f0_out[i].abs())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    order.truncate(m);
    let etas = order.iter().map(|&i| f0_out[i]).collect();
    Ok((order, etas))
}

/// Builds θ for a target sample: f0 random (seeded), f1 dead except for the
/// trap around `target`.
///
/// `target` must already be normalized exactly as the client will see it.
pub fn craft_parameters<F: Real, S: Labeled<F>>(
    arch: &Architecture,
    target: &S,
    m: usize,
    epsilon: f64,
    seed: u64,
) -> Result<(ParameterVector<F>, TrapSpec)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let target_label = target.label().check(arch.num_classes())?;
    let host = TrapHost::locate(arch)?;
    let width = arch.f0_width();
    if m == 0 || m > width {
        return Err(Error::TooManyComponents { requested: m, width });
    }
    let available = host.pair_width(arch);
    if 2 * m > available {
        return Err(Error::HiddenTooNarrow {
            needed: 2 * m,
            available,
        });
    }

    let mut net = Network::<F>::zeros(arch.clone());
    net.init_uniform(0..arch.split_index(), &mut seed::rng(seed));
    net.fill_layers(arch.split_index()..arch.layers().len(), F::zero(), -F::one());

    let f0 = net.forward_f0(target.input())?;
    let (indices, etas) = select_components(f0.as_slice(), m)?;
    let nonzero = f0.as_slice().iter().filter(|v| !v.is_zero()).count();
    if nonzero < m {
        log::warn!(
            "target has only {nonzero} nonzero f0 components for M = {m}; near-zero thresholds make accidental triggers likely"
        );
    }

    let layers = arch.layers();
    let pair = &layers[host.pair_layer];
    let agg = &layers[host.aggregator_layer];
    let out = &layers[host.output_layer];
    let pair_in = pair.input_shape[0];
    let agg_in = agg.input_shape[0];
    let out_in = out.input_shape[0];
    let p = net.params_mut().values_mut();
    for (j, (&idx, &eta)) in indices.iter().zip(&etas).enumerate() {
        let (up, down) = (2 * j, 2 * j + 1);
        p[pair.weight_offset + up * pair_in + idx] = F::one();
        p[pair.bias_offset + up] = -eta;
        p[pair.weight_offset + down * pair_in + idx] = -F::one();
        p[pair.bias_offset + down] = eta;
        p[agg.weight_offset + up] = -F::one();
        p[agg.weight_offset + down] = -F::one();
    }
    debug_assert!(agg_in >= 2 * m);
    p[agg.bias_offset] = F::lit(epsilon);
    p[out.weight_offset + target_label.index() * out_in] = F::one();

    let spec = TrapSpec {
        m,
        indices,
        etas: etas.iter().map(|e| e.as_f64()).collect(),
        epsilon: p[agg.bias_offset].as_f64(),
        target_label,
        seed,
    };
    Ok((net.into_parameters(), spec))
}

fn check_lengths(a: &[f64], etas: &[f64]) -> Result<f64> {
    if a.len() != etas.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: etas.len(),
        });
    }
    Ok(a.iter().zip(etas).map(|(x, e)| (x - e).abs()).sum())
}

/// `ReLU(ε - Σ_m |a_m - η_m|)`.
pub fn trap_output_oracle(a: &[f64], etas: &[f64], epsilon: f64) -> Result<f64> {
    let dev = check_lengths(a, etas)?;
    Ok((epsilon - dev).max(0.0))
}

/// `∂b/∂ε`: 1 inside the trap, 0 outside. The boundary is a kink.
pub fn trap_eps_grad_oracle(a: &[f64], etas: &[f64], epsilon: f64) -> Result<f64> {
    let dev = check_lengths(a, etas)?;
    if dev == epsilon {
        return Err(Error::TrapKink { epsilon });
    }
    Ok(if dev < epsilon { 1.0 } else { 0.0 })
}

/// Loss when every logit but `y_t` is zero and logit `y_t` is `b`:
/// `-b·[y = y_t] + log(L - 1 + e^b)`.
pub fn trap_loss_oracle(b: f64, y: Label, target: Label, num_classes: usize) -> Result<f64> {
    if num_classes < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {num_classes}")));
    }
    let hit = if y == target { b } else { 0.0 };
    Ok(-hit + libm::log(num_classes as f64 - 1.0 + libm::exp(b)))
}

/// `∂ℓ/∂ε = 1[Σ|a-η| ≤ ε] · (e^b / (L - 1 + e^b) - [y = y_t])`.
pub fn trap_loss_eps_grad_oracle(
    a: &[f64],
    etas: &[f64],
    epsilon: f64,
    y: Label,
    target: Label,
    num_classes: usize,
) -> Result<f64> {
    let gate = trap_eps_grad_oracle(a, etas, epsilon)?;
    if num_classes < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {num_classes}")));
    }
    if gate == 0.0 {
        return Ok(0.0);
    }
    let b = trap_output_oracle(a, etas, epsilon)?;
    let e = libm::exp(b);
    let hit = if y == target { 1.0 } else { 0.0 };
    Ok(e / (num_classes as f64 - 1.0 + e) - hit)
}
