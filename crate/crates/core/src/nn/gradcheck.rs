//! Central finite differences against [`Network::backward`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers;
use super::{Architecture, Example, Label, LayerSpec, Labeled, Network, Tensor};
use crate::{seed, Result};

pub const FD_STEP: f64 = 1e-5;

/// Outcome of one finite-difference sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Parameters whose ±step perturbation flips a ReLU or pooling choice.
    pub skipped: usize,
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
}

impl GradCheckReport {
    pub fn merge(&mut self, other: &GradCheckReport) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if other.max_rel_error > self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst_index = other.worst_index;
        }
    }
}

/// Which side of every ReLU each unit is on and which element every pooling
/// window picks.
pub fn activation_pattern(net: &Network<f64>, x: &Tensor<f64>) -> Result<Vec<usize>> {
    let trace = net.forward_trace(x)?;
    let mut out = Vec::new();
    for (plan, input) in net.arch().layers().iter().zip(&trace) {
        match plan.spec {
            LayerSpec::Relu => out.extend(input.as_slice().iter().map(|&v| (v > 0.0) as usize)),
            LayerSpec::MaxPool2d { window } => {
                let s = &plan.input_shape;
                out.extend(layers::maxpool_argmax(input.as_slice(), s[0], s[1], s[2], window));
            }
            _ => {}
        }
    }
    Ok(out)
}

fn mean_loss<S: Labeled<f64>>(net: &Network<f64>, batch: &[S]) -> Result<f64> {
    let mut sum = 0.0;
    for s in batch {
        sum += net.loss(s.input(), s.label())?;
    }
    Ok(sum / batch.len() as f64)
}

/// Compares every component of the analytic mean-batch gradient with
/// `(loss(θ + h e_i) - loss(θ - h e_i)) / 2h`.
///
/// The relative error is `|g - n| / max(|g|, |n|, floor)`. Parameters whose
/// perturbation changes the activation pattern of any sample sit on a kink
/// and are skipped.
pub fn check_gradient<S: Labeled<f64>>(
    net: &Network<f64>,
    batch: &[S],
    step: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let grad = net.backward(batch)?;
    let base: Vec<Vec<usize>> = batch
        .iter()
        .map(|s| activation_pattern(net, s.input()))
        .collect::<Result<_>>()?;
    let mut probe = net.clone();
    let mut report = GradCheckReport::default();
    for i in 0..grad.len() {
        let orig = net.params().values()[i];
        let mut side = |delta: f64| -> Result<Option<f64>> {
            probe.params_mut().values_mut()[i] = orig + delta;
            for (s, pat) in batch.iter().zip(&base) {
                if activation_pattern(&probe, s.input())? != *pat {
                    return Ok(None);
                }
            }
            mean_loss(&probe, batch).map(Some)
        };
        let plus = side(step)?;
        let minus = side(-step)?;
        probe.params_mut().values_mut()[i] = orig;
        let (Some(lp), Some(lm)) = (plus, minus) else {
            report.skipped += 1;
            continue;
        };
        let numeric = (lp - lm) / (2.0 * step);
        let analytic = grad.values()[i];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
        report.checked += 1;
        if report.worst_index.is_none() || rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = Some(i);
        }
    }
    Ok(report)
}

/// A random small network (MLP or conv/pool/MLP, at most `max_params`
/// parameters) initialized with fan-in uniform weights, plus a random batch.
pub fn random_problem(seed: u64, max_params: usize) -> Result<(Network<f64>, Vec<Example<f64>>)> {
    let mut rng = seed::rng(seed);
    let arch = loop {
        let classes = rng.gen_range(2..=5);
        let hidden = rng.gen_range(2..=8);
        let arch = if rng.gen_bool(0.5) {
            let input = rng.gen_range(2..=10);
            Architecture::new(
                vec![input],
                vec![
                    LayerSpec::Linear { in_dim: input, out_dim: hidden },
                    LayerSpec::Relu,
                    LayerSpec::Linear { in_dim: hidden, out_dim: classes },
                ],
                0,
                classes,
            )?
        } else {
            let c = rng.gen_range(1..=2);
            let side: usize = rng.gen_range(5..=9);
            let k = rng.gen_range(2..=3);
            let oc = rng.gen_range(1..=3);
            let pooled = (side - k).div_ceil(2);
            let flat = oc * pooled * pooled;
            Architecture::new(
                vec![c, side, side],
                vec![
                    LayerSpec::Conv2d { in_channels: c, out_channels: oc, kernel_size: k },
                    LayerSpec::Relu,
                    LayerSpec::MaxPool2d { window: 2 },
                    LayerSpec::Flatten,
                    LayerSpec::Linear { in_dim: flat, out_dim: hidden },
                    LayerSpec::Relu,
                    LayerSpec::Linear { in_dim: hidden, out_dim: classes },
                ],
                4,
                classes,
            )?
        };
        if arch.param_count() <= max_params {
            break arch;
        }
    };
    let mut net = Network::zeros(arch);
    let all = 0..net.arch().layers().len();
    net.init_uniform(all, &mut rng);
    let n = rng.gen_range(1..=3);
    let batch = (0..n)
        .map(|_| {
            let shape = net.arch().input_shape().to_vec();
            let len = shape.iter().product();
            let data = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Ok(Example {
                input: Tensor::new(shape, data)?,
                label: Label::from_index(rng.gen_range(0..net.arch().num_classes())),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((net, batch))
}
