use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use super::layers::{self, ConvDims};
use super::{Architecture, Label, LayerPlan, LayerSpec, ParameterVector, Real, Tensor};
use crate::{Error, Result};

/// A training example: an input tensor and its label.
pub trait Labeled<F> {
    fn input(&self) -> &Tensor<F>;
    fn label(&self) -> Label;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example<F> {
    pub input: Tensor<F>,
    pub label: Label,
}

impl<F> Labeled<F> for Example<F> {
    fn input(&self) -> &Tensor<F> {
        &self.input
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl<F, T: Labeled<F>> Labeled<F> for &T {
    fn input(&self) -> &Tensor<F> {
        (*self).input()
    }
    fn label(&self) -> Label {
        (*self).label()
    }
}

/// Architecture plus parameter storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<F> {
    arch: Architecture,
    params: ParameterVector<F>,
}

impl<F: Real> Network<F> {
    pub fn zeros(arch: Architecture) -> Self {
        let params = ParameterVector::zeros(&arch);
        Network { arch, params }
    }

    /// All weights 0, all biases −1: every hidden ReLU is dead.
    pub fn dead(arch: Architecture) -> Self {
        let mut net = Network::zeros(arch);
        let all = 0..net.arch.layers().len();
        net.fill_layers(all, F::zero(), -F::one());
        net
    }

    pub fn with_parameters(arch: Architecture, params: ParameterVector<F>) -> Result<Self> {
        params.check_arch(&arch)?;
        Ok(Network { arch, params })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &ParameterVector<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterVector<F> {
        &mut self.params
    }

    /// Snapshot of the current parameters.
    pub fn flatten(&self) -> ParameterVector<F> {
        self.params.clone()
    }

    /// Replaces all parameters with `params`, which must share the layout.
    pub fn unflatten(&mut self, params: ParameterVector<F>) -> Result<()> {
        params.check_arch(&self.arch)?;
        self.params = params;
        Ok(())
    }

    pub fn into_parameters(self) -> ParameterVector<F> {
        self.params
    }

    /// Sets every weight in `layers` to `weight` and every bias to `bias`.
    pub fn fill_layers(&mut self, layers: Range<usize>, weight: F, bias: F) {
        for i in layers {
            let plan = &self.arch.layers()[i];
            let (w, b) = (plan.weight_range(), plan.bias_range());
            self.params.values_mut()[w].iter_mut().for_each(|v| *v = weight);
            self.params.values_mut()[b].iter_mut().for_each(|v| *v = bias);
        }
    }

    /// Uniform fan-in initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
    /// for weights and biases of the given layers.
    ///
    /// Draws are made in `f64` and rounded, so `f32` and `f64` networks built
    /// from the same generator state agree up to rounding.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, layers: Range<usize>, rng: &mut R) {
        for i in layers {
            let plan = &self.arch.layers()[i];
            let Some(fan_in) = plan.spec.fan_in() else {
                continue;
            };
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            let range = plan.weight_offset..plan.bias_range().end;
            for v in &mut self.params.values_mut()[range] {
                *v = F::lit(rng.gen_range(-bound..=bound));
            }
        }
    }

    fn check_input(&self, x: &Tensor<F>) -> Result<()> {
        if x.shape() != self.arch.input_shape() {
            return Err(Error::ShapeMismatch {
                layer: 0,
                kind: self.arch.layers()[0].spec.name(),
                expected: self.arch.input_shape().to_vec(),
                actual: x.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Logits `f(x; θ)`.
    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for plan in self.arch.layers() {
            cur = self.apply(plan, &cur);
        }
        Ok(cur)
    }

    /// Activations after every layer; entry 0 is the input itself, entry
    /// `i + 1` the output of layer `i`.
    pub fn forward_trace(&self, x: &Tensor<F>) -> Result<Vec<Tensor<F>>> {
        self.check_input(x)?;
        let mut trace = Vec::with_capacity(self.arch.layers().len() + 1);
        trace.push(x.clone());
        for plan in self.arch.layers() {
            let next = self.apply(plan, trace.last().unwrap());
            trace.push(next);
        }
        Ok(trace)
    }

    /// The flattened activation at the f0/f1 boundary.
    pub fn forward_f0(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for plan in &self.arch.layers()[..self.arch.split_index()] {
            cur = self.apply(plan, &cur);
        }
        let n = cur.len();
        Ok(cur.reshaped(vec![n]))
    }

    fn apply(&self, plan: &LayerPlan, input: &Tensor<F>) -> Tensor<F> {
        let p = self.params.values();
        let mut out = Tensor::zeros(plan.output_shape.clone());
        match plan.spec {
            LayerSpec::Conv2d { .. } => {
                layers::conv2d_forward(
                    &conv_dims(plan),
                    input.as_slice(),
                    &p[plan.weight_range()],
                    &p[plan.bias_range()],
                    out.as_mut_slice(),
                );
            }
            LayerSpec::MaxPool2d { window } => {
                let [c, h, w] = dims3(&plan.input_shape);
                let src = input.as_slice();
                for (o, i) in out
                    .as_mut_slice()
                    .iter_mut()
                    .zip(layers::maxpool_argmax(src, c, h, w, window))
                {
                    *o = src[i];
                }
            }
            LayerSpec::Linear { .. } => {
                layers::linear_forward(
                    input.as_slice(),
                    &p[plan.weight_range()],
                    &p[plan.bias_range()],
                    out.as_mut_slice(),
                );
            }
            LayerSpec::Relu => {
                for (o, &v) in out.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    *o = if v > F::zero() { v } else { F::zero() };
                }
            }
            LayerSpec::Flatten => {
                out.as_mut_slice().copy_from_slice(input.as_slice());
            }
        }
        out
    }

    /// Cross-entropy of the softmax: `-f(x)_y + log Σ_l exp f(x)_l`.
    pub fn loss(&self, x: &Tensor<F>, y: Label) -> Result<F> {
        y.check(self.arch.num_classes())?;
        let logits = self.forward(x)?;
        Ok(cross_entropy(logits.as_slice(), y))
    }

    /// Gradient of `<upstream, f(x; θ)>` with respect to θ.
    pub fn vjp(&self, x: &Tensor<F>, upstream: &[F]) -> Result<ParameterVector<F>> {
        if upstream.len() != self.arch.num_classes() {
            return Err(Error::LengthMismatch {
                left: upstream.len(),
                right: self.arch.num_classes(),
            });
        }
        let trace = self.forward_trace(x)?;
        let mut grad = ParameterVector::zeros(&self.arch);
        self.backprop(&trace, upstream.to_vec(), grad.values_mut());
        Ok(grad)
    }

    /// Mean gradient of the loss over `batch`.
    ///
    /// The ReLU derivative at exactly 0 is taken as 0; max pooling routes the
    /// gradient to the first maximum of each window.
    pub fn backward<S: Labeled<F>>(&self, batch: &[S]) -> Result<ParameterVector<F>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grad = ParameterVector::zeros(&self.arch);
        for sample in batch {
            let y = sample.label().check(self.arch.num_classes())?;
            let trace = self.forward_trace(sample.input())?;
            let delta = cross_entropy_grad(trace.last().unwrap().as_slice(), y);
            self.backprop(&trace, delta, grad.values_mut());
        }
        grad.scale(F::one() / F::lit(batch.len() as f64));
        Ok(grad)
    }

    /// Accumulates parameter gradients given the gradient at the logits.
    ///
    /// Stops as soon as the propagated gradient is identically zero: every
    /// remaining contribution would be an exact zero.
    fn backprop(&self, trace: &[Tensor<F>], mut delta: Vec<F>, grad: &mut [F]) {
        let p = self.params.values();
        for (i, plan) in self.arch.layers().iter().enumerate().rev() {
            if delta.iter().all(|g| g.is_zero()) {
                return;
            }
            let input = trace[i].as_slice();
            let need_input_grad = i > 0;
            match plan.spec {
                LayerSpec::Conv2d { .. } => {
                    let mut gi = vec![F::zero(); if need_input_grad { input.len() } else { 0 }];
                    let (gw, gb) = split_grad(grad, plan);
                    layers::conv2d_backward(
                        &conv_dims(plan),
                        input,
                        &p[plan.weight_range()],
                        &delta,
                        gw,
                        gb,
                        need_input_grad.then_some(gi.as_mut_slice()),
                    );
                    delta = gi;
                }
                LayerSpec::Linear { .. } => {
                    let mut gi = vec![F::zero(); if need_input_grad { input.len() } else { 0 }];
                    let (gw, gb) = split_grad(grad, plan);
                    layers::linear_backward(
                        input,
                        &p[plan.weight_range()],
                        &delta,
                        gw,
                        gb,
                        need_input_grad.then_some(gi.as_mut_slice()),
                    );
                    delta = gi;
                }
                LayerSpec::MaxPool2d { window } => {
                    let [c, h, w] = dims3(&plan.input_shape);
                    let mut gi = vec![F::zero(); input.len()];
                    for (&g, idx) in delta.iter().zip(layers::maxpool_argmax(input, c, h, w, window)) {
                        gi[idx] += g;
                    }
                    delta = gi;
                }
                LayerSpec::Relu => {
                    for (g, &x) in delta.iter_mut().zip(input) {
                        if x <= F::zero() {
                            *g = F::zero();
                        }
                    }
                }
                LayerSpec::Flatten => {}
            }
        }
    }
}

fn split_grad<'a, F>(grad: &'a mut [F], plan: &LayerPlan) -> (&'a mut [F], &'a mut [F]) {
    let (head, tail) = grad.split_at_mut(plan.bias_offset);
    let nb = plan.spec.param_counts().1;
    (&mut head[plan.weight_offset..], &mut tail[..nb])
}

fn dims3(shape: &[usize]) -> [usize; 3] {
    [shape[0], shape[1], shape[2]]
}

fn conv_dims(plan: &LayerPlan) -> ConvDims {
    let [c, h, w] = dims3(&plan.input_shape);
    let LayerSpec::Conv2d {
        out_channels,
        kernel_size,
        ..
    } = plan.spec
    else {
        unreachable!()
    };
    ConvDims {
        c,
        h,
        w,
        o: out_channels,
        k: kernel_size,
    }
}

/// `-z_y + log Σ exp z`, with the max subtracted before exponentiating.
pub(crate) fn cross_entropy<F: Real>(logits: &[F], y: Label) -> F {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let mut sum = F::zero();
    for &z in logits {
        sum += (z - max).exp();
    }
    -(logits[y.index()] - max) + sum.ln()
}

/// `softmax(z) - onehot(y)`.
pub(crate) fn cross_entropy_grad<F: Real>(logits: &[F], y: Label) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let mut out: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let mut sum = F::zero();
    for &e in &out {
        sum += e;
    }
    for v in &mut out {
        *v /= sum;
    }
    out[y.index()] -= F::one();
    out
}
