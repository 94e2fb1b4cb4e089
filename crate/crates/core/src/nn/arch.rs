use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::seed::fnv1a64;
use crate::{Error, Result};

/// One layer of a feedforward network.
///
/// Convolutions are valid (no padding) with stride 1; pooling windows are
/// square with stride equal to the window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    },
    MaxPool2d {
        window: usize,
    },
    Linear {
        in_dim: usize,
        out_dim: usize,
    },
    Relu,
    Flatten,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "Conv2D",
            LayerSpec::MaxPool2d { .. } => "MaxPool2D",
            LayerSpec::Linear { .. } => "Linear",
            LayerSpec::Relu => "ReLU",
            LayerSpec::Flatten => "Flatten",
        }
    }

    /// (weight count, bias count)
    pub fn param_counts(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
            } => (
                out_channels * in_channels * kernel_size * kernel_size,
                out_channels,
            ),
            LayerSpec::Linear { in_dim, out_dim } => (in_dim * out_dim, out_dim),
            _ => (0, 0),
        }
    }

    /// Fan-in of one output unit, for parameterized layers.
    pub fn fan_in(&self) -> Option<usize> {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                kernel_size,
                ..
            } => Some(in_channels * kernel_size * kernel_size),
            LayerSpec::Linear { in_dim, .. } => Some(in_dim),
            _ => None,
        }
    }

    fn output_shape(&self, layer: usize, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |expected: Vec<usize>| Error::ShapeMismatch {
            layer,
            kind: self.name(),
            expected,
            actual: input.to_vec(),
        };
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                if kernel_size == 0 || out_channels == 0 {
                    return Err(Error::InvalidArchitecture(format!(
                        "layer {layer}: empty convolution"
                    )));
                }
                match *input {
                    [c, h, w] if c == in_channels && h >= kernel_size && w >= kernel_size => {
                        Ok(vec![out_channels, h - kernel_size + 1, w - kernel_size + 1])
                    }
                    _ => Err(mismatch(vec![in_channels, kernel_size, kernel_size])),
                }
            }
            LayerSpec::MaxPool2d { window } => match *input {
                [c, h, w] if window > 0 && h >= window && w >= window => {
                    Ok(vec![c, h / window, w / window])
                }
                _ => Err(mismatch(vec![0, window, window])),
            },
            LayerSpec::Linear { in_dim, out_dim } => {
                if out_dim == 0 {
                    return Err(Error::InvalidArchitecture(format!(
                        "layer {layer}: Linear with zero outputs"
                    )));
                }
                match *input {
                    [d] if d == in_dim => Ok(vec![out_dim]),
                    _ => Err(mismatch(vec![in_dim])),
                }
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// A layer together with its resolved shapes and parameter offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerPlan {
    pub spec: LayerSpec,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    /// Flat index of the first weight; biases follow the weights.
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerPlan {
    pub fn weight_range(&self) -> core::ops::Range<usize> {
        self.weight_offset..self.bias_offset
    }

    pub fn bias_range(&self) -> core::ops::Range<usize> {
        self.bias_offset..self.bias_offset + self.spec.param_counts().1
    }

    pub fn has_params(&self) -> bool {
        self.spec.fan_in().is_some()
    }
}

/// Network description: layer sequence, the f0/f1 split and the parameter
/// layout.
///
/// The flat layout walks the layers in order; each parameterized layer
/// contributes its weights (row-major `[out][in]` for Linear,
/// `[out][in][k][k]` for Conv2D) followed by its biases. The layout is a pure
/// function of the layer list, so it is identical across processes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    input_shape: Vec<usize>,
    layers: Vec<LayerPlan>,
    split_index: usize,
    num_classes: usize,
    param_count: usize,
    fingerprint: u64,
}

impl Architecture {
    pub fn new(
        input_shape: Vec<usize>,
        specs: Vec<LayerSpec>,
        split_index: usize,
        num_classes: usize,
    ) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::InvalidArchitecture(format!(
                "bad input shape {input_shape:?}"
            )));
        }
        if split_index > specs.len() {
            return Err(Error::InvalidArchitecture(format!(
                "split index {split_index} beyond {} layers",
                specs.len()
            )));
        }
        match specs.last() {
            Some(LayerSpec::Linear { out_dim, .. }) if *out_dim == num_classes && num_classes >= 2 => {}
            _ => {
                return Err(Error::InvalidArchitecture(format!(
                    "final layer must be Linear with {num_classes} outputs (and at least 2 classes)"
                )))
            }
        }

        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape.clone();
        let mut offset = 0;
        for (i, spec) in specs.into_iter().enumerate() {
            let out = spec.output_shape(i, &shape)?;
            let (nw, nb) = spec.param_counts();
            layers.push(LayerPlan {
                input_shape: shape,
                output_shape: out.clone(),
                weight_offset: offset,
                bias_offset: offset + nw,
                spec,
            });
            offset += nw + nb;
            shape = out;
        }

        let mut arch = Architecture {
            input_shape,
            layers,
            split_index,
            num_classes,
            param_count: offset,
            fingerprint: 0,
        };
        arch.fingerprint = arch.compute_fingerprint();
        Ok(arch)
    }

    /// Two conv/ReLU/pool blocks, flatten, then Linear(120) → ReLU →
    /// Linear(84) → ReLU → Linear(L). The split sits right after Flatten.
    ///
    /// Input 1×28×28 flattens to 256 features; 3×32×32 flattens to 400.
    pub fn lenet(channels: usize, height: usize, width: usize, num_classes: usize) -> Result<Self> {
        let h = ((height.saturating_sub(4)) / 2).saturating_sub(4) / 2;
        let w = ((width.saturating_sub(4)) / 2).saturating_sub(4) / 2;
        let flat = 16 * h * w;
        Architecture::new(
            vec![channels, height, width],
            vec![
                LayerSpec::Conv2d {
                    in_channels: channels,
                    out_channels: 6,
                    kernel_size: 5,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2d { window: 2 },
                LayerSpec::Conv2d {
                    in_channels: 6,
                    out_channels: 16,
                    kernel_size: 5,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2d { window: 2 },
                LayerSpec::Flatten,
                LayerSpec::Linear {
                    in_dim: flat,
                    out_dim: 120,
                },
                LayerSpec::Relu,
                LayerSpec::Linear {
                    in_dim: 120,
                    out_dim: 84,
                },
                LayerSpec::Relu,
                LayerSpec::Linear {
                    in_dim: 84,
                    out_dim: num_classes,
                },
            ],
            7,
            num_classes,
        )
    }

    fn compute_fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        let mut push = |v: usize| bytes.extend_from_slice(&(v as u64).to_le_bytes());
        push(self.input_shape.len());
        self.input_shape.iter().for_each(|&d| push(d));
        push(self.split_index);
        push(self.num_classes);
        for l in &self.layers {
            match l.spec {
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size,
                } => {
                    push(1);
                    push(in_channels);
                    push(out_channels);
                    push(kernel_size);
                }
                LayerSpec::MaxPool2d { window } => {
                    push(2);
                    push(window);
                }
                LayerSpec::Linear { in_dim, out_dim } => {
                    push(3);
                    push(in_dim);
                    push(out_dim);
                }
                LayerSpec::Relu => push(4),
                LayerSpec::Flatten => push(5),
            }
        }
        fnv1a64(&bytes)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerPlan] {
        &self.layers
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Layout identifier shared by all parameter vectors of this architecture.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Width of the flattened activation at the f0/f1 boundary.
    pub fn f0_width(&self) -> usize {
        self.f0_shape().iter().product()
    }

    fn f0_shape(&self) -> &[usize] {
        if self.split_index == 0 {
            &self.input_shape
        } else {
            &self.layers[self.split_index - 1].output_shape
        }
    }

    /// Index of the final (logit) layer.
    pub fn output_layer(&self) -> usize {
        self.layers.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lenet_flatten_widths() {
        let mnist = Architecture::lenet(1, 28, 28, 10).unwrap();
        assert_eq!(mnist.f0_width(), 256);
        let cifar = Architecture::lenet(3, 32, 32, 100).unwrap();
        assert_eq!(cifar.f0_width(), 400);
        assert_eq!(cifar.layers()[7].spec, LayerSpec::Linear { in_dim: 400, out_dim: 120 });
    }

    #[test]
    fn lenet_param_count() {
        let a = Architecture::lenet(1, 28, 28, 10).unwrap();
        let expected = (6 * 25 + 6) + (16 * 6 * 25 + 16) + (256 * 120 + 120) + (120 * 84 + 84) + (84 * 10 + 10);
        assert_eq!(a.param_count(), expected);
    }

    #[test]
    fn mismatched_dims_name_the_layer() {
        let err = Architecture::new(
            vec![4],
            vec![
                LayerSpec::Linear { in_dim: 4, out_dim: 3 },
                LayerSpec::Relu,
                LayerSpec::Linear { in_dim: 5, out_dim: 2 },
            ],
            0,
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { layer: 2, kind: "Linear", .. }));
    }

    #[test]
    fn final_layer_must_match_classes() {
        let err = Architecture::new(vec![4], vec![LayerSpec::Linear { in_dim: 4, out_dim: 3 }], 0, 2);
        assert!(matches!(err, Err(Error::InvalidArchitecture(_))));
    }

    #[test]
    fn fingerprint_tracks_layout() {
        let a = Architecture::lenet(1, 28, 28, 10).unwrap();
        let b = Architecture::lenet(1, 28, 28, 10).unwrap();
        let c = Architecture::lenet(1, 28, 28, 100).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
