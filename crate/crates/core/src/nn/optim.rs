use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ParameterVector, Real};
use crate::Result;

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Sgd { lr: f64 },
    Adam(Adam),
}

impl OptimizerConfig {
    pub const DEFAULT_SGD_LR: f64 = 1e-2;

    pub fn sgd() -> Self {
        OptimizerConfig::Sgd {
            lr: Self::DEFAULT_SGD_LR,
        }
    }

    pub fn adam() -> Self {
        OptimizerConfig::Adam(Adam::default())
    }

    pub fn lr(&self) -> f64 {
        match self {
            OptimizerConfig::Sgd { lr } => *lr,
            OptimizerConfig::Adam(a) => a.lr,
        }
    }

    pub fn with_lr(self, lr: f64) -> Self {
        match self {
            OptimizerConfig::Sgd { .. } => OptimizerConfig::Sgd { lr },
            OptimizerConfig::Adam(a) => OptimizerConfig::Adam(Adam { lr, ..a }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Sgd { .. } => "sgd",
            OptimizerConfig::Adam(_) => "adam",
        }
    }

    /// Fresh optimizer state for a parameter vector.
    pub fn start<F: Real>(&self, params: &ParameterVector<F>) -> OptimizerState<F> {
        match *self {
            OptimizerConfig::Sgd { lr } => OptimizerState::Sgd { lr: F::lit(lr) },
            OptimizerConfig::Adam(hyper) => OptimizerState::Adam {
                hyper,
                state: AdamState::new(params),
            },
        }
    }
}

/// `params - lr * grad`.
pub fn sgd_step<F: Real>(
    params: &ParameterVector<F>,
    grad: &ParameterVector<F>,
    lr: F,
) -> Result<ParameterVector<F>> {
    params.check_layout(grad)?;
    let mut out = params.clone();
    sgd_apply(out.values_mut(), grad.values(), lr);
    Ok(out)
}

fn sgd_apply<F: Real>(params: &mut [F], grad: &[F], lr: F) {
    for (p, &g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
}

/// First and second moment buffers plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    m: Vec<F>,
    v: Vec<F>,
    step: u32,
    layout: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(params: &ParameterVector<F>) -> Self {
        AdamState {
            m: vec![F::zero(); params.len()],
            v: vec![F::zero(); params.len()],
            step: 0,
            layout: params.layout(),
        }
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    fn check(&self, params: &ParameterVector<F>) -> Result<()> {
        if self.layout != params.layout() || self.m.len() != params.len() {
            return Err(crate::Error::LayoutMismatch {
                expected: self.m.len(),
                actual: params.len(),
                expected_layout: self.layout,
                actual_layout: params.layout(),
            });
        }
        Ok(())
    }

    fn apply(&mut self, params: &mut [F], grad: &[F], hyper: &Adam) {
        self.step += 1;
        let (b1, b2) = (F::lit(hyper.beta1), F::lit(hyper.beta2));
        let (lr, eps) = (F::lit(hyper.lr), F::lit(hyper.eps));
        let one = F::one();
        let bc1 = one - b1.powi(self.step as i32);
        let bc2 = one - b2.powi(self.step as i32);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// One bias-corrected Adam update. A component whose gradient and moments
/// are all zero is left bit-identical.
pub fn adam_step<F: Real>(
    state: &AdamState<F>,
    params: &ParameterVector<F>,
    grad: &ParameterVector<F>,
    hyper: &Adam,
) -> Result<(ParameterVector<F>, AdamState<F>)> {
    params.check_layout(grad)?;
    state.check(params)?;
    let mut next = state.clone();
    let mut out = params.clone();
    next.apply(out.values_mut(), grad.values(), hyper);
    Ok((out, next))
}

/// Optimizer with its running state, updating parameters in place.
#[derive(Clone, Debug)]
pub enum OptimizerState<F> {
    Sgd { lr: F },
    Adam { hyper: Adam, state: AdamState<F> },
}

impl<F: Real> OptimizerState<F> {
    pub fn step(&mut self, params: &mut ParameterVector<F>, grad: &ParameterVector<F>) -> Result<()> {
        params.check_layout(grad)?;
        match self {
            OptimizerState::Sgd { lr } => sgd_apply(params.values_mut(), grad.values(), *lr),
            OptimizerState::Adam { hyper, state } => {
                state.check(params)?;
                state.apply(params.values_mut(), grad.values(), hyper);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, LayerSpec};

    fn arch(n: usize) -> Architecture {
        Architecture::new(vec![n], vec![LayerSpec::Linear { in_dim: n, out_dim: 2 }], 0, 2).unwrap()
    }

    fn pv(values: Vec<f64>) -> ParameterVector<f64> {
        // Linear(n -> 2) holds 2n + 2 values.
        let a = arch((values.len() - 2) / 2);
        ParameterVector::from_values(&a, values).unwrap()
    }

    /// Independent scalar Adam trace.
    fn scalar_adam(p0: f64, grads: &[f64], h: &Adam) -> f64 {
        let (mut p, mut m, mut v) = (p0, 0.0, 0.0);
        for (t, &g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            m = h.beta1 * m + (1.0 - h.beta1) * g;
            v = h.beta2 * v + (1.0 - h.beta2) * g * g;
            let mh = m / (1.0 - h.beta1.powi(t));
            let vh = v / (1.0 - h.beta2.powi(t));
            p -= h.lr * mh / (vh.sqrt() + h.eps);
        }
        p
    }

    #[test]
    fn sgd_zero_grad_is_identity() {
        let p = pv(vec![1.5, -2.0, 0.25, 7.0, 0.0, -0.0]);
        let g = pv(vec![0.0; 6]);
        let out = sgd_step(&p, &g, 0.1).unwrap();
        let bits = |v: &ParameterVector<f64>| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&out), bits(&p));
    }

    #[test]
    fn sgd_arithmetic() {
        let p = pv(vec![1.0; 6]);
        let g = pv(vec![0.5; 6]);
        let once = sgd_step(&p, &g, 0.1).unwrap();
        assert!(once.values().iter().all(|&v| (v - 0.95).abs() < 1e-15));
        let twice = sgd_step(&once, &g, 0.1).unwrap();
        assert!(twice.values().iter().all(|&v| (v - (1.0 - 2.0 * 0.1 * 0.5)).abs() < 1e-15));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let a = ParameterVector::<f64>::zeros(&arch(2));
        let b = ParameterVector::<f64>::zeros(&arch(3));
        assert!(matches!(sgd_step(&a, &b, 0.1), Err(crate::Error::LayoutMismatch { .. })));
        let st = AdamState::new(&b);
        assert!(adam_step(&st, &a, &a, &Adam::default()).is_err());
    }

    #[test]
    fn adam_zero_grad_fresh_state_is_fixed_point() {
        let p = pv(vec![0.3, -1.0, 2.0, 0.0, 5.0, -7.5]);
        let g = pv(vec![0.0; 6]);
        let (out, st) = adam_step(&AdamState::new(&p), &p, &g, &Adam::default()).unwrap();
        assert_eq!(out, p);
        let (out2, _) = adam_step(&st, &out, &g, &Adam::default()).unwrap();
        assert_eq!(out2, p);
    }

    #[test]
    fn adam_first_step_is_about_lr() {
        let h = Adam::default();
        for g in [1e-4, -0.3, 2.0, 1e3] {
            let p = pv(vec![1.0; 6]);
            let gv = pv(vec![g; 6]);
            let (out, _) = adam_step(&AdamState::new(&p), &p, &gv, &h).unwrap();
            let step = (1.0 - out.values()[0]).abs();
            let expected = h.lr * g.abs() / (g.abs() + h.eps);
            assert!((step - expected).abs() < 1e-15, "g = {g}");
        }
    }

    #[test]
    fn adam_two_steps_match_scalar_trace() {
        let h = Adam { lr: 0.01, ..Adam::default() };
        let p = pv(vec![0.5, -0.25, 1.0, 2.0, -3.0, 0.0]);
        let g = pv(vec![0.2, -0.7, 1e-3, 4.0, 0.0, -1.5]);
        let (p1, s1) = adam_step(&AdamState::new(&p), &p, &g, &h).unwrap();
        let (p2, s2) = adam_step(&s1, &p1, &g, &h).unwrap();
        assert_eq!(s2.step_count(), 2);
        for i in 0..6 {
            let gi = g.values()[i];
            let expected = scalar_adam(p.values()[i], &[gi, gi], &h);
            assert!((p2.values()[i] - expected).abs() < 1e-15);
        }
    }
}
