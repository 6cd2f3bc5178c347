//! Adam optimizer with bias-corrected first and second moments.

use serde::{Deserialize, Serialize};

use crate::error::{shape as shape_err, Error, Result};
use crate::nn::tensor::Tensor;

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Optimizer state: one moment pair per parameter tensor, in the order the
/// tensors were registered.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> AdamState {
        AdamState {
            config,
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update over all registered tensors. A zero gradient leaves its
    /// parameter unchanged; any non-finite gradient aborts with an error
    /// naming the offending tensor.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(shape_err(format!(
                "optimizer registered {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (idx, grad) in grads.iter().enumerate() {
            if grad.data().iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite {
                    context: "adam step".to_string(),
                    detail: format!("gradient tensor {idx} (shape {:?})", grad.shape()),
                });
            }
        }

        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);

        for ((param, grad), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if param.len() != grad.len() || param.len() != m.len() {
                return Err(shape_err(format!(
                    "parameter/gradient/state size mismatch: {} vs {} vs {}",
                    param.len(),
                    grad.len(),
                    m.len()
                )));
            }
            for (k, x) in param.data_mut().iter_mut().enumerate() {
                let g = grad.data()[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
