//! Adam optimizer over the model's flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{GnnGrads, GnnModel};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }
}

/// One Adam update with bias correction.
pub fn adam_step(
    model: &mut GnnModel,
    grads: &GnnGrads,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    let mut theta = model.flatten();
    let g = grads.flatten();
    if g.len() != theta.len() || state.m.len() != theta.len() {
        return Err(Error::Dimension(format!(
            "adam: {} params, {} grads, {} state entries",
            theta.len(),
            g.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let bc1 = 1.0 - beta1.powi(state.step as i32);
    let bc2 = 1.0 - beta2.powi(state.step as i32);
    for i in 0..theta.len() {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    model.assign_flat(&theta)
}
