use crate::error::{Error, Result};

pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Moment accumulators for Adam, one buffer per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
    pub lr: f64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(block_lens: &[usize], lr: f64, config: AdamConfig) -> Result<Self> {
        if !(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 && config.beta2 < 1.0) {
            return Err(Error::Parameter(format!(
                "Adam betas must lie in (0, 1), got ({}, {})",
                config.beta1, config.beta2
            )));
        }
        if config.epsilon.is_nan() || config.epsilon <= 0.0 || lr.is_nan() || lr < 0.0 {
            return Err(Error::Parameter(format!(
                "Adam needs epsilon > 0 and lr >= 0, got epsilon={}, lr={lr}",
                config.epsilon
            )));
        }
        Ok(Self {
            m: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            lr,
            config,
        })
    }
}

fn check_blocks(params: &[&mut [f64]], grads: &[&[f64]], expect: &[Vec<f64>]) -> Result<()> {
    let bad = params.len() != grads.len()
        || params.len() != expect.len()
        || params
            .iter()
            .zip(grads)
            .zip(expect)
            .any(|((p, g), e)| p.len() != g.len() || p.len() != e.len());
    if bad {
        return Err(Error::Parameter(
            "parameter, gradient and optimizer-state blocks disagree in shape".into(),
        ));
    }
    Ok(())
}

/// One bias-corrected Adam update:
/// `m ← β₁m + (1-β₁)g`, `v ← β₂v + (1-β₂)g²`, `θ ← θ - lr·m̂/(√v̂ + ε)`.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    check_blocks(params, grads, &state.m)?;
    state.step += 1;
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let lr = state.lr;
    for (b, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[b];
        let v = &mut state.v[b];
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

/// Plain gradient descent: `θ ← θ - lr·g`.
pub fn sgd_step(params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(Error::Parameter(
            "parameter and gradient blocks disagree in shape".into(),
        ));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        for (pv, gv) in p.iter_mut().zip(g.iter()) {
            *pv -= lr * gv;
        }
    }
    Ok(())
}
