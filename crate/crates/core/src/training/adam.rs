//! Adam with bias-corrected moments.

use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let mut m = params.clone();
        for x in m.tensors_mut() {
            x.data_mut().fill(0.0);
        }
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

/// Updates one flat parameter slice in place. `t` is the 1-based step count.
pub fn adam_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    cfg: &AdamConfig,
) {
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, lr: f64, cfg: &AdamConfig) {
    state.t += 1;
    let t = state.t;
    let grads = grads.tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((theta, (_, g)), m), v) in params.tensors_mut().into_iter().zip(grads).zip(ms).zip(vs) {
        adam_update(theta.data_mut(), g.data(), m.data_mut(), v.data_mut(), t, lr, cfg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let cfg = AdamConfig::default();
        let mut theta = vec![0.3, -1.2];
        let (mut m, mut v) = (vec![0.0; 2], vec![0.0; 2]);
        for t in 1..=50 {
            adam_update(&mut theta, &[0.0, 0.0], &mut m, &mut v, t, 1e-2, &cfg);
        }
        assert_eq!(theta, vec![0.3, -1.2]);
    }

    #[test]
    fn first_step_magnitude() {
        let cfg = AdamConfig::default();
        for &g in &[1e-3, 0.37, -2.0, 50.0] {
            let mut theta = vec![0.0];
            let (mut m, mut v) = (vec![0.0], vec![0.0]);
            adam_update(&mut theta, &[g], &mut m, &mut v, 1, 1e-3, &cfg);
            let want = 1e-3 * g.abs() / (g.abs() + cfg.epsilon);
            assert!((theta[0].abs() - want).abs() <= 1e-12);
            assert!(((theta[0].abs() - 1e-3) / 1e-3).abs() < 1e-5);
            assert_eq!(theta[0].signum(), -g.signum());
        }
    }

    #[test]
    fn first_step_scale_invariant() {
        let cfg = AdamConfig::default();
        let g = [0.2, -0.05, 1.5];
        let step = |scale: f64| {
            let mut theta = vec![0.0; 3];
            let (mut m, mut v) = (vec![0.0; 3], vec![0.0; 3]);
            let gs: Vec<f64> = g.iter().map(|x| x * scale).collect();
            adam_update(&mut theta, &gs, &mut m, &mut v, 1, 1e-3, &cfg);
            theta
        };
        for (a, b) in step(1.0).iter().zip(step(10.0)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
