use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(shapes: &[usize]) -> Self {
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, cfg: &Adam) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "Adam got {} parameter tensors, {} gradients, {} moment buffers",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::Shape(format!(
                "tensor {i}: {} parameters, {} gradients, {} moments",
                p.len(),
                g.len(),
                state.m[i].len()
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        for j in 0..p.len() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = Adam::new(0.01);
        // holds while |g| >> eps
        for g in [3.0, -0.05, 150.0] {
            let mut p = vec![1.0];
            let mut st = AdamState::new(&[1]);
            adam_step(&mut [p.as_mut_slice()], &[&[g]], &mut st, &cfg).unwrap();
            let delta = p[0] - 1.0;
            assert!((delta + cfg.lr * f64::signum(g)).abs() < cfg.lr * 1e-6, "g={g} delta={delta}");
            assert_eq!(st.step, 1);
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let cfg = Adam::new(0.1);
        let mut p = vec![0.5, -2.0];
        let mut st = AdamState::new(&[2]);
        for _ in 0..50 {
            adam_step(&mut [p.as_mut_slice()], &[&[0.0, 0.0]], &mut st, &cfg).unwrap();
        }
        assert_eq!(p, vec![0.5, -2.0]);
    }

    #[test]
    fn second_step_recurrence() {
        // m = 0.19, v = 0.001999 after two unit gradients, so m_hat = v_hat = 1 and
        // the step is lr / (1 + eps), which sits 1e-9 below lr.
        let cfg = Adam::new(0.1);
        let mut p = vec![0.0];
        let mut st = AdamState::new(&[1]);
        adam_step(&mut [p.as_mut_slice()], &[&[1.0]], &mut st, &cfg).unwrap();
        let after_first = p[0];
        adam_step(&mut [p.as_mut_slice()], &[&[1.0]], &mut st, &cfg).unwrap();
        let step = after_first - p[0];
        assert!((step - 0.1 / (1.0 + 1e-8)).abs() < 1e-12, "{step}");
    }

    #[test]
    fn shape_mismatch() {
        let cfg = Adam::new(0.1);
        let mut p = vec![0.0, 1.0];
        let mut st = AdamState::new(&[2]);
        assert!(adam_step(&mut [p.as_mut_slice()], &[&[1.0]], &mut st, &cfg).is_err());
        assert_eq!(st.step, 0);
    }
}
