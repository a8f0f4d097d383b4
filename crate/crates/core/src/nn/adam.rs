use crate::error::{Error, Result};

/// Adam hyper-parameters; defaults are the usual `(0.9, 0.999, 1e-8)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for a list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(sizes: impl IntoIterator<Item = usize>, config: AdamConfig) -> Self {
        let (m, v) = sizes
            .into_iter()
            .map(|n| (vec![0.0; n], vec![0.0; n]))
            .unzip();
        Self {
            config,
            step: 0,
            m,
            v,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(
            format!("{} tensors", state.m.len()),
            format!("{} params / {} grads", params.len(), grads.len()),
        ));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::shape(
                format!("tensor {i} of length {}", state.m[i].len()),
                format!("params {} / grads {}", p.len(), g.len()),
            ));
        }
    }
    state.step += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for j in 0..p.len() {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new([2], AdamConfig::default());
        adam_step(&mut [&mut p], &[&[0.0, 0.0]], &mut st, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_by_hand() {
        // m = 0.1 g, v = 0.001 g^2; m_hat = g, v_hat = g^2
        // update = -lr * g / (|g| + eps)
        let g = 0.5;
        let lr = 0.01;
        let mut p = vec![1.0];
        let mut st = AdamState::new([1], AdamConfig::default());
        adam_step(&mut [&mut p], &[&[g]], &mut st, lr).unwrap();
        let expected = 1.0 - lr * g / (g + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15, "{} vs {}", p[0], expected);
    }

    #[test]
    fn tensors_update_independently() {
        let mut a = vec![0.0];
        let mut b = vec![0.0];
        let mut st = AdamState::new([1, 1], AdamConfig::default());
        adam_step(&mut [&mut a, &mut b], &[&[1.0], &[0.0]], &mut st, 0.1).unwrap();
        assert!(a[0] < 0.0);
        assert_eq!(b[0], 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut a = vec![0.0, 1.0];
        let mut st = AdamState::new([2], AdamConfig::default());
        assert!(adam_step(&mut [&mut a], &[&[1.0]], &mut st, 0.1).is_err());
        assert!(adam_step(&mut [], &[], &mut st, 0.1).is_err());
    }
}
