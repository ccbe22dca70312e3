use crate::error::{Error, Result};

/// Adam with bias correction. Moment buffers are laid out per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Standard defaults (0.9, 0.999, 1e-8); `shapes` are the tensor lengths.
    pub fn new(lr: f64, shapes: &[usize]) -> Self {
        AdamState::with_betas(lr, 0.9, 0.999, 1e-8, shapes)
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, eps: f64, shapes: &[usize]) -> Self {
        AdamState {
            lr,
            beta1,
            beta2,
            eps,
            step_count: 0,
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first_moment[i].len() || g.len() != p.len() {
                return Err(Error::Shape(format!(
                    "tensor {i}: state {}, param {}, grad {}",
                    self.first_moment[i].len(),
                    p.len(),
                    g.len()
                )));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (1.0 - b1) * gj;
                v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::new(1e-3, &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        state.step(&mut [p.as_mut_slice()], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = v_hat = 1 on the first step, so the update is lr / (1 + eps)
        let mut state = AdamState::new(1e-3, &[1]);
        let mut p = vec![0.0];
        state.step(&mut [p.as_mut_slice()], &[&[1.0]]).unwrap();
        let expect = -1e-3 / (1.0 + 1e-8);
        assert!((p[0] - expect).abs() < 1e-15, "{}", p[0]);
    }

    #[test]
    fn constant_gradient_descends_monotonically() {
        let mut state = AdamState::new(1e-3, &[1]);
        let mut p = vec![0.0];
        let mut prev = p[0];
        for _ in 0..10 {
            state.step(&mut [p.as_mut_slice()], &[&[1.0]]).unwrap();
            assert!(p[0] < prev);
            prev = p[0];
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut state = AdamState::new(1e-3, &[2]);
        let mut p = vec![0.0; 3];
        assert!(state.step(&mut [p.as_mut_slice()], &[&[0.0; 3]]).is_err());
    }
}
