use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Moment accumulators of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Adam with bias correction over a fixed list of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    states: Vec<AdamState>,
}

impl Adam {
    /// One accumulator pair per tensor, sized by `sizes`.
    pub fn new(lr: f64, sizes: &[usize]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            states: sizes
                .iter()
                .map(|&n| AdamState {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                })
                .collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn states(&self) -> &[AdamState] {
        &self.states
    }

    /// Applies one update to every tensor. Panics if the tensor list does
    /// not mirror the sizes given at construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.states.len(), "parameter list changed");
        assert_eq!(grads.len(), self.states.len(), "gradient list changed");
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - math::powf(self.beta1, t);
        let c2 = 1.0 - math::powf(self.beta2, t);
        for ((p, g), st) in params.iter_mut().zip(grads).zip(&mut self.states) {
            assert_eq!(p.len(), st.m.len(), "parameter shape changed");
            assert_eq!(g.len(), st.m.len(), "gradient shape mismatch");
            for i in 0..p.len() {
                st.m[i] = self.beta1 * st.m[i] + (1.0 - self.beta1) * g[i];
                st.v[i] = self.beta2 * st.v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = st.m[i] / c1;
                let v_hat = st.v[i] / c2;
                p[i] -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
            }
        }
    }
}
