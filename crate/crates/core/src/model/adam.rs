//! Adaptive-moment optimizer.

use super::nets::NetKind;

pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One update over the accumulated gradients, in parameter-walk order.
    pub fn step(&mut self, net: &mut NetKind) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.learning_rate);
        let (m, v) = (&mut self.m, &mut self.v);
        let mut idx = 0usize;
        net.for_each_param_grad(&mut |p, g| {
            m[idx] = b1 * m[idx] + (1.0 - b1) * g;
            v[idx] = b2 * v[idx] + (1.0 - b2) * g * g;
            let m_hat = m[idx] / bc1;
            let v_hat = v[idx] / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
            idx += 1;
        });
        debug_assert_eq!(idx, m.len(), "parameter walk drifted");
    }
}
