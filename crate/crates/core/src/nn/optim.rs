//! Optimizers: SGD with classical momentum, and Adam. Pose regression over
//! the spherical signal stalls under plain SGD (the unsquared-norm losses
//! have constant-magnitude gradients and the trunk/head scales differ by
//! orders of magnitude), so Adam is the default for training runs.

use super::Tensor;

#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Self { lr, momentum, velocity: Vec::new() }
    }

    /// One update over the parameter list (order must be stable between
    /// calls): `v = momentum v - lr * g * grad_scale; w += v`. Gradients are
    /// cleared afterwards. `grad_scale` divides accumulated batch gradients
    /// by the batch size.
    pub fn step(&mut self, params: &mut [(&str, &mut Tensor)], grad_scale: f64) {
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
        }
        debug_assert_eq!(self.velocity.len(), params.len());
        for ((_, tensor), vel) in params.iter_mut().zip(self.velocity.iter_mut()) {
            let Some(grad) = tensor.grad.as_ref() else {
                continue; // parameter never touched this step
            };
            for ((w, v), g) in tensor.data.iter_mut().zip(vel.iter_mut()).zip(grad) {
                *v = self.momentum * *v - self.lr * g * grad_scale;
                *w += *v;
            }
            tensor.zero_grad();
        }
    }
}

/// Adam (Kingma & Ba) with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step_count: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn step(&mut self, params: &mut [(&str, &mut Tensor)], grad_scale: f64) {
        if self.m.is_empty() {
            self.m = params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
            self.v = params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
        }
        debug_assert_eq!(self.m.len(), params.len());
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for (i, (_, tensor)) in params.iter_mut().enumerate() {
            let Some(grad) = tensor.grad.as_ref() else {
                continue;
            };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((w, mi), vi), g) in
                tensor.data.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(grad)
            {
                let g = g * grad_scale;
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            tensor.zero_grad();
        }
    }
}
