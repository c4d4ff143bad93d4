//! Layer primitives with explicit forward/backward pairs. Layers cache
//! nothing themselves; callers keep the forward activations they need and
//! pass them back to the backward functions.

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::Tensor;

/// Fully connected layer, weight shape `[out, in]`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub name: String,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    /// Glorot init, for output heads and other linear layers.
    pub fn new(name: &str, n_in: usize, n_out: usize, rng: &mut Rng) -> Self {
        Self {
            name: name.to_string(),
            weight: Tensor::glorot(&[n_out, n_in], n_in, n_out, rng),
            bias: Tensor::zeros(&[n_out]),
        }
    }

    /// He init, for layers followed by ReLU.
    pub fn new_relu(name: &str, n_in: usize, n_out: usize, rng: &mut Rng) -> Self {
        Self {
            name: name.to_string(),
            weight: Tensor::he_uniform(&[n_out, n_in], n_in, rng),
            bias: Tensor::zeros(&[n_out]),
        }
    }

    pub fn n_in(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn n_out(&self) -> usize {
        self.weight.shape[0]
    }
}

/// `y = W x + b` applied to each of the `rows` rows of `x`.
pub fn dense_forward(layer: &DenseLayer, x: &[f64], rows: usize) -> Vec<f64> {
    let (n_in, n_out) = (layer.n_in(), layer.n_out());
    debug_assert_eq!(x.len(), rows * n_in);
    let w = &layer.weight.data;
    let b = &layer.bias.data;
    let mut y = vec![0.0; rows * n_out];
    for r in 0..rows {
        let xin = &x[r * n_in..(r + 1) * n_in];
        let yout = &mut y[r * n_out..(r + 1) * n_out];
        for (o, yo) in yout.iter_mut().enumerate() {
            let wrow = &w[o * n_in..(o + 1) * n_in];
            let mut acc = b[o];
            for (wi, xi) in wrow.iter().zip(xin) {
                acc += wi * xi;
            }
            *yo = acc;
        }
    }
    y
}

/// Accumulates weight/bias gradients and returns the input gradient.
pub fn dense_backward(layer: &mut DenseLayer, x: &[f64], dy: &[f64], rows: usize) -> Vec<f64> {
    let (n_in, n_out) = (layer.n_in(), layer.n_out());
    debug_assert_eq!(x.len(), rows * n_in);
    debug_assert_eq!(dy.len(), rows * n_out);
    let mut dx = vec![0.0; rows * n_in];
    {
        let w = &layer.weight.data;
        for r in 0..rows {
            let dyr = &dy[r * n_out..(r + 1) * n_out];
            let dxr = &mut dx[r * n_in..(r + 1) * n_in];
            for (o, g) in dyr.iter().enumerate() {
                let wrow = &w[o * n_in..(o + 1) * n_in];
                for (dxi, wi) in dxr.iter_mut().zip(wrow) {
                    *dxi += g * wi;
                }
            }
        }
    }
    {
        let dw = layer.weight.grad_mut();
        for r in 0..rows {
            let xin = &x[r * n_in..(r + 1) * n_in];
            let dyr = &dy[r * n_out..(r + 1) * n_out];
            for (o, g) in dyr.iter().enumerate() {
                let dwrow = &mut dw[o * n_in..(o + 1) * n_in];
                for (dwi, xi) in dwrow.iter_mut().zip(xin) {
                    *dwi += g * xi;
                }
            }
        }
        let db = layer.bias.grad_mut();
        for r in 0..rows {
            let dyr = &dy[r * n_out..(r + 1) * n_out];
            for (o, g) in dyr.iter().enumerate() {
                db[o] += g;
            }
        }
    }
    dx
}

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn relu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter().zip(dy).map(|(&v, &g)| if v > 0.0 { g } else { 0.0 }).collect()
}

/// 3x3-style convolution over a `[C_in, H, W]` grid. The W axis is the
/// longitude of a spherical signal and wraps circularly; the H axis
/// (colatitude) uses zero padding. Cross-correlation semantics, padding
/// `(kh/2, kw/2)`.
#[derive(Debug, Clone)]
pub struct Conv2dLayer {
    pub name: String,
    /// `[C_out, C_in, kh, kw]`
    pub kernel: Tensor,
    pub bias: Tensor,
    pub stride: usize,
}

impl Conv2dLayer {
    /// He init; every conv in the trunk feeds a ReLU.
    pub fn new(name: &str, c_in: usize, c_out: usize, k: usize, stride: usize, rng: &mut Rng) -> Self {
        let fan_in = c_in * k * k;
        Self {
            name: name.to_string(),
            kernel: Tensor::he_uniform(&[c_out, c_in, k, k], fan_in, rng),
            bias: Tensor::zeros(&[c_out]),
            stride,
        }
    }

    pub fn c_in(&self) -> usize {
        self.kernel.shape[1]
    }

    pub fn c_out(&self) -> usize {
        self.kernel.shape[0]
    }

    pub fn ksize(&self) -> usize {
        self.kernel.shape[2]
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let k = self.ksize();
        let (ph, pw) = (k / 2, k / 2);
        ((h + 2 * ph - k) / self.stride + 1, (w + 2 * pw - k) / self.stride + 1)
    }
}

pub fn conv2d_forward(layer: &Conv2dLayer, input: &Tensor) -> Result<Tensor> {
    if input.shape.len() != 3 || input.shape[0] != layer.c_in() {
        return Err(Error::ShapeMismatch(format!(
            "conv {} expects [{}, H, W], got {:?}",
            layer.name,
            layer.c_in(),
            input.shape
        )));
    }
    let (c_in, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    let (c_out, k, s) = (layer.c_out(), layer.ksize(), layer.stride);
    let (ph, pw) = (k / 2, k / 2);
    let (oh, ow) = layer.out_hw(h, w);
    let mut out = Tensor::zeros(&[c_out, oh, ow]);
    let kern = &layer.kernel.data;
    for co in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = layer.bias.data[co];
                for ci in 0..c_in {
                    let kbase = ((co * c_in) + ci) * k * k;
                    for ky in 0..k {
                        let iy = (oy * s + ky) as isize - ph as isize;
                        if iy < 0 || iy >= h as isize {
                            continue; // zero pad in colatitude
                        }
                        let irow = ci * h * w + iy as usize * w;
                        for kx in 0..k {
                            let ix = (ox * s + kx) as isize - pw as isize;
                            let ix = ix.rem_euclid(w as isize) as usize; // wrap longitude
                            acc += kern[kbase + ky * k + kx] * input.data[irow + ix];
                        }
                    }
                }
                out.data[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
    Ok(out)
}

/// Accumulates kernel/bias gradients and returns the input gradient.
pub fn conv2d_backward(layer: &mut Conv2dLayer, input: &Tensor, dout: &Tensor) -> Result<Tensor> {
    let (c_in, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    let (c_out, k, s) = (layer.c_out(), layer.ksize(), layer.stride);
    let (ph, pw) = (k / 2, k / 2);
    let (oh, ow) = layer.out_hw(h, w);
    if dout.shape != vec![c_out, oh, ow] {
        return Err(Error::ShapeMismatch(format!(
            "conv {} backward expects {:?}, got {:?}",
            layer.name,
            [c_out, oh, ow],
            dout.shape
        )));
    }
    let mut dinput = Tensor::zeros(&[c_in, h, w]);
    let kern = layer.kernel.data.clone();
    let dkern = layer.kernel.grad_mut();
    for co in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let g = dout.data[(co * oh + oy) * ow + ox];
                if g == 0.0 {
                    continue;
                }
                for ci in 0..c_in {
                    let kbase = ((co * c_in) + ci) * k * k;
                    for ky in 0..k {
                        let iy = (oy * s + ky) as isize - ph as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let irow = ci * h * w + iy as usize * w;
                        for kx in 0..k {
                            let ix = (ox * s + kx) as isize - pw as isize;
                            let ix = ix.rem_euclid(w as isize) as usize;
                            dkern[kbase + ky * k + kx] += g * input.data[irow + ix];
                            dinput.data[irow + ix] += g * kern[kbase + ky * k + kx];
                        }
                    }
                }
            }
        }
    }
    let dbias = layer.bias.grad_mut();
    for co in 0..c_out {
        let mut acc = 0.0;
        for oy in 0..oh {
            for ox in 0..ow {
                acc += dout.data[(co * oh + oy) * ow + ox];
            }
        }
        dbias[co] += acc;
    }
    Ok(dinput)
}

/// Max over the `rows` rows of an `[rows, features]` matrix. Returns the
/// pooled vector and the winning row per feature (first maximum wins, which
/// keeps backward deterministic under ties).
pub fn max_pool_forward(x: &[f64], rows: usize, features: usize) -> (Vec<f64>, Vec<usize>) {
    debug_assert_eq!(x.len(), rows * features);
    let mut out = vec![f64::NEG_INFINITY; features];
    let mut arg = vec![0usize; features];
    for r in 0..rows {
        let row = &x[r * features..(r + 1) * features];
        for (f, &v) in row.iter().enumerate() {
            if v > out[f] {
                out[f] = v;
                arg[f] = r;
            }
        }
    }
    (out, arg)
}

pub fn max_pool_backward(dy: &[f64], arg: &[usize], rows: usize, features: usize) -> Vec<f64> {
    let mut dx = vec![0.0; rows * features];
    for (f, (&g, &r)) in dy.iter().zip(arg).enumerate() {
        dx[r * features + f] += g;
    }
    dx
}

/// Softmax cross-entropy against an integer label. Returns
/// `(loss, dlogits)`; the gradient is `softmax - onehot`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange { label, classes: logits.len() });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let log_sum = sum.ln() + max;
    let loss = log_sum - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|&e| e / sum).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Normalizes a raw 4-vector onto the unit sphere: `q = raw / |raw|`.
/// Errors when the head output is degenerate (norm under 1e-8).
pub fn quat_normalize_forward(raw: &[f64; 4]) -> Result<[f64; 4]> {
    let n = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]).sqrt();
    if n < 1e-8 {
        return Err(Error::DegenerateHeadOutput(n));
    }
    Ok([raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n])
}

/// Exact backward of the normalization: `draw = (dq - q (q . dq)) / |raw|`.
pub fn quat_normalize_backward(raw: &[f64; 4], dq: &[f64; 4]) -> [f64; 4] {
    let n = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]).sqrt();
    let q = [raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n];
    let qdot = q[0] * dq[0] + q[1] * dq[1] + q[2] * dq[2] + q[3] * dq[3];
    [
        (dq[0] - q[0] * qdot) / n,
        (dq[1] - q[1] * qdot) / n,
        (dq[2] - q[2] * qdot) / n,
        (dq[3] - q[3] * qdot) / n,
    ]
}
