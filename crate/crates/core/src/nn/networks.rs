//! The two trainable networks: a PointNet-style classifier over raw points
//! and a convolutional pose regressor over spherical signals.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::rng::Rng;

use super::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, max_pool_backward,
    max_pool_forward, quat_normalize_backward, quat_normalize_forward, relu_backward,
    relu_forward, Conv2dLayer, DenseLayer,
};
use super::{ClassifierConfig, PoseRegressorConfig, Tensor};

/// Shared per-point MLP -> max pool -> dense stack -> K logits.
/// Max pooling makes the logits invariant to point order.
#[derive(Debug, Clone)]
pub struct PointNetClassifier {
    pub config: ClassifierConfig,
    point_layers: Vec<DenseLayer>,
    dense_layers: Vec<DenseLayer>,
    head: DenseLayer,
}

/// Forward activations the classifier backward pass needs.
pub struct ClsCache {
    rows: usize,
    point_pre: Vec<Vec<f64>>,  // pre-activation per point layer
    point_post: Vec<Vec<f64>>, // post-ReLU per point layer (inputs to next)
    pool_arg: Vec<usize>,
    pooled: Vec<f64>,
    dense_pre: Vec<Vec<f64>>,
    dense_post: Vec<Vec<f64>>,
    input: Vec<f64>,
}

impl PointNetClassifier {
    pub fn new(config: ClassifierConfig, rng: &mut Rng) -> Self {
        let mut point_layers = Vec::new();
        let mut n_in = 3;
        for (i, &width) in config.point_mlp.iter().enumerate() {
            point_layers.push(DenseLayer::new_relu(&format!("cls.point{i}"), n_in, width, rng));
            n_in = width;
        }
        let mut dense_layers = Vec::new();
        for (i, &width) in config.dense.iter().enumerate() {
            dense_layers.push(DenseLayer::new_relu(&format!("cls.dense{i}"), n_in, width, rng));
            n_in = width;
        }
        let head = DenseLayer::new("cls.head", n_in, config.num_classes, rng);
        Self { config, point_layers, dense_layers, head }
    }

    pub fn params_mut(&mut self) -> Vec<(&str, &mut Tensor)> {
        let mut out: Vec<(&str, &mut Tensor)> = Vec::new();
        for l in self.point_layers.iter_mut().chain(self.dense_layers.iter_mut()) {
            out.push((l.name.as_str(), &mut l.weight));
            out.push((l.name.as_str(), &mut l.bias));
        }
        out.push((self.head.name.as_str(), &mut self.head.weight));
        out.push((self.head.name.as_str(), &mut self.head.bias));
        out
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for l in self.point_layers.iter().chain(self.dense_layers.iter()) {
            out.push((format!("{}.weight", l.name), &l.weight));
            out.push((format!("{}.bias", l.name), &l.bias));
        }
        out.push((format!("{}.weight", self.head.name), &self.head.weight));
        out.push((format!("{}.bias", self.head.name), &self.head.bias));
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        for l in self.point_layers.iter_mut().chain(self.dense_layers.iter_mut()) {
            out.push((format!("{}.weight", l.name), &mut l.weight));
            out.push((format!("{}.bias", l.name), &mut l.bias));
        }
        out.push((format!("{}.weight", self.head.name), &mut self.head.weight));
        out.push((format!("{}.bias", self.head.name), &mut self.head.bias));
        out
    }

    pub fn forward(&self, points: &[Vec3]) -> Result<(Vec<f64>, ClsCache)> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let rows = points.len();
        let mut x: Vec<f64> = Vec::with_capacity(rows * 3);
        for p in points {
            x.extend_from_slice(&[p.x, p.y, p.z]);
        }
        let input = x.clone();

        let mut point_pre = Vec::new();
        let mut point_post = Vec::new();
        for layer in &self.point_layers {
            let pre = dense_forward(layer, &x, rows);
            let post = relu_forward(&pre);
            point_pre.push(pre);
            x = post.clone();
            point_post.push(post);
        }

        let features = self.point_layers.last().map_or(3, |l| l.n_out());
        let (pooled, pool_arg) = max_pool_forward(&x, rows, features);

        let mut g = pooled.clone();
        let mut dense_pre = Vec::new();
        let mut dense_post = Vec::new();
        for layer in &self.dense_layers {
            let pre = dense_forward(layer, &g, 1);
            let post = relu_forward(&pre);
            dense_pre.push(pre);
            g = post.clone();
            dense_post.push(post);
        }
        let logits = dense_forward(&self.head, &g, 1);
        Ok((
            logits,
            ClsCache { rows, point_pre, point_post, pool_arg, pooled, dense_pre, dense_post, input },
        ))
    }

    /// Backpropagates `dlogits`, accumulating parameter gradients, and
    /// returns the gradient with respect to the input points.
    pub fn backward(&mut self, cache: &ClsCache, dlogits: &[f64]) -> Vec<Vec3> {
        let head_in = cache.dense_post.last().unwrap_or(&cache.pooled).clone();
        let mut dg = dense_backward(&mut self.head, &head_in, dlogits, 1);

        for (i, layer) in self.dense_layers.iter_mut().enumerate().rev() {
            let dpre = relu_backward(&cache.dense_pre[i], &dg);
            let layer_in = if i == 0 { &cache.pooled } else { &cache.dense_post[i - 1] };
            dg = dense_backward(layer, layer_in, &dpre, 1);
        }

        let features = self.point_layers.last().map_or(3, |l| l.n_out());
        let mut dx = max_pool_backward(&dg, &cache.pool_arg, cache.rows, features);

        for (i, layer) in self.point_layers.iter_mut().enumerate().rev() {
            let dpre = relu_backward(&cache.point_pre[i], &dx);
            let layer_in = if i == 0 { &cache.input } else { &cache.point_post[i - 1] };
            dx = dense_backward(layer, layer_in, &dpre, cache.rows);
        }

        dx.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
    }
}

/// Conv trunk over the spherical signal, dense stack, then a unit-normalized
/// quaternion head and an unconstrained translation head.
#[derive(Debug, Clone)]
pub struct PoseRegressor {
    pub config: PoseRegressorConfig,
    convs: Vec<Conv2dLayer>,
    dense_layers: Vec<DenseLayer>,
    head_q: DenseLayer,
    head_t: DenseLayer,
    flat_len: usize,
}

pub struct PoseCache {
    conv_inputs: Vec<Tensor>,
    conv_pre: Vec<Tensor>,
    dense_pre: Vec<Vec<f64>>,
    dense_post: Vec<Vec<f64>>,
    flat: Vec<f64>,
    raw_q: [f64; 4],
}

impl PoseRegressor {
    pub fn new(config: PoseRegressorConfig, rng: &mut Rng) -> Self {
        assert_eq!(
            config.conv_channels.len(),
            config.conv_strides.len(),
            "one stride per conv block"
        );
        let mut convs = Vec::new();
        let mut c_in = 1;
        let (mut h, mut w) = (config.grid_h, config.grid_w);
        for (i, (&c_out, &stride)) in
            config.conv_channels.iter().zip(&config.conv_strides).enumerate()
        {
            let layer = Conv2dLayer::new(&format!("pose.conv{i}"), c_in, c_out, 3, stride, rng);
            let (oh, ow) = layer.out_hw(h, w);
            convs.push(layer);
            c_in = c_out;
            h = oh;
            w = ow;
        }
        let flat_len = c_in * h * w;
        let mut dense_layers = Vec::new();
        let mut n_in = flat_len;
        for (i, &width) in config.dense.iter().enumerate() {
            dense_layers.push(DenseLayer::new_relu(&format!("pose.dense{i}"), n_in, width, rng));
            n_in = width;
        }
        let mut head_q = DenseLayer::new("pose.head_q", n_in, 4, rng);
        // Identity-quaternion prior; also keeps the normalization layer away
        // from zero norm at initialization.
        head_q.bias.data[0] = 1.0;
        let head_t = DenseLayer::new("pose.head_t", n_in, 3, rng);
        Self { config, convs, dense_layers, head_q, head_t, flat_len }
    }

    pub fn params_mut(&mut self) -> Vec<(&str, &mut Tensor)> {
        let mut out: Vec<(&str, &mut Tensor)> = Vec::new();
        for c in self.convs.iter_mut() {
            out.push((c.name.as_str(), &mut c.kernel));
            out.push((c.name.as_str(), &mut c.bias));
        }
        for l in self.dense_layers.iter_mut() {
            out.push((l.name.as_str(), &mut l.weight));
            out.push((l.name.as_str(), &mut l.bias));
        }
        for l in [&mut self.head_q, &mut self.head_t] {
            out.push((l.name.as_str(), &mut l.weight));
            out.push((l.name.as_str(), &mut l.bias));
        }
        out
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push((format!("{}.kernel", c.name), &c.kernel));
            out.push((format!("{}.bias", c.name), &c.bias));
        }
        for l in &self.dense_layers {
            out.push((format!("{}.weight", l.name), &l.weight));
            out.push((format!("{}.bias", l.name), &l.bias));
        }
        for l in [&self.head_q, &self.head_t] {
            out.push((format!("{}.weight", l.name), &l.weight));
            out.push((format!("{}.bias", l.name), &l.bias));
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        for c in self.convs.iter_mut() {
            out.push((format!("{}.kernel", c.name), &mut c.kernel));
            out.push((format!("{}.bias", c.name), &mut c.bias));
        }
        for l in self.dense_layers.iter_mut() {
            out.push((format!("{}.weight", l.name), &mut l.weight));
            out.push((format!("{}.bias", l.name), &mut l.bias));
        }
        for l in [&mut self.head_q, &mut self.head_t] {
            out.push((format!("{}.weight", l.name), &mut l.weight));
            out.push((format!("{}.bias", l.name), &mut l.bias));
        }
        out
    }

    /// Runs the trunk and heads. Returns the unit quaternion (w, x, y, z),
    /// the translation, and the cache for backward.
    pub fn forward(&self, signal_values: &[f64]) -> Result<([f64; 4], Vec3, PoseCache)> {
        let expected = self.config.grid_w * self.config.grid_h;
        if signal_values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "signal has {} cells, regressor expects {expected}",
                signal_values.len()
            )));
        }
        let mut x = Tensor::from_data(
            &[1, self.config.grid_h, self.config.grid_w],
            signal_values.to_vec(),
        )?;
        let mut conv_inputs = Vec::new();
        let mut conv_pre = Vec::new();
        for conv in &self.convs {
            conv_inputs.push(x.clone());
            let pre = conv2d_forward(conv, &x)?;
            let post = Tensor::from_data(&pre.shape, relu_forward(&pre.data))?;
            conv_pre.push(pre);
            x = post;
        }
        debug_assert_eq!(x.numel(), self.flat_len);
        let flat = x.data;

        let mut g = flat.clone();
        let mut dense_pre = Vec::new();
        let mut dense_post = Vec::new();
        for layer in &self.dense_layers {
            let pre = dense_forward(layer, &g, 1);
            let post = relu_forward(&pre);
            dense_pre.push(pre);
            g = post.clone();
            dense_post.push(post);
        }
        let raw_q_v = dense_forward(&self.head_q, &g, 1);
        let raw_q = [raw_q_v[0], raw_q_v[1], raw_q_v[2], raw_q_v[3]];
        let q = quat_normalize_forward(&raw_q)?;
        let t_v = dense_forward(&self.head_t, &g, 1);
        let t = Vec3::new(t_v[0], t_v[1], t_v[2]);
        Ok((q, t, PoseCache { conv_inputs, conv_pre, dense_pre, dense_post, flat, raw_q }))
    }

    /// Backpropagates gradients on the unit quaternion and translation,
    /// accumulating parameter gradients.
    pub fn backward(&mut self, cache: &PoseCache, dq_unit: [f64; 4], dt: Vec3) -> Result<()> {
        let draw = quat_normalize_backward(&cache.raw_q, &dq_unit);
        let head_in = cache.dense_post.last().cloned().unwrap_or_else(|| cache.flat.clone());
        let dg_q = dense_backward(&mut self.head_q, &head_in, &draw, 1);
        let dg_t = dense_backward(&mut self.head_t, &head_in, &[dt.x, dt.y, dt.z], 1);
        let mut dg: Vec<f64> = dg_q.iter().zip(&dg_t).map(|(a, b)| a + b).collect();

        for (i, layer) in self.dense_layers.iter_mut().enumerate().rev() {
            let dpre = relu_backward(&cache.dense_pre[i], &dg);
            let layer_in = if i == 0 { &cache.flat } else { &cache.dense_post[i - 1] };
            dg = dense_backward(layer, layer_in, &dpre, 1);
        }

        let last_shape = cache.conv_pre.last().map(|t| t.shape.clone());
        let mut dx = match last_shape {
            Some(shape) => Tensor::from_data(&shape, dg)?,
            None => return Ok(()), // no conv trunk configured
        };
        for (i, conv) in self.convs.iter_mut().enumerate().rev() {
            let dpre = Tensor::from_data(
                &cache.conv_pre[i].shape,
                relu_backward(&cache.conv_pre[i].data, &dx.data),
            )?;
            dx = conv2d_backward(conv, &cache.conv_inputs[i], &dpre)?;
        }
        Ok(())
    }
}
