//! Minimal from-scratch differentiable stack: dense tensors with manual
//! backpropagation, a grid-convolutional pose regressor over spherical
//! signals, a PointNet-style point classifier, and a differentiable rigid
//! alignment connecting the two.
//!
//! Everything is f64 and single-threaded; given a seed, training is
//! bit-for-bit reproducible.

mod align;
mod checkpoint;
mod layers;
mod networks;
mod optim;
mod train;

pub use align::{align_and_grad, align_forward, AlignCache};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use layers::{
    conv2d_backward, conv2d_forward, cross_entropy, dense_backward, dense_forward,
    max_pool_backward, max_pool_forward, quat_normalize_backward, quat_normalize_forward,
    relu_backward, relu_forward, Conv2dLayer, DenseLayer,
};
pub use networks::{ClsCache, PointNetClassifier, PoseCache, PoseRegressor};
pub use optim::{Adam, SgdMomentum};
pub use train::{
    eval_classification, eval_poses, pose_errors_for_predictions, train, EpochLog, Models,
    OptimizerKind, PoseLossKind, TrainConfig, TrainOutcome, TrainTask,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-major tensor of up to 4 axes with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.len() <= 4, "tensors carry at most 4 axes");
        let n: usize = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![0.0; n], grad: None }
    }

    pub fn from_data(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} holds {n} values, got {}",
                shape,
                data.len()
            )));
        }
        Ok(Self { shape: shape.to_vec(), data, grad: None })
    }

    /// Glorot-uniform initialization in +-sqrt(6 / (fan_in + fan_out)).
    pub fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
        Self { shape: shape.to_vec(), data, grad: None }
    }

    /// He-uniform initialization in +-sqrt(6 / fan_in), the variance-
    /// preserving choice for ReLU layers. Glorot shrinks activations by
    /// roughly half per ReLU layer, which starves the deeper trunk of
    /// gradient on the sparse spherical signals.
    pub fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / fan_in as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
        Self { shape: shape.to_vec(), data, grad: None }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Gradient buffer, created zeroed on first use.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self.grad.as_mut().unwrap()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Pose regressor architecture: conv trunk over the W x H signal, one dense
/// stack, then a 4-way quaternion head and a 3-way translation head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRegressorConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    /// Output channels per conv block; each block is a 3x3 conv with
    /// longitude wrap, followed by ReLU.
    pub conv_channels: Vec<usize>,
    /// Stride per conv block (same length as `conv_channels`).
    pub conv_strides: Vec<usize>,
    pub dense: Vec<usize>,
}

impl Default for PoseRegressorConfig {
    fn default() -> Self {
        Self {
            grid_w: 64,
            grid_h: 64,
            conv_channels: vec![8, 16, 32],
            conv_strides: vec![2, 2, 2],
            dense: vec![128],
        }
    }
}

/// PointNet-style classifier architecture: shared per-point MLP, max pool,
/// dense stack, K logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub point_mlp: Vec<usize>,
    pub dense: Vec<usize>,
    pub num_classes: usize,
}

impl ClassifierConfig {
    pub fn with_classes(num_classes: usize) -> Self {
        Self { point_mlp: vec![64, 128], dense: vec![64], num_classes }
    }
}
