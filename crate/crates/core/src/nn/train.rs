//! Training and evaluation driver for all three regimes: pose-only,
//! classification-only, and the joint objective where classifier gradients
//! flow back through the rigid alignment into the pose heads.
//!
//! Determinism contract: given a seed, a dataset, and a config, the trained
//! parameters are bit-for-bit reproducible. Sample shuffling and per-sample
//! augmentation draw from streams derived from `(seed, epoch, sample index)`,
//! independent of batch composition.

use serde::{Deserialize, Serialize};

use crate::dataset::{derive_alignment_target, implied_camera_pose, LoadedDataset, Split};
use crate::error::{Error, Result};
use crate::geom::{
    farthest_point_sample, normalize_unit_sphere, sample_uniform_rotation, Frame, PointCloud,
    Quaternion, RigidPose, Vec3,
};
use crate::metrics::{pose_error, symmetry_canonicalize, PoseError};
use crate::rng::Rng;
use crate::sphsig::{encode_signal, SphericalGrid};

use super::align::{align_and_grad, align_forward, drot_dq};
use super::checkpoint::{load_checkpoint, save_checkpoint};
use super::layers::cross_entropy;
use super::networks::{PointNetClassifier, PoseRegressor};
use super::optim::{Adam, SgdMomentum};
use super::{ClassifierConfig, PoseRegressorConfig, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Adam, the backbone default the paper defers to.
    Adam,
    /// Plain SGD with momentum 0.9.
    Sgd,
}

enum Optimizer {
    Adam(Adam),
    Sgd(SgdMomentum),
}

impl Optimizer {
    fn set_lr(&mut self, lr: f64) {
        match self {
            Optimizer::Adam(o) => o.lr = lr,
            Optimizer::Sgd(o) => o.lr = lr,
        }
    }

    fn step(&mut self, params: &mut [(&str, &mut Tensor)], grad_scale: f64) {
        match self {
            Optimizer::Adam(o) => o.step(params, grad_scale),
            Optimizer::Sgd(o) => o.step(params, grad_scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainTask {
    PoseOnly,
    ClsOnly,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseLossKind {
    /// Quaternion + translation L2 (the regression loss).
    Reg,
    /// Geodesic rotation distance plus the weighted translation L2.
    Geo,
    /// Point-matching loss over the instance model points.
    Pm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: TrainTask,
    pub loss: PoseLossKind,
    /// Take the min over the predicted quaternion's sign in the regression
    /// loss. Off reproduces the raw formula for ablation.
    pub double_cover_safe: bool,
    pub lambda: f64,
    pub alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Per-epoch multiplicative learning-rate decay (1.0 = constant). The
    /// pose losses have constant-magnitude gradients (unsquared norms), so
    /// a schedule helps squeeze out the late-training noise floor.
    pub lr_decay: f64,
    /// Momentum for the SGD optimizer.
    pub momentum: f64,
    pub seed: u64,
    /// Points fed to the classifier (subsampled from the stored cloud).
    pub cls_points: usize,
    /// Block classifier gradients from reaching the pose heads in joint
    /// training.
    pub detach_align: bool,
    pub augment: bool,
    /// Include the random SO(3) rotation in augmentation. The shift and
    /// jitter stay on whenever `augment` is. Re-randomizing every pose each
    /// epoch is more than the plain grid-conv encoder can fit at desk scale,
    /// so pose-supervised runs typically turn this off and train on the
    /// dataset's fixed poses.
    pub aug_rotation: bool,
    pub regressor: PoseRegressorConfig,
    pub classifier: ClassifierConfig,
}

impl TrainConfig {
    pub fn new(task: TrainTask, num_classes: usize, seed: u64) -> Self {
        Self {
            task,
            loss: PoseLossKind::Reg,
            double_cover_safe: true,
            lambda: 10.0,
            alpha: 10.0,
            epochs: 30,
            batch_size: 16,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            lr_decay: 1.0,
            momentum: 0.9,
            seed,
            cls_points: 1024,
            detach_align: false,
            augment: true,
            aug_rotation: true,
            regressor: PoseRegressorConfig::default(),
            classifier: ClassifierConfig::with_classes(num_classes),
        }
    }

    pub fn grid(&self) -> Result<SphericalGrid> {
        SphericalGrid::new(self.regressor.grid_w, self.regressor.grid_h)
    }

    fn needs_regressor(&self) -> bool {
        matches!(self.task, TrainTask::PoseOnly | TrainTask::Joint)
    }

    fn needs_classifier(&self) -> bool {
        matches!(self.task, TrainTask::ClsOnly | TrainTask::Joint)
    }
}

/// The trainable networks for a config (either may be absent).
pub struct Models {
    pub config: TrainConfig,
    pub regressor: Option<PoseRegressor>,
    pub classifier: Option<PointNetClassifier>,
}

impl Models {
    pub fn init(config: TrainConfig) -> Self {
        let mut rng = Rng::derive(config.seed, &[0x1217]);
        let regressor = config
            .needs_regressor()
            .then(|| PoseRegressor::new(config.regressor.clone(), &mut rng));
        let classifier = config
            .needs_classifier()
            .then(|| PointNetClassifier::new(config.classifier.clone(), &mut rng));
        Self { config, regressor, classifier }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let config_json = serde_json::to_string(&self.config)?;
        let mut tensors: Vec<(String, &Tensor)> = Vec::new();
        if let Some(r) = &self.regressor {
            tensors.extend(r.named_tensors());
        }
        if let Some(c) = &self.classifier {
            tensors.extend(c.named_tensors());
        }
        save_checkpoint(path, &config_json, &tensors)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let contents = load_checkpoint(path)?;
        let config: TrainConfig = serde_json::from_str(&contents.config_json)?;
        let mut models = Models::init(config);
        let stored: std::collections::HashMap<String, Tensor> =
            contents.tensors.into_iter().collect();
        let mut filled = 0usize;
        let mut targets: Vec<(String, &mut Tensor)> = Vec::new();
        if let Some(r) = models.regressor.as_mut() {
            targets.extend(r.named_tensors_mut());
        }
        if let Some(c) = models.classifier.as_mut() {
            targets.extend(c.named_tensors_mut());
        }
        for (name, tensor) in targets {
            let src = stored
                .get(&name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            if src.shape != tensor.shape {
                return Err(Error::Checkpoint(format!(
                    "tensor {name}: shape {:?} in file, {:?} expected",
                    src.shape, tensor.shape
                )));
            }
            tensor.data.copy_from_slice(&src.data);
            filled += 1;
        }
        if filled != stored.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} tensors, model uses {filled}",
                stored.len()
            )));
        }
        Ok(models)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub mean_pose_loss: f64,
    pub mean_cls_loss: f64,
    pub train_accuracy: f64,
}

pub struct TrainOutcome {
    pub models: Models,
    pub log: Vec<EpochLog>,
}

struct Prepared<'a> {
    /// Full normalized cloud, signal input.
    normed: PointCloud,
    /// Subsampled normalized points, classifier input.
    cls_points: Vec<Vec3>,
    class_id: usize,
    /// Alignment-space pose target (symmetry-canonicalized), when the
    /// dataset carries usable pose labels.
    target: Option<RigidPose>,
    model_points: Option<&'a [Vec3]>,
}

const JITTER_SIGMA: f64 = 0.01;
const JITTER_CLIP: f64 = 0.05;
const SHIFT_RANGE: f64 = 0.1;

/// Trains per the config. See the module docs for the determinism contract.
pub fn train(dataset: &LoadedDataset, config: TrainConfig) -> Result<TrainOutcome> {
    if dataset.train.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if config.needs_regressor() && dataset.meta.frame != Frame::Camera {
        return Err(Error::WrongFrame { expected: Frame::Camera, found: dataset.meta.frame });
    }
    let grid = config.grid()?;
    let mut models = Models::init(config.clone());
    let mut opt = match config.optimizer {
        OptimizerKind::Adam => Optimizer::Adam(Adam::new(config.lr)),
        OptimizerKind::Sgd => Optimizer::Sgd(SgdMomentum::new(config.lr, config.momentum)),
    };
    let n = dataset.train.len();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        opt.set_lr(config.lr * config.lr_decay.powi(epoch as i32));
        let mut order: Vec<usize> = (0..n).collect();
        Rng::derive(config.seed, &[0x5e0f, epoch as u64]).shuffle(&mut order);

        let mut sum_loss = 0.0;
        let mut sum_pose = 0.0;
        let mut sum_cls = 0.0;
        let mut correct = 0usize;
        let mut step = 0usize;
        for chunk in order.chunks(config.batch_size) {
            for &si in chunk {
                let sample = &dataset.train[si];
                let mut aug_rng = Rng::derive(config.seed, &[0xa060, epoch as u64, si as u64]);
                let prepared = prepare_sample(dataset, sample, &config, &grid, &mut aug_rng)?;
                let (loss, pose_l, cls_l, hit) = step_sample(&mut models, &prepared, &config, &grid)?;
                if !loss.is_finite() {
                    return Err(Error::NanLoss { epoch, step });
                }
                sum_loss += loss;
                sum_pose += pose_l;
                sum_cls += cls_l;
                correct += hit as usize;
            }
            let mut params: Vec<(&str, &mut Tensor)> = Vec::new();
            if let Some(r) = models.regressor.as_mut() {
                params.extend(r.params_mut());
            }
            if let Some(c) = models.classifier.as_mut() {
                params.extend(c.params_mut());
            }
            opt.step(&mut params, 1.0 / chunk.len() as f64);
            step += 1;
        }
        log.push(EpochLog {
            epoch,
            mean_loss: sum_loss / n as f64,
            mean_pose_loss: sum_pose / n as f64,
            mean_cls_loss: sum_cls / n as f64,
            train_accuracy: correct as f64 / n as f64,
        });
    }
    Ok(TrainOutcome { models, log })
}

fn prepare_sample<'a>(
    dataset: &'a LoadedDataset,
    sample: &crate::dataset::LoadedSample,
    config: &TrainConfig,
    _grid: &SphericalGrid,
    rng: &mut Rng,
) -> Result<Prepared<'a>> {
    let frame = dataset.meta.frame;
    let mut points = sample.points.clone();
    let mut pose = sample.record.pose()?;

    if config.augment {
        if frame != Frame::Canonical {
            if config.aug_rotation {
                // Random rotation composed into the pose label.
                let rot = sample_uniform_rotation(rng);
                let aug = RigidPose::new(rot, Vec3::ZERO);
                for p in points.iter_mut() {
                    *p = aug.apply_point(*p);
                }
                pose = aug.compose(&pose);
            }
            let shift = Vec3::new(
                rng.uniform(-SHIFT_RANGE, SHIFT_RANGE),
                rng.uniform(-SHIFT_RANGE, SHIFT_RANGE),
                rng.uniform(-SHIFT_RANGE, SHIFT_RANGE),
            );
            for p in points.iter_mut() {
                *p = *p + shift;
            }
            pose.translation = pose.translation + shift;
        }
        for p in points.iter_mut() {
            let jitter = Vec3::new(
                (rng.normal() * JITTER_SIGMA).clamp(-JITTER_CLIP, JITTER_CLIP),
                (rng.normal() * JITTER_SIGMA).clamp(-JITTER_CLIP, JITTER_CLIP),
                (rng.normal() * JITTER_SIGMA).clamp(-JITTER_CLIP, JITTER_CLIP),
            );
            *p = *p + jitter;
        }
    }

    let (normed, centroid, scale) =
        normalize_unit_sphere(&PointCloud::new(points, frame))?;

    let cls_points = if config.cls_points >= normed.len() {
        normed.points.clone()
    } else {
        rng.sample_indices(normed.len(), config.cls_points)
            .into_iter()
            .map(|i| normed.points[i])
            .collect()
    };

    let target = if config.needs_regressor() {
        let sym = dataset.symmetry_of(sample.record.class_id);
        let canon_rot = symmetry_canonicalize(pose.rotation, &sym)?;
        let canon_pose = RigidPose::new(canon_rot, pose.translation);
        Some(derive_alignment_target(&canon_pose, centroid, scale)?)
    } else {
        None
    };
    let model_points = matches!(config.loss, PoseLossKind::Pm)
        .then(|| dataset.model_points.get(&sample.record.instance_id).map(|v| v.as_slice()))
        .flatten();

    Ok(Prepared { normed, cls_points, class_id: sample.record.class_id, target, model_points })
}

/// Forward/backward for one sample. Returns (total loss, pose term,
/// classification term, correct top-1).
fn step_sample(
    models: &mut Models,
    prepared: &Prepared<'_>,
    config: &TrainConfig,
    grid: &SphericalGrid,
) -> Result<(f64, f64, f64, bool)> {
    match config.task {
        TrainTask::ClsOnly => {
            let classifier = models.classifier.as_mut().expect("cls task has classifier");
            let (logits, cache) = classifier.forward(&prepared.cls_points)?;
            let (loss, dlogits) = cross_entropy(&logits, prepared.class_id)?;
            classifier.backward(&cache, &dlogits);
            Ok((loss, 0.0, loss, argmax(&logits) == prepared.class_id))
        }
        TrainTask::PoseOnly => {
            let regressor = models.regressor.as_mut().expect("pose task has regressor");
            let signal = encode_signal(&prepared.normed, grid)?;
            let (q_hat, t_hat, cache) = regressor.forward(&signal.values)?;
            let target = prepared.target.as_ref().expect("pose task has target");
            let (loss, dq, dt) =
                pose_loss_and_grad(config, target, q_hat, t_hat, prepared.model_points)?;
            regressor.backward(&cache, dq, dt)?;
            Ok((loss, loss, 0.0, false))
        }
        TrainTask::Joint => {
            let signal = encode_signal(&prepared.normed, grid)?;
            let regressor = models.regressor.as_mut().expect("joint task has regressor");
            let (q_hat, t_hat, pose_cache) = regressor.forward(&signal.values)?;
            let target = prepared.target.as_ref().expect("joint task has target");
            let (pose_loss, mut dq, mut dt) =
                pose_loss_and_grad(config, target, q_hat, t_hat, prepared.model_points)?;

            let (aligned, align_cache) = align_forward(&prepared.cls_points, q_hat, t_hat)?;
            let classifier = models.classifier.as_mut().expect("joint task has classifier");
            let (logits, cls_cache) = classifier.forward(&aligned)?;
            let (cls_loss, mut dlogits) = cross_entropy(&logits, prepared.class_id)?;
            // d(total)/dlogits carries the lambda factor.
            for g in dlogits.iter_mut() {
                *g *= config.lambda;
            }
            let dpoints = classifier.backward(&cls_cache, &dlogits);
            if !config.detach_align {
                let (dq_al, dt_al) = align_and_grad(&align_cache, &dpoints);
                for c in 0..4 {
                    dq[c] += dq_al[c];
                }
                dt = dt + dt_al;
            }
            regressor.backward(&pose_cache, dq, dt)?;

            let total = pose_loss + config.lambda * cls_loss;
            Ok((total, pose_loss, cls_loss, argmax(&logits) == prepared.class_id))
        }
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Loss value and gradients with respect to the unit quaternion and the
/// translation prediction.
pub(crate) fn pose_loss_and_grad(
    config: &TrainConfig,
    target: &RigidPose,
    q_hat: [f64; 4],
    t_hat: Vec3,
    model_points: Option<&[Vec3]>,
) -> Result<(f64, [f64; 4], Vec3)> {
    let qt = [target.rotation.w, target.rotation.x, target.rotation.y, target.rotation.z];
    let tt = target.translation;
    match config.loss {
        PoseLossKind::Reg => {
            let diff = sub4(q_hat, qt);
            let sum = add4(q_hat, qt);
            let (nd, ns) = (norm4(diff), norm4(sum));
            let (resid, nr) = if config.double_cover_safe && ns < nd {
                (sum, ns)
            } else {
                (diff, nd)
            };
            let mut dq = [0.0; 4];
            if nr > 1e-12 {
                for c in 0..4 {
                    dq[c] = resid[c] / nr;
                }
            }
            let (tl, dt) = trans_l2(config.alpha, t_hat, tt);
            Ok((nr + tl, dq, dt))
        }
        PoseLossKind::Geo => {
            let d = dot4(q_hat, qt);
            let u = (2.0 * d * d - 1.0).clamp(-1.0, 1.0);
            let theta = u.acos();
            let denom = (1.0 - u * u).sqrt();
            let mut dq = [0.0; 4];
            if denom > 1e-9 {
                let k = -4.0 * d / denom;
                for c in 0..4 {
                    dq[c] = k * qt[c];
                }
            }
            let (tl, dt) = trans_l2(config.alpha, t_hat, tt);
            Ok((theta + tl, dq, dt))
        }
        PoseLossKind::Pm => {
            let pts = model_points.ok_or(Error::EmptyCloud)?;
            if pts.is_empty() {
                return Err(Error::EmptyCloud);
            }
            let r_t = crate::geom::quat_to_matrix(target.rotation);
            let q_hat_q = Quaternion { w: q_hat[0], x: q_hat[1], y: q_hat[2], z: q_hat[3] };
            let r_h = crate::geom::quat_to_matrix(q_hat_q);
            let m = pts.len() as f64;
            let mut loss = 0.0;
            let mut dq = [0.0; 4];
            let mut dt = Vec3::ZERO;
            for &x in pts {
                let a = r_t.apply(x) + tt;
                let b = r_h.apply(x) + t_hat;
                let d = a - b;
                let nd = d.norm();
                loss += nd / m;
                if nd > 1e-12 {
                    let u = d / (nd * m); // d(loss)/d(a - b)
                    dt = dt - u;
                    let dr = drot_dq(&q_hat, x);
                    for c in 0..4 {
                        dq[c] -= u.dot(dr[c]);
                    }
                }
            }
            Ok((loss, dq, dt))
        }
    }
}

fn trans_l2(alpha: f64, t_hat: Vec3, tt: Vec3) -> (f64, Vec3) {
    let d = t_hat - tt;
    let n = d.norm();
    if n > 1e-12 {
        (alpha * n, d * (alpha / n))
    } else {
        (0.0, Vec3::ZERO)
    }
}

fn sub4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn add4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn dot4(a: [f64; 4], b: [f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn norm4(a: [f64; 4]) -> f64 {
    dot4(a, a).sqrt()
}

// --- Evaluation ---------------------------------------------------------------

/// Classifies a split. Joint models run the full align-then-classify
/// pipeline; classifier-only models consume the normalized points directly.
/// Subsampling uses deterministic farthest-point selection.
pub fn eval_classification(
    models: &Models,
    dataset: &LoadedDataset,
    split: Split,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let classifier = models
        .classifier
        .as_ref()
        .ok_or_else(|| Error::Checkpoint("checkpoint has no classifier".into()))?;
    let grid = models.config.grid()?;
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    for sample in dataset.split(split) {
        let (normed, _, _) =
            normalize_unit_sphere(&PointCloud::new(sample.points.clone(), dataset.meta.frame))?;
        let input = if models.config.cls_points < normed.len() {
            farthest_point_sample(&normed, models.config.cls_points)?.points
        } else {
            normed.points.clone()
        };
        let points = match (&models.regressor, models.config.task) {
            (Some(regressor), TrainTask::Joint) => {
                let signal = encode_signal(&normed, &grid)?;
                let (q_hat, t_hat, _) = regressor.forward(&signal.values)?;
                let (aligned, _) = align_forward(&input, q_hat, t_hat)?;
                aligned
            }
            _ => input,
        };
        let (logits, _) = classifier.forward(&points)?;
        preds.push(argmax(&logits));
        labels.push(sample.record.class_id);
    }
    Ok((preds, labels))
}

/// Alignment-space pose predictions for a split, in sample order.
pub fn eval_poses(
    models: &Models,
    dataset: &LoadedDataset,
    split: Split,
) -> Result<Vec<RigidPose>> {
    let regressor = models
        .regressor
        .as_ref()
        .ok_or_else(|| Error::Checkpoint("checkpoint has no pose regressor".into()))?;
    let grid = models.config.grid()?;
    let mut out = Vec::new();
    for sample in dataset.split(split) {
        let (normed, _, _) =
            normalize_unit_sphere(&PointCloud::new(sample.points.clone(), dataset.meta.frame))?;
        let signal = encode_signal(&normed, &grid)?;
        let (q_hat, t_hat, _) = regressor.forward(&signal.values)?;
        out.push(RigidPose::new(
            Quaternion { w: q_hat[0], x: q_hat[1], y: q_hat[2], z: q_hat[3] },
            t_hat,
        ));
    }
    Ok(out)
}

/// Converts alignment-space predictions back to camera poses through each
/// sample's stored normalization and scores them against the ground truth
/// (symmetry-reduced rotations, translations in meters).
pub fn pose_errors_for_predictions(
    dataset: &LoadedDataset,
    split: Split,
    predictions: &[RigidPose],
) -> Result<Vec<PoseError>> {
    let samples = dataset.split(split);
    if samples.len() != predictions.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples vs {} predictions",
            samples.len(),
            predictions.len()
        )));
    }
    samples
        .iter()
        .zip(predictions)
        .map(|(sample, pred)| {
            let implied =
                implied_camera_pose(pred, sample.record.centroid_vec(), sample.record.scale);
            let gt = sample.record.pose()?;
            let sym = dataset.symmetry_of(sample.record.class_id);
            pose_error(&gt, &implied, &sym)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check_pose_loss(kind: PoseLossKind) {
        let mut rng = Rng::new(91);
        let mut config = TrainConfig::new(TrainTask::PoseOnly, 2, 0);
        config.loss = kind;
        config.alpha = 10.0;
        let model_pts: Vec<Vec3> = (0..16)
            .map(|_| Vec3::new(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)))
            .collect();
        for _ in 0..5 {
            let target = RigidPose::new(
                sample_uniform_rotation(&mut rng).hemisphere_canonical(),
                Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
            );
            let q0 = sample_uniform_rotation(&mut rng);
            let q_hat = [q0.w, q0.x, q0.y, q0.z];
            let t_hat = Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            let (_, dq, dt) =
                pose_loss_and_grad(&config, &target, q_hat, t_hat, Some(&model_pts)).unwrap();
            let f = |q: [f64; 4], t: Vec3| {
                pose_loss_and_grad(&config, &target, q, t, Some(&model_pts)).unwrap().0
            };
            let step = 1e-6;
            for c in 0..4 {
                let mut qp = q_hat;
                let mut qm = q_hat;
                qp[c] += step;
                qm[c] -= step;
                let fd = (f(qp, t_hat) - f(qm, t_hat)) / (2.0 * step);
                assert!(
                    (dq[c] - fd).abs() / fd.abs().max(1e-3) < 1e-4,
                    "{kind:?} dq[{c}]: analytic {} fd {fd}",
                    dq[c]
                );
            }
            let analytic = [dt.x, dt.y, dt.z];
            for c in 0..3 {
                let mut tp = t_hat;
                let mut tm = t_hat;
                let delta = Vec3::new(
                    if c == 0 { step } else { 0.0 },
                    if c == 1 { step } else { 0.0 },
                    if c == 2 { step } else { 0.0 },
                );
                tp = tp + delta;
                tm = tm - delta;
                let fd = (f(q_hat, tp) - f(q_hat, tm)) / (2.0 * step);
                assert!((analytic[c] - fd).abs() / fd.abs().max(1e-3) < 1e-4);
            }
        }
    }

    #[test]
    fn reg_loss_gradients_match_finite_differences() {
        fd_check_pose_loss(PoseLossKind::Reg);
    }

    #[test]
    fn geo_loss_gradients_match_finite_differences() {
        fd_check_pose_loss(PoseLossKind::Geo);
    }

    #[test]
    fn pm_loss_gradients_match_finite_differences() {
        fd_check_pose_loss(PoseLossKind::Pm);
    }
}
