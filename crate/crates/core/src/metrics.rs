//! Supervision and evaluation quantities: the regression pose loss, geodesic
//! and point-matching alternatives, the joint loss, symmetry handling, the
//! 10cm10deg pose metric, and classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{quat_to_matrix, Quaternion, RigidPose, Vec3};

/// Rotational symmetry of a shape class. Poses are compared modulo this
/// group: rotation error on the symmetry axis is not penalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetrySpec {
    None,
    /// n-fold rotational symmetry about `axis` (order >= 2).
    DiscreteAxis { axis: Vec3, order: u32 },
    /// Surface of revolution about `axis`.
    ContinuousAxis { axis: Vec3 },
}

impl SymmetrySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SymmetrySpec::None => Ok(()),
            SymmetrySpec::DiscreteAxis { axis, order } => {
                if order < 2 {
                    return Err(Error::Degenerate("discrete symmetry order must be >= 2"));
                }
                check_axis(axis)
            }
            SymmetrySpec::ContinuousAxis { axis } => check_axis(axis),
        }
    }
}

fn check_axis(axis: Vec3) -> Result<()> {
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Degenerate("symmetry axis must be unit-norm"));
    }
    Ok(())
}

/// Rotation/translation error of one prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    /// Geodesic rotation error in degrees, [0, 180].
    pub rot_deg: f64,
    /// Translation error in meters.
    pub trans: f64,
}

/// Regression pose loss: `min(|q - qh|, |q + qh|) + alpha |t - th|`.
/// The min over the sign of `qh` makes the rotation term well-posed under the
/// quaternion double cover; `double_cover_safe = false` selects the raw
/// `|q - qh|` form for ablation.
pub fn loss_reg(
    q: Quaternion,
    t: Vec3,
    q_hat: Quaternion,
    t_hat: Vec3,
    alpha: f64,
    double_cover_safe: bool,
) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::NegativeWeight(alpha));
    }
    Ok(quat_residual(q, q_hat, double_cover_safe) + alpha * (t - t_hat).norm())
}

fn quat_diff_norm(a: Quaternion, b: Quaternion) -> f64 {
    let (dw, dx, dy, dz) = (a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z);
    (dw * dw + dx * dx + dy * dy + dz * dz).sqrt()
}

fn quat_residual(q: Quaternion, q_hat: Quaternion, double_cover_safe: bool) -> f64 {
    let direct = quat_diff_norm(q, q_hat);
    if !double_cover_safe {
        return direct;
    }
    direct.min(quat_diff_norm(q, q_hat.negated()))
}

/// Geodesic distance on SO(3) in radians: `arccos(clamp(2 <q, qh>^2 - 1))`,
/// sign-invariant. Evaluated through the quaternion chord
/// (`4 asin(min(|q - qh|, |q + qh|) / 2)`, the same function) so that small
/// angles come out exact instead of losing half the mantissa in `acos`.
pub fn loss_geo(q: Quaternion, q_hat: Quaternion) -> f64 {
    let chord = quat_diff_norm(q, q_hat).min(quat_diff_norm(q, q_hat.negated()));
    4.0 * (chord * 0.5).clamp(-1.0, 1.0).asin()
}

/// Point-matching loss: mean distance between the model points under the two
/// poses, `(1/m) sum |（R x + t) - (Rh x + th)|`.
pub fn loss_pm(
    q: Quaternion,
    t: Vec3,
    q_hat: Quaternion,
    t_hat: Vec3,
    model_points: &[Vec3],
) -> Result<f64> {
    if model_points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let r = quat_to_matrix(q);
    let r_hat = quat_to_matrix(q_hat);
    let sum: f64 = model_points
        .iter()
        .map(|&x| ((r.apply(x) + t) - (r_hat.apply(x) + t_hat)).norm())
        .sum();
    Ok(sum / model_points.len() as f64)
}

/// Joint objective: `L_pos + lambda * L_cls`.
pub fn loss_total(l_pos: f64, l_cls: f64, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::NegativeWeight(lambda));
    }
    Ok(l_pos + lambda * l_cls)
}

/// Maps `q` to the canonical representative of its coset under the symmetry
/// group (group elements act on the right: `q ~ q * g`).
///
/// - `None`: hemisphere canonicalization only.
/// - `DiscreteAxis`: among the `order` rotations `g_i` about the axis, pick
///   the product `q * g_i` closest to the identity (ties: lowest `i`).
/// - `ContinuousAxis`: remove the twist component about the axis
///   (swing-twist decomposition), leaving only the swing.
pub fn symmetry_canonicalize(q: Quaternion, spec: &SymmetrySpec) -> Result<Quaternion> {
    spec.validate()?;
    let out = match *spec {
        SymmetrySpec::None => q,
        SymmetrySpec::DiscreteAxis { axis, order } => {
            let mut best = q;
            let mut best_angle = f64::INFINITY;
            for i in 0..order {
                let g = Quaternion::from_axis_angle(axis, std::f64::consts::TAU * i as f64 / order as f64);
                let candidate = q.mul(g).renormalized();
                let angle = candidate.angle();
                if angle < best_angle {
                    best_angle = angle;
                    best = candidate;
                }
            }
            best
        }
        SymmetrySpec::ContinuousAxis { axis } => {
            // Swing-twist: q = swing * twist with twist about `axis`;
            // the canonical representative is the swing.
            let proj = q.x * axis.x + q.y * axis.y + q.z * axis.z;
            let tw = q.w;
            let norm = (tw * tw + proj * proj).sqrt();
            if norm < 1e-12 {
                // 180-degree rotation about an axis orthogonal to the symmetry
                // axis: the twist is undefined, take it as the identity.
                q
            } else {
                let twist = Quaternion {
                    w: tw / norm,
                    x: axis.x * proj / norm,
                    y: axis.y * proj / norm,
                    z: axis.z * proj / norm,
                };
                q.mul(twist.conjugate()).renormalized()
            }
        }
    };
    Ok(out.hemisphere_canonical())
}

/// Rotation/translation error between a ground-truth and predicted object
/// pose, with both rotations reduced by the class symmetry first.
pub fn pose_error(gt: &RigidPose, pred: &RigidPose, spec: &SymmetrySpec) -> Result<PoseError> {
    let qa = symmetry_canonicalize(gt.rotation, spec)?;
    let qb = symmetry_canonicalize(pred.rotation, spec)?;
    Ok(PoseError {
        rot_deg: loss_geo(qa, qb).to_degrees(),
        trans: (gt.translation - pred.translation).norm(),
    })
}

pub const ROT_THRESH_DEG: f64 = 10.0;
pub const TRANS_THRESH_M: f64 = 0.10;

/// Fraction of predictions with rotation error under `rot_thresh_deg` and
/// translation error under `trans_thresh_m` (the 10cm10deg metric at the
/// default thresholds). Errors must already be symmetry-reduced.
pub fn pose_accuracy(errors: &[PoseError], rot_thresh_deg: f64, trans_thresh_m: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let hits = errors
        .iter()
        .filter(|e| e.rot_deg < rot_thresh_deg && e.trans < trans_thresh_m)
        .count();
    Ok(hits as f64 / errors.len() as f64)
}

/// K x K count matrix; rows are ground truth, columns predictions.
pub fn confusion_matrix(preds: &[usize], labels: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if preds.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut m = vec![vec![0usize; k]; k];
    for (&p, &l) in preds.iter().zip(labels) {
        if p >= k {
            return Err(Error::LabelOutOfRange { label: p, classes: k });
        }
        if l >= k {
            return Err(Error::LabelOutOfRange { label: l, classes: k });
        }
        m[l][p] += 1;
    }
    Ok(m)
}

/// Fraction of correct predictions.
pub fn classification_accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// One evaluation result row; reports are CSVs of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub split: String,
    pub metric: String,
    pub value: f64,
}

pub fn write_metric_csv(rows: &[MetricRow], path: &std::path::Path) -> Result<()> {
    let mut out = String::from("method,split,metric,value\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.method, r.split, r.metric, r.value));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_metric_csv(path: &std::path::Path) -> Result<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                what: "metric csv",
                detail: format!("line {}: expected 4 fields", i + 1),
            });
        }
        rows.push(MetricRow {
            method: parts[0].to_string(),
            split: parts[1].to_string(),
            metric: parts[2].to_string(),
            value: parts[3].parse().map_err(|e| Error::Parse {
                what: "metric csv",
                detail: format!("line {}: {e}", i + 1),
            })?,
        });
    }
    Ok(rows)
}
