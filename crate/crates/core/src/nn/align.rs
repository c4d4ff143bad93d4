//! Differentiable rigid alignment: `p' = R(q) p + t`, with gradients flowing
//! from the classifier back into the pose heads. The rotation matrix is the
//! standard quaternion polynomial, so its gradient with respect to the four
//! quaternion components is exact for the expression evaluated in forward.

use crate::error::{Error, Result};
use crate::geom::{quat_to_matrix, Quaternion, Vec3};

pub struct AlignCache {
    q: [f64; 4],
    points: Vec<Vec3>,
}

/// Forward alignment of `points` by `(q, t)`.
pub fn align_forward(points: &[Vec3], q: [f64; 4], t: Vec3) -> Result<(Vec<Vec3>, AlignCache)> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let quat = Quaternion { w: q[0], x: q[1], y: q[2], z: q[3] };
    if !quat.is_finite() {
        return Err(Error::NonFinite("alignment quaternion"));
    }
    let r = quat_to_matrix(quat);
    let out = points.iter().map(|&p| r.apply(p) + t).collect();
    Ok((out, AlignCache { q, points: points.to_vec() }))
}

/// Partial derivatives of the rotation polynomial with respect to each
/// quaternion component, applied to `p`.
pub(crate) fn drot_dq(q: &[f64; 4], p: Vec3) -> [Vec3; 4] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let dw = Vec3::new(
        -2.0 * z * p.y + 2.0 * y * p.z,
        2.0 * z * p.x - 2.0 * x * p.z,
        -2.0 * y * p.x + 2.0 * x * p.y,
    );
    let dx = Vec3::new(
        2.0 * y * p.y + 2.0 * z * p.z,
        2.0 * y * p.x - 4.0 * x * p.y - 2.0 * w * p.z,
        2.0 * z * p.x + 2.0 * w * p.y - 4.0 * x * p.z,
    );
    let dy = Vec3::new(
        -4.0 * y * p.x + 2.0 * x * p.y + 2.0 * w * p.z,
        2.0 * x * p.x + 2.0 * z * p.z,
        -2.0 * w * p.x + 2.0 * z * p.y - 4.0 * y * p.z,
    );
    let dz = Vec3::new(
        -4.0 * z * p.x - 2.0 * w * p.y + 2.0 * x * p.z,
        2.0 * w * p.x - 4.0 * z * p.y + 2.0 * y * p.z,
        2.0 * x * p.x + 2.0 * y * p.y,
    );
    [dw, dx, dy, dz]
}

/// Backward pass: folds per-point upstream gradients into gradients on the
/// (unit) quaternion and the translation.
pub fn align_and_grad(cache: &AlignCache, dout: &[Vec3]) -> ([f64; 4], Vec3) {
    debug_assert_eq!(dout.len(), cache.points.len());
    let mut dq = [0.0f64; 4];
    let mut dt = Vec3::ZERO;
    for (&p, &g) in cache.points.iter().zip(dout) {
        dt = dt + g;
        let d = drot_dq(&cache.q, p);
        for c in 0..4 {
            dq[c] += g.dot(d[c]);
        }
    }
    (dq, dt)
}
