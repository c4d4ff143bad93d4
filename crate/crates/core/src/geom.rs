//! Rigid-body algebra, pose/rotation sampling, and point-cloud primitives.
//!
//! Conventions used throughout the workspace:
//! - points are column vectors, poses act as `p' = R p + t`;
//! - quaternions are stored `(w, x, y, z)` and kept unit-norm;
//! - quaternions produced as labels are canonicalized to the `w >= 0`
//!   hemisphere so the regression target is single-valued;
//! - all randomness comes from an explicit [`Rng`](crate::rng::Rng).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// 3D vector in world units (meters by convention).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component-wise minimum.
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    /// Component-wise maximum.
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Mat3 { m: r }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }
}

/// Unit quaternion, stored `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes the components; errors on non-finite or zero input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() {
            return Err(Error::NonFinite("quaternion"));
        }
        if n < 1e-12 {
            return Err(Error::Degenerate("zero-norm quaternion"));
        }
        Ok(Self { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = axis.normalized();
        let (s, c) = (angle * 0.5).sin_cos();
        Self { w: c, x: a.x * s, y: a.y * s, z: a.z * s }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(self, o: Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn negated(self) -> Quaternion {
        Quaternion { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product; `R(a * b) = R(a) R(b)`.
    pub fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    /// Representative on the `w >= 0` hemisphere (`q` and `-q` rotate alike).
    pub fn hemisphere_canonical(self) -> Quaternion {
        if self.w < 0.0 {
            self.negated()
        } else {
            self
        }
    }

    /// Renormalize after accumulated arithmetic.
    pub fn renormalized(self) -> Quaternion {
        let n = self.norm();
        Quaternion { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        quat_to_matrix(self).apply(v)
    }

    /// Rotation angle in radians, in [0, pi].
    pub fn angle(self) -> f64 {
        2.0 * self.w.abs().clamp(-1.0, 1.0).acos()
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Rotation matrix of a unit quaternion.
pub fn quat_to_matrix(q: Quaternion) -> Mat3 {
    assert!(q.is_finite(), "non-finite quaternion");
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Mat3 {
        m: [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ],
    }
}

/// Quaternion of a rotation matrix (Shepperd's method, stable branch per
/// largest diagonal term). Output is hemisphere-canonical.
pub fn quat_from_matrix(r: &Mat3) -> Quaternion {
    let m = &r.m;
    let trace = r.trace();
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quaternion {
            w: 0.25 * s,
            x: (m[2][1] - m[1][2]) / s,
            y: (m[0][2] - m[2][0]) / s,
            z: (m[1][0] - m[0][1]) / s,
        }
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        Quaternion {
            w: (m[2][1] - m[1][2]) / s,
            x: 0.25 * s,
            y: (m[0][1] + m[1][0]) / s,
            z: (m[0][2] + m[2][0]) / s,
        }
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        Quaternion {
            w: (m[0][2] - m[2][0]) / s,
            x: (m[0][1] + m[1][0]) / s,
            y: 0.25 * s,
            z: (m[1][2] + m[2][1]) / s,
        }
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        Quaternion {
            w: (m[1][0] - m[0][1]) / s,
            x: (m[0][2] + m[2][0]) / s,
            y: (m[1][2] + m[2][1]) / s,
            z: 0.25 * s,
        }
    };
    q.renormalized().hemisphere_canonical()
}

/// Rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidPose {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

impl RigidPose {
    pub const IDENTITY: RigidPose = RigidPose {
        rotation: Quaternion::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// `self` after `other`: `(self ∘ other)(p) = self(other(p))`.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation.mul(other.rotation).renormalized(),
            translation: self.rotation.rotate(other.translation) + self.translation,
        }
    }
}

/// Inverse pose: `compose(pose, pose_inverse(pose)) = identity`.
pub fn pose_inverse(pose: &RigidPose) -> RigidPose {
    let rinv = pose.rotation.conjugate();
    RigidPose {
        rotation: rinv,
        translation: -rinv.rotate(pose.translation),
    }
}

/// Coordinate frame a cloud currently lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Depth-camera coordinates, meters, +z in front of the camera.
    Camera,
    /// Centroid-centered, scaled to the unit sphere.
    Normalized,
    /// Category-level canonical orientation.
    Canonical,
}

/// Ordered list of 3D points tagged with the frame they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, frame: Frame) -> Self {
        Self { points, frame }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for p in &self.points {
            c = c + *p;
        }
        c / self.points.len() as f64
    }
}

/// Triangle mesh; the synthetic stand-in for CAD models.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates index bounds and rejects degenerate triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for tri in &self.triangles {
            for &i in tri {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
            }
            if self.triangle_area(tri) <= 1e-12 {
                return Err(Error::Degenerate("zero-area triangle"));
            }
        }
        Ok(())
    }

    pub fn triangle_area(&self, tri: &[usize; 3]) -> f64 {
        let [a, b, c] = *tri;
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (b - a).cross(c - a).norm() * 0.5
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// Minimum distance from `p` to any triangle of the mesh.
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                point_triangle_distance(p, self.vertices[a], self.vertices[b], self.vertices[c])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance from point `p` to triangle `(a, b, c)` (closest-point projection
/// onto face, edges, or vertices).
pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm();
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm()
}

/// Applies `p' = R p + t` to every point. The frame tag is preserved;
/// callers re-tag via [`PointCloud::with_frame`] when the transform is a
/// frame change.
pub fn pose_apply(pose: &RigidPose, cloud: &PointCloud) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let r = quat_to_matrix(pose.rotation);
    let points = cloud
        .points
        .iter()
        .map(|&p| r.apply(p) + pose.translation)
        .collect();
    Ok(PointCloud::new(points, cloud.frame))
}

/// Haar-uniform rotation (Shoemake's subgroup construction).
pub fn sample_uniform_rotation(rng: &mut Rng) -> Quaternion {
    let u1 = rng.next_f64();
    let u2 = rng.next_f64();
    let u3 = rng.next_f64();
    let (s1, c1) = (std::f64::consts::TAU * u2).sin_cos();
    let (s2, c2) = (std::f64::consts::TAU * u3).sin_cos();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    Quaternion { w: a * s1, x: a * c1, y: b * s2, z: b * c2 }
}

/// Per-axis uniform ranges for translation sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationRanges {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl TranslationRanges {
    /// Operating range of a typical depth camera: x,y in [-2, 2], z in [2, 5].
    pub const DEFAULT: TranslationRanges = TranslationRanges {
        x: (-2.0, 2.0),
        y: (-2.0, 2.0),
        z: (2.0, 5.0),
    };

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.x, self.y, self.z] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidRange { lo, hi });
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: Vec3) -> bool {
        t.x >= self.x.0
            && t.x <= self.x.1
            && t.y >= self.y.0
            && t.y <= self.y.1
            && t.z >= self.z.0
            && t.z <= self.z.1
    }
}

/// Uniform translation within `ranges`. Degenerate ranges (lo == hi) yield a
/// constant; inverted ranges are an error.
pub fn sample_translation(rng: &mut Rng, ranges: &TranslationRanges) -> Result<Vec3> {
    ranges.validate()?;
    Ok(Vec3::new(
        rng.uniform(ranges.x.0, ranges.x.1),
        rng.uniform(ranges.y.0, ranges.y.1),
        rng.uniform(ranges.z.0, ranges.z.1),
    ))
}

/// Centers the cloud on its centroid and scales the farthest point to norm 1.
/// Returns the normalized cloud plus `(centroid, scale)` so the transform is
/// invertible: `p = p_n * scale + centroid`.
pub fn normalize_unit_sphere(cloud: &PointCloud) -> Result<(PointCloud, Vec3, f64)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let centroid = cloud.centroid();
    let scale = cloud
        .points
        .iter()
        .map(|&p| (p - centroid).norm())
        .fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(Error::DegenerateScale);
    }
    let points = cloud.points.iter().map(|&p| (p - centroid) / scale).collect();
    Ok((PointCloud::new(points, Frame::Normalized), centroid, scale))
}

/// Area-weighted uniform surface sampling.
pub fn mesh_surface_sample(mesh: &TriangleMesh, n: usize, rng: &mut Rng) -> Result<PointCloud> {
    let total = mesh.total_area();
    if mesh.triangles.is_empty() || total <= 0.0 {
        return Err(Error::ZeroAreaMesh);
    }
    // Cumulative area table for triangle selection.
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut acc = 0.0;
    for tri in &mesh.triangles {
        acc += mesh.triangle_area(tri);
        cumulative.push(acc);
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.next_f64() * total;
        let ti = cumulative.partition_point(|&c| c < target).min(mesh.triangles.len() - 1);
        let [a, b, c] = mesh.triangles[ti];
        let (a, b, c) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        // Uniform barycentric point via square-root trick.
        let r1 = rng.next_f64().sqrt();
        let r2 = rng.next_f64();
        let p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
        points.push(p);
    }
    Ok(PointCloud::new(points, Frame::Canonical))
}

/// Greedy farthest-point subsampling, seeded at index 0 for reproducibility.
pub fn farthest_point_sample(cloud: &PointCloud, m: usize) -> Result<PointCloud> {
    let n = cloud.len();
    if m > n {
        return Err(Error::NotEnoughPoints { requested: m, available: n });
    }
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    let pts = &cloud.points;
    let mut selected = Vec::with_capacity(m);
    let mut min_dist = vec![f64::INFINITY; n];
    let mut current = 0usize;
    for _ in 0..m {
        selected.push(pts[current]);
        let cp = pts[current];
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, (&p, md)) in pts.iter().zip(min_dist.iter_mut()).enumerate() {
            let d = (p - cp).norm_squared();
            if d < *md {
                *md = d;
            }
            if *md > best_d {
                best_d = *md;
                best = i;
            }
        }
        current = best;
    }
    Ok(PointCloud::new(selected, cloud.frame))
}
