//! Single-view depth rendering of a posed mesh through a pinhole camera, and
//! back-projection of the depth image to a camera-frame partial cloud.
//!
//! The camera sits at the origin looking down +z. The ray for pixel `(u, v)`
//! is `((u - cx)/fx, (v - cy)/fy, 1)`, which makes [`backproject`] the exact
//! inverse of rendering: a hit at parameter `t` has z-depth `t`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{
    pose_inverse, quat_to_matrix, sample_uniform_rotation, sample_translation, Frame, PointCloud,
    RigidPose, TranslationRanges, TriangleMesh, Vec3,
};
use crate::rng::Rng;

/// Pinhole intrinsics. Focal lengths and principal point in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl PinholeCamera {
    /// Sized for the default sampling volume: the 90-degree field of view
    /// keeps lateral offsets up to +-2 m on screen from z = 2 m, and a unit
    /// object at z = 5 m still covers ~51 px (over 1024 visible points for
    /// all but the slimmest silhouettes, which the view resampler rejects).
    pub const DEFAULT: PinholeCamera = PinholeCamera {
        fx: 256.0,
        fy: 256.0,
        cx: 256.0,
        cy: 256.0,
        width: 512,
        height: 512,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Degenerate("non-positive focal length"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64)
            || !(self.cy >= 0.0 && self.cy < self.height as f64)
        {
            return Err(Error::Degenerate("principal point outside image"));
        }
        Ok(())
    }

    /// Unnormalized ray direction for pixel `(u, v)`; z component is 1 so the
    /// ray parameter equals z-depth.
    pub fn ray_dir(&self, u: usize, v: usize) -> Vec3 {
        Vec3::new(
            (u as f64 - self.cx) / self.fx,
            (v as f64 - self.cy) / self.fy,
            1.0,
        )
    }
}

/// Row-major z-depth grid in meters. 0 marks pixels with no hit.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl DepthImage {
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.depth[v * self.width + u]
    }

    pub fn hit_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }

    /// 16-bit PGM, millimeter quantization, for eyeballing renders.
    pub fn write_pgm(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &d in &self.depth {
            let mm = (d * 1000.0).round().clamp(0.0, 65535.0) as u16;
            buf.extend_from_slice(&mm.to_be_bytes());
        }
        std::fs::write(path, buf)?;
        Ok(())
    }
}

const BARY_SLACK: f64 = 1e-12;
const MIN_T: f64 = 1e-12;

/// Moller-Trumbore. Returns the smallest positive ray parameter, or `None`.
/// Edge hits count as hits (inclusive barycentric bounds with 1e-12 slack).
pub fn ray_triangle_intersect(origin: Vec3, dir: Vec3, tri: [Vec3; 3]) -> Option<f64> {
    let [a, b, c] = tri;
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-14 {
        return None; // parallel or degenerate
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(pvec) * inv_det;
    if u < -BARY_SLACK || u > 1.0 + BARY_SLACK {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    if v < -BARY_SLACK || u + v > 1.0 + BARY_SLACK {
        return None;
    }
    let t = e2.dot(qvec) * inv_det;
    (t > MIN_T).then_some(t)
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            hi: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow_point(&mut self, p: Vec3) {
        self.lo = self.lo.min(p);
        self.hi = self.hi.max(p);
    }

    fn grow(&mut self, o: &Aabb) {
        self.lo = self.lo.min(o.lo);
        self.hi = self.hi.max(o.hi);
    }

    fn contains(&self, o: &Aabb) -> bool {
        self.lo.x <= o.lo.x
            && self.lo.y <= o.lo.y
            && self.lo.z <= o.lo.z
            && self.hi.x >= o.hi.x
            && self.hi.y >= o.hi.y
            && self.hi.z >= o.hi.z
    }

    /// Slab test against `[0, t_max]`.
    fn hit(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for axis in 0..3 {
            let (lo, hi, o, inv) = match axis {
                0 => (self.lo.x, self.hi.x, origin.x, inv_dir.x),
                1 => (self.lo.y, self.hi.y, origin.y, inv_dir.y),
                _ => (self.lo.z, self.hi.z, origin.z, inv_dir.z),
            };
            let mut ta = (lo - o) * inv;
            let mut tb = (hi - o) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            // NaN from 0 * inf falls out of max/min, i.e. no constraint.
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
struct BvhNode {
    aabb: Aabb,
    /// Leaf: index of the first triangle in `order`. Internal: left child
    /// index (right child is `index + 1`... see `right`).
    index: usize,
    /// Leaf: triangle count. Internal: 0.
    len: usize,
    /// Internal nodes only: right child (left child is `index`).
    right: usize,
}

/// Axis-aligned bounding-box tree over a mesh's triangles (median split on
/// the widest centroid axis, leaves hold at most 4 triangles).
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    /// Triangle vertex positions, reordered for leaf locality.
    tris: Vec<[Vec3; 3]>,
    /// Original triangle index per entry of `tris`.
    order: Vec<usize>,
}

/// Nearest intersection along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Ray parameter (z-depth when the direction has unit z).
    pub t: f64,
    /// Triangle index in the original mesh.
    pub triangle: usize,
}

pub const BVH_LEAF_SIZE: usize = 4;

pub fn build_bvh(mesh: &TriangleMesh) -> Result<Bvh> {
    if mesh.triangles.is_empty() {
        return Err(Error::ZeroAreaMesh);
    }
    let tris: Vec<[Vec3; 3]> = mesh
        .triangles
        .iter()
        .map(|&[a, b, c]| [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]])
        .collect();
    let centroids: Vec<Vec3> = tris
        .iter()
        .map(|t| (t[0] + t[1] + t[2]) / 3.0)
        .collect();
    let mut order: Vec<usize> = (0..tris.len()).collect();
    let mut nodes = Vec::with_capacity(2 * tris.len());
    build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
    let reordered = order.iter().map(|&i| tris[i]).collect();
    Ok(Bvh { nodes, tris: reordered, order })
}

fn tri_aabb(t: &[Vec3; 3]) -> Aabb {
    let mut b = Aabb::empty();
    for &v in t {
        b.grow_point(v);
    }
    b
}

fn build_node(
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    len: usize,
    nodes: &mut Vec<BvhNode>,
) -> usize {
    let mut aabb = Aabb::empty();
    for &i in &order[start..start + len] {
        aabb.grow(&tri_aabb(&tris[i]));
    }
    let node_idx = nodes.len();
    nodes.push(BvhNode { aabb, index: start, len, right: 0 });
    if len <= BVH_LEAF_SIZE {
        return node_idx;
    }

    // Split at the median along the widest centroid axis.
    let mut cb = Aabb::empty();
    for &i in &order[start..start + len] {
        cb.grow_point(centroids[i]);
    }
    let ext = cb.hi - cb.lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let slice = &mut order[start..start + len];
    slice.sort_unstable_by(|&a, &b| {
        centroids[a]
            .axis(axis)
            .total_cmp(&centroids[b].axis(axis))
            .then(a.cmp(&b))
    });
    let half = len / 2;

    let left = build_node(tris, centroids, order, start, half, nodes);
    let right = build_node(tris, centroids, order, start + half, len - half, nodes);
    nodes[node_idx].index = left;
    nodes[node_idx].len = 0;
    nodes[node_idx].right = right;
    node_idx
}

impl Bvh {
    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Nearest hit along `origin + t * dir`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<RayHit> {
        self.intersect_counted(origin, dir).0
    }

    /// Like [`Bvh::intersect`], also reporting how many triangle tests the
    /// traversal performed (for comparing against brute force).
    pub fn intersect_counted(&self, origin: Vec3, dir: Vec3) -> (Option<RayHit>, usize) {
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut t_max = f64::INFINITY;
        let mut tested = 0usize;
        let mut stack = [0usize; 64];
        let mut sp = 0;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp]];
            if !node.aabb.hit(origin, inv_dir, t_max) {
                continue;
            }
            if node.len > 0 {
                for k in node.index..node.index + node.len {
                    tested += 1;
                    if let Some(t) = ray_triangle_intersect(origin, dir, self.tris[k]) {
                        if t < t_max {
                            t_max = t;
                            best = Some(RayHit { t, triangle: self.order[k] });
                        }
                    }
                }
            } else {
                stack[sp] = node.index;
                stack[sp + 1] = node.right;
                sp += 2;
            }
        }
        (best, tested)
    }

    /// Bounds of the whole triangle set.
    pub fn root_bounds(&self) -> (Vec3, Vec3) {
        (self.nodes[0].aabb.lo, self.nodes[0].aabb.hi)
    }

    /// Internal-node boxes contain their children (structural check used by
    /// tests).
    pub fn boxes_nested(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.len > 0
                || (n.aabb.contains(&self.nodes[n.index].aabb)
                    && n.aabb.contains(&self.nodes[n.right].aabb))
        })
    }

    /// Every input triangle referenced exactly once.
    pub fn covers_all_triangles(&self) -> bool {
        let mut seen = vec![false; self.order.len()];
        for &i in &self.order {
            if seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.iter().all(|&s| s)
    }
}

/// Renders the mesh at `pose` through `cam`, building a throwaway BVH.
pub fn render_depth(mesh: &TriangleMesh, pose: &RigidPose, cam: &PinholeCamera) -> Result<DepthImage> {
    let bvh = build_bvh(mesh)?;
    render_depth_bvh(&bvh, pose, cam)
}

/// Renders with a prebuilt canonical-frame BVH. Rays are transformed into the
/// mesh frame instead of re-posing triangles; the ray parameter (z-depth) is
/// unchanged by the rigid transform.
///
/// Only pixels inside the projected bounds of the posed mesh are cast. The
/// projection of a convex body with every corner in front of the camera is
/// contained in the convex hull of its projected corners, so skipped pixels
/// provably cannot hit.
pub fn render_depth_bvh(bvh: &Bvh, pose: &RigidPose, cam: &PinholeCamera) -> Result<DepthImage> {
    cam.validate()?;
    let inv = pose_inverse(pose);
    let rinv = quat_to_matrix(inv.rotation);
    let origin = inv.translation; // camera center in mesh frame

    let (u0, u1, v0, v1) = match projected_roi(bvh, pose, cam) {
        Some(roi) => roi,
        None => return Err(Error::NoVisiblePixels),
    };

    let mut depth = vec![0.0; cam.width * cam.height];
    let rows: Vec<(usize, Vec<f64>)> = (v0..v1)
        .into_par_iter()
        .map(|v| {
            let row: Vec<f64> = (u0..u1)
                .map(|u| {
                    let dir = rinv.apply(cam.ray_dir(u, v));
                    bvh.intersect(origin, dir).map_or(0.0, |h| h.t)
                })
                .collect();
            (v, row)
        })
        .collect();
    for (v, row) in rows {
        depth[v * cam.width + u0..v * cam.width + u1].copy_from_slice(&row);
    }

    let img = DepthImage { width: cam.width, height: cam.height, depth };
    if img.hit_count() == 0 {
        return Err(Error::NoVisiblePixels);
    }
    Ok(img)
}

/// Pixel bounds `(u0, u1, v0, v1)` that conservatively cover the posed mesh,
/// or `None` when the mesh is entirely behind the camera or off screen. Any
/// bounding-box corner at z <= 0 falls back to the full frame.
fn projected_roi(
    bvh: &Bvh,
    pose: &RigidPose,
    cam: &PinholeCamera,
) -> Option<(usize, usize, usize, usize)> {
    let (lo, hi) = bvh.root_bounds();
    let r = quat_to_matrix(pose.rotation);
    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    let corners: Vec<Vec3> = (0..8)
        .map(|corner| {
            let p = Vec3::new(
                if corner & 1 == 0 { lo.x } else { hi.x },
                if corner & 2 == 0 { lo.y } else { hi.y },
                if corner & 4 == 0 { lo.z } else { hi.z },
            );
            r.apply(p) + pose.translation
        })
        .collect();
    if corners.iter().all(|c| c.z <= 0.0) {
        return None;
    }
    for c in &corners {
        if c.z <= 1e-9 {
            // A corner at or behind the image plane breaks the convexity
            // argument; search the whole frame.
            return Some((0, cam.width, 0, cam.height));
        }
        u_min = u_min.min(cam.cx + cam.fx * c.x / c.z);
        u_max = u_max.max(cam.cx + cam.fx * c.x / c.z);
        v_min = v_min.min(cam.cy + cam.fy * c.y / c.z);
        v_max = v_max.max(cam.cy + cam.fy * c.y / c.z);
    }
    let u0 = (u_min.floor() as isize - 1).clamp(0, cam.width as isize) as usize;
    let u1 = (u_max.ceil() as isize + 2).clamp(0, cam.width as isize) as usize;
    let v0 = (v_min.floor() as isize - 1).clamp(0, cam.height as isize) as usize;
    let v1 = (v_max.ceil() as isize + 2).clamp(0, cam.height as isize) as usize;
    if u0 >= u1 || v0 >= v1 {
        return None;
    }
    Some((u0, u1, v0, v1))
}

/// Back-projects nonzero depth pixels: `(u, v, d)` maps to
/// `((u - cx) d / fx, (v - cy) d / fy, d)` in the camera frame. Points come
/// out in row-major pixel order.
pub fn backproject(depth: &DepthImage, cam: &PinholeCamera) -> Result<PointCloud> {
    let mut points = Vec::new();
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.at(u, v);
            if d > 0.0 {
                points.push(Vec3::new(
                    (u as f64 - cam.cx) * d / cam.fx,
                    (v as f64 - cam.cy) * d / cam.fy,
                    d,
                ));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(PointCloud::new(points, Frame::Camera))
}

pub const VIEW_RESAMPLE_LIMIT: usize = 100;

/// Renders a single partial view with at least `n` visible points, then
/// subsamples to exactly `n` (uniform, without replacement). Starts from
/// `pose`; views with too few visible points redraw the pose (Haar rotation,
/// translation from `ranges`) up to [`VIEW_RESAMPLE_LIMIT`] attempts.
/// Returns the cloud and the pose actually used.
pub fn render_partial_view(
    bvh: &Bvh,
    pose: RigidPose,
    cam: &PinholeCamera,
    n: usize,
    rng: &mut Rng,
    ranges: &TranslationRanges,
) -> Result<(PointCloud, RigidPose)> {
    let mut candidate = pose;
    for _ in 0..VIEW_RESAMPLE_LIMIT {
        let visible = match render_depth_bvh(bvh, &candidate, cam) {
            Ok(img) => backproject(&img, cam)?,
            Err(Error::NoVisiblePixels) => {
                candidate = resample_pose(rng, ranges)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        if visible.len() < n {
            candidate = resample_pose(rng, ranges)?;
            continue;
        }
        let idx = rng.sample_indices(visible.len(), n);
        let points = idx.iter().map(|&i| visible.points[i]).collect();
        return Ok((PointCloud::new(points, Frame::Camera), candidate));
    }
    Err(Error::ViewResampleExceeded(VIEW_RESAMPLE_LIMIT))
}

fn resample_pose(rng: &mut Rng, ranges: &TranslationRanges) -> Result<RigidPose> {
    let rotation = sample_uniform_rotation(rng).hemisphere_canonical();
    let translation = sample_translation(rng, ranges)?;
    Ok(RigidPose::new(rotation, translation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Quaternion;

    fn unit_square_at(z: f64) -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(-0.5, -0.5, z),
                Vec3::new(0.5, -0.5, z),
                Vec3::new(0.5, 0.5, z),
                Vec3::new(-0.5, 0.5, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn ray_hits_axis_triangle_at_two() {
        let tri = [
            Vec3::new(-1.0, -1.0, 2.0),
            Vec3::new(1.0, -1.0, 2.0),
            Vec3::new(0.0, 1.0, 2.0),
        ];
        let t = ray_triangle_intersect(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), tri).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_ray_misses() {
        let tri = [
            Vec3::new(-1.0, -1.0, 2.0),
            Vec3::new(1.0, -1.0, 2.0),
            Vec3::new(0.0, 1.0, 2.0),
        ];
        assert!(ray_triangle_intersect(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), tri).is_none());
    }

    #[test]
    fn edge_hit_counts_as_hit() {
        let tri = [
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
        ];
        // Straight through the vertex at the origin-facing corner.
        assert!(ray_triangle_intersect(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), tri).is_some());
    }

    #[test]
    fn single_triangle_bvh_is_one_leaf() {
        let mesh = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let bvh = build_bvh(&mesh).unwrap();
        assert_eq!(bvh.nodes.len(), 1);
        assert_eq!(bvh.nodes[0].len, 1);
        assert!(bvh.covers_all_triangles());
    }

    #[test]
    fn bvh_structure_is_nested_and_complete() {
        let mut rng = Rng::new(8);
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for k in 0..200 {
            let base = Vec3::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(1.0, 4.0));
            verts.push(base);
            verts.push(base + Vec3::new(0.1, 0.0, 0.02));
            verts.push(base + Vec3::new(0.0, 0.1, 0.01));
            tris.push([3 * k, 3 * k + 1, 3 * k + 2]);
        }
        let mesh = TriangleMesh::new(verts, tris).unwrap();
        let bvh = build_bvh(&mesh).unwrap();
        assert!(bvh.boxes_nested());
        assert!(bvh.covers_all_triangles());
    }

    #[test]
    fn center_pixel_depth_matches_plane_distance() {
        let mesh = unit_square_at(3.0);
        let cam = PinholeCamera { fx: 100.0, fy: 100.0, cx: 32.0, cy: 32.0, width: 64, height: 64 };
        let img = render_depth(&mesh, &RigidPose::IDENTITY, &cam).unwrap();
        assert!((img.at(32, 32) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_behind_camera_is_an_error() {
        let mesh = unit_square_at(-3.0);
        let cam = PinholeCamera::DEFAULT;
        assert!(matches!(
            render_depth(&mesh, &RigidPose::IDENTITY, &cam),
            Err(Error::NoVisiblePixels)
        ));
    }

    #[test]
    fn backproject_principal_point() {
        let cam = PinholeCamera { fx: 100.0, fy: 100.0, cx: 32.0, cy: 32.0, width: 64, height: 64 };
        let mut depth = vec![0.0; 64 * 64];
        depth[32 * 64 + 32] = 3.0;
        let img = DepthImage { width: 64, height: 64, depth };
        let cloud = backproject(&img, &cam).unwrap();
        assert_eq!(cloud.len(), 1);
        assert!((cloud.points[0] - Vec3::new(0.0, 0.0, 3.0)).norm() < 1e-15);
        assert_eq!(cloud.frame, Frame::Camera);
    }

    #[test]
    fn backproject_count_matches_nonzero_pixels() {
        let mesh = unit_square_at(2.5);
        let cam = PinholeCamera::DEFAULT;
        let img = render_depth(&mesh, &RigidPose::IDENTITY, &cam).unwrap();
        let cloud = backproject(&img, &cam).unwrap();
        assert_eq!(cloud.len(), img.hit_count());
    }

    #[test]
    fn rendered_plane_backprojects_onto_plane() {
        let mesh = unit_square_at(3.0);
        let cam = PinholeCamera::DEFAULT;
        let img = render_depth(&mesh, &RigidPose::IDENTITY, &cam).unwrap();
        let cloud = backproject(&img, &cam).unwrap();
        for p in &cloud.points {
            assert!((p.z - 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn depth_invariant_to_triangle_order() {
        let mesh = unit_square_at(3.0);
        let mut flipped = mesh.clone();
        flipped.triangles.reverse();
        let cam = PinholeCamera::DEFAULT;
        let a = render_depth(&mesh, &RigidPose::IDENTITY, &cam).unwrap();
        let b = render_depth(&flipped, &RigidPose::IDENTITY, &cam).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partial_view_resamples_when_too_few_points() {
        let mesh = unit_square_at(0.0);
        let bvh = build_bvh(&mesh).unwrap();
        let cam = PinholeCamera::DEFAULT;
        // Start far off to the side: zero visible pixels forces resampling.
        let bad_pose = RigidPose::new(Quaternion::IDENTITY, Vec3::new(50.0, 0.0, 3.0));
        let mut rng = Rng::new(3);
        let (cloud, pose) =
            render_partial_view(&bvh, bad_pose, &cam, 64, &mut rng, &TranslationRanges::DEFAULT)
                .unwrap();
        assert_eq!(cloud.len(), 64);
        assert_ne!(pose, bad_pose);
    }

    #[test]
    fn partial_view_is_deterministic_for_same_seed() {
        let mesh = unit_square_at(0.0);
        let bvh = build_bvh(&mesh).unwrap();
        let cam = PinholeCamera::DEFAULT;
        let pose = RigidPose::new(Quaternion::IDENTITY, Vec3::new(0.0, 0.0, 3.0));
        let a = render_partial_view(&bvh, pose, &cam, 128, &mut Rng::new(9), &TranslationRanges::DEFAULT)
            .unwrap();
        let b = render_partial_view(&bvh, pose, &cam, 128, &mut Rng::new(9), &TranslationRanges::DEFAULT)
            .unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn pgm_write_has_expected_header_and_size() {
        let img = DepthImage { width: 4, height: 2, depth: vec![0.0, 1.0, 2.0, 3.0, 0.5, 0.25, 0.125, 65.0] };
        let dir = std::env::temp_dir().join("ppc_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.pgm");
        img.write_pgm(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n4 2\n65535\n"));
        assert_eq!(bytes.len(), b"P5\n4 2\n65535\n".len() + 2 * 8);
        std::fs::remove_dir_all(&dir).ok();
    }
}
