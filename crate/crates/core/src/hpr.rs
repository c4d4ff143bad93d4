//! Hidden point removal for fused clouds: flip points radially about the
//! viewpoint (Katz construction), take the convex hull of the flipped set
//! plus the viewpoint, and keep the points whose images are hull vertices.
//!
//! The hull is a floating-point quickhull. All tie-breaking (eye selection,
//! face scan order, splits) is by input index, so the output is reproducible
//! for a given input ordering.

use crate::error::{Error, Result};
use crate::geom::{PointCloud, Vec3};

/// Convex hull of a point set: vertex indices into the input, and outward-
/// oriented triangular faces.
#[derive(Debug, Clone)]
pub struct ConvexHull3 {
    pub vertices: Vec<usize>,
    pub faces: Vec<[usize; 3]>,
}

struct Face {
    verts: [usize; 3],
    normal: Vec3, // unit, outward
    offset: f64,  // plane: normal . x = offset
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn dist(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

fn make_face(points: &[Vec3], verts: [usize; 3]) -> Result<Face> {
    let (a, b, c) = (points[verts[0]], points[verts[1]], points[verts[2]]);
    let n = (b - a).cross(c - a);
    let len = n.norm();
    if len < 1e-300 {
        return Err(Error::Degenerate("zero-area hull face"));
    }
    let normal = n / len;
    Ok(Face { verts, normal, offset: normal.dot(a), outside: Vec::new(), alive: true })
}

/// Quickhull. Requires at least 4 points not all coplanar; collinear or
/// coplanar input is an error. Interior and face-coplanar points are absorbed,
/// so the vertex set is minimal.
pub fn convex_hull_3d(points: &[Vec3]) -> Result<ConvexHull3> {
    let n = points.len();
    if n < 4 {
        return Err(Error::Degenerate("convex hull needs at least 4 points"));
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for &p in points {
        if !p.is_finite() {
            return Err(Error::NonFinite("hull input"));
        }
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let diameter = (hi - lo).norm();
    if diameter <= 0.0 {
        return Err(Error::Degenerate("all hull input points coincide"));
    }
    let eps = 1e-10 * diameter;

    // --- Initial simplex ---------------------------------------------------
    let i0 = (0..n)
        .min_by(|&a, &b| {
            (points[a].x, points[a].y, points[a].z)
                .partial_cmp(&(points[b].x, points[b].y, points[b].z))
                .unwrap()
                .then(a.cmp(&b))
        })
        .unwrap();
    let i1 = argmax_by(n, i0, |i| (points[i] - points[i0]).norm());
    if (points[i1] - points[i0]).norm() <= eps {
        return Err(Error::Degenerate("hull input points coincide"));
    }
    let dir = points[i1] - points[i0];
    let i2 = argmax_by(n, i0, |i| (points[i] - points[i0]).cross(dir).norm());
    if (points[i2] - points[i0]).cross(dir).norm() / dir.norm() <= eps {
        return Err(Error::Degenerate("hull input is collinear"));
    }
    let plane_n = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
    let i3 = argmax_by(n, i0, |i| (plane_n.dot(points[i] - points[i0])).abs());
    if plane_n.dot(points[i3] - points[i0]).abs() <= eps {
        return Err(Error::Degenerate("hull input is coplanar"));
    }

    // Orient the four faces of the simplex away from the opposite vertex.
    let simplex = [i0, i1, i2, i3];
    let mut faces: Vec<Face> = Vec::new();
    for f in 0..4 {
        let opposite = simplex[f];
        let mut verts = [0usize; 3];
        let mut k = 0;
        for &v in &simplex {
            if v != opposite {
                verts[k] = v;
                k += 1;
            }
        }
        let mut face = make_face(points, verts)?;
        if face.dist(points[opposite]) > 0.0 {
            face.verts.swap(1, 2);
            face = make_face(points, face.verts)?;
        }
        faces.push(face);
    }

    // Assign every point to the first face it is strictly outside of.
    for i in 0..n {
        if simplex.contains(&i) {
            continue;
        }
        for face in faces.iter_mut() {
            if face.dist(points[i]) > eps {
                face.outside.push(i);
                break;
            }
        }
    }

    // --- Refinement loop ---------------------------------------------------
    loop {
        let Some(fi) = faces.iter().position(|f| f.alive && !f.outside.is_empty()) else {
            break;
        };
        // Farthest conflict point; ties go to the lowest index.
        let eye = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                faces[fi]
                    .dist(points[a])
                    .total_cmp(&faces[fi].dist(points[b]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        let eye_p = points[eye];

        // All faces the eye can see.
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&k| faces[k].alive && faces[k].dist(eye_p) > eps)
            .collect();
        debug_assert!(visible.contains(&fi));

        // Horizon: directed edges of visible faces whose reverse is not also
        // in the visible set.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &k in &visible {
            let [a, b, c] = faces[k].verts;
            edges.push((a, b));
            edges.push((b, c));
            edges.push((c, a));
        }
        let edge_set: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
        let horizon: Vec<(usize, usize)> =
            edges.into_iter().filter(|&(a, b)| !edge_set.contains(&(b, a))).collect();

        // Collect orphaned conflict points and retire the visible faces.
        let mut orphans: Vec<usize> = Vec::new();
        for &k in &visible {
            faces[k].alive = false;
            orphans.append(&mut faces[k].outside);
        }
        orphans.sort_unstable();
        orphans.dedup();

        let new_start = faces.len();
        for (a, b) in horizon {
            let mut face = make_face(points, [a, b, eye])?;
            for &i in &orphans {
                if i != eye && face.dist(points[i]) > eps {
                    face.outside.push(i);
                }
            }
            faces.push(face);
        }
        // Points outside several new faces were pushed to each; keep only the
        // first assignment to preserve the one-face-owns-one-point invariant.
        let mut claimed: std::collections::HashSet<usize> = std::collections::HashSet::new();
        for face in faces[new_start..].iter_mut() {
            face.outside.retain(|&i| claimed.insert(i));
        }
    }

    let mut hull_faces = Vec::new();
    let mut vertices = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        hull_faces.push(f.verts);
        vertices.extend_from_slice(&f.verts);
    }
    vertices.sort_unstable();
    vertices.dedup();
    Ok(ConvexHull3 { vertices, faces: hull_faces })
}

fn argmax_by(n: usize, skip_hint: usize, score: impl Fn(usize) -> f64) -> usize {
    let mut best = if skip_hint == 0 { 1 } else { 0 };
    let mut best_s = score(best);
    for i in 0..n {
        let s = score(i);
        if s > best_s {
            best = i;
            best_s = s;
        }
    }
    best
}

impl ConvexHull3 {
    /// Max signed distance of any point to its outermost face plane, relative
    /// to the hull diameter. Tests assert this stays below 1e-9.
    pub fn max_violation(&self, points: &[Vec3]) -> f64 {
        let mut lo = points[0];
        let mut hi = points[0];
        for &p in points {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let diameter = (hi - lo).norm();
        let mut worst: f64 = 0.0;
        for &[a, b, c] in &self.faces {
            let n = (points[b] - points[a]).cross(points[c] - points[a]).normalized();
            let off = n.dot(points[a]);
            for &p in points {
                worst = worst.max(n.dot(p) - off);
            }
        }
        worst / diameter
    }
}

/// Katz spherical flip about `viewpoint`: with `p~ = p - viewpoint` and
/// `R = max |p~| * 10^gamma`, each point maps to `p~ + 2 (R - |p~|) p~ / |p~|`.
/// Output points are in the viewpoint-centered frame.
pub fn spherical_flip(cloud: &PointCloud, viewpoint: Vec3, gamma: f64) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(gamma > 0.0) {
        return Err(Error::Degenerate("flip exponent gamma must be positive"));
    }
    let centered: Vec<Vec3> = cloud.points.iter().map(|&p| p - viewpoint).collect();
    let norms: Vec<f64> = centered.iter().map(|p| p.norm()).collect();
    if norms.iter().any(|&r| r == 0.0) {
        return Err(Error::Degenerate("viewpoint coincides with a point"));
    }
    let radius = norms.iter().fold(0.0f64, |a, &b| a.max(b)) * 10f64.powf(gamma);
    let points = centered
        .iter()
        .zip(&norms)
        .map(|(&p, &r)| p * (2.0 * radius / r - 1.0))
        .collect();
    Ok(PointCloud::new(points, cloud.frame))
}

/// Visibility mask from `viewpoint`: true where the flipped image of the
/// point is a vertex of the convex hull of the flipped set plus the
/// viewpoint. Needs at least 4 points.
pub fn hidden_point_removal(cloud: &PointCloud, viewpoint: Vec3, gamma: f64) -> Result<Vec<bool>> {
    if cloud.len() < 4 {
        return Err(Error::NotEnoughPoints { requested: 4, available: cloud.len() });
    }
    let flipped = spherical_flip(cloud, viewpoint, gamma)?;
    let mut pts = flipped.points;
    pts.push(Vec3::ZERO); // the viewpoint itself
    let hull = convex_hull_3d(&pts)?;
    let mut mask = vec![false; cloud.len()];
    for &v in &hull.vertices {
        if v < cloud.len() {
            mask[v] = true;
        }
    }
    Ok(mask)
}

/// Applies a visibility mask, preserving input order and frame.
pub fn visible_subset(cloud: &PointCloud, mask: &[bool]) -> PointCloud {
    let points = cloud
        .points
        .iter()
        .zip(mask)
        .filter_map(|(&p, &keep)| keep.then_some(p))
        .collect();
    PointCloud::new(points, cloud.frame)
}
