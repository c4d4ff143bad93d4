//! Shared helpers for the oracle test suites. Everything here is written
//! independently of the library's rendering path: plane intersection plus
//! barycentric containment instead of Moller-Trumbore, and a straight scan
//! over all triangles instead of the BVH.

use ppc_core::geom::{TriangleMesh, Vec3};

/// Plane-intersection + barycentric-test ray/triangle oracle. Returns the
/// positive ray parameter of the hit, if any.
pub fn oracle_ray_triangle(o: Vec3, d: Vec3, tri: [Vec3; 3]) -> Option<f64> {
    let [a, b, c] = tri;
    let n = (b - a).cross(c - a);
    let denom = n.dot(d);
    if denom.abs() < 1e-14 {
        return None;
    }
    let t = n.dot(a - o) / denom;
    if t <= 1e-12 {
        return None;
    }
    let p = o + d * t;
    let (u, v, w) = barycentric(p, a, b, c)?;
    let eps = 1e-12;
    (u >= -eps && v >= -eps && w >= -eps).then_some(t)
}

/// Barycentric coordinates of `p` with respect to the triangle plane.
pub fn barycentric(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<(f64, f64, f64)> {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(v0);
    let d01 = v0.dot(v1);
    let d11 = v1.dot(v1);
    let d20 = v2.dot(v0);
    let d21 = v2.dot(v1);
    let denom = d00 * d11 - d01 * d01;
    if denom.abs() < 1e-300 {
        return None;
    }
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    Some((1.0 - v - w, v, w))
}

/// Nearest hit by scanning every triangle.
pub fn oracle_ray_mesh(o: Vec3, d: Vec3, mesh: &TriangleMesh) -> Option<f64> {
    mesh.triangles
        .iter()
        .filter_map(|&[a, b, c]| {
            oracle_ray_triangle(o, d, [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]])
        })
        .min_by(f64::total_cmp)
}

/// UV sphere of the given radius: `lon` segments, `rings` latitude rings
/// between the poles. Triangle count is `2 * lon * rings`.
pub fn uv_sphere(radius: f64, lon: usize, rings: usize) -> TriangleMesh {
    let mut v = vec![Vec3::new(0.0, 0.0, radius)];
    for r in 1..=rings {
        let colat = std::f64::consts::PI * r as f64 / (rings + 1) as f64;
        let (s, c) = colat.sin_cos();
        for l in 0..lon {
            let az = std::f64::consts::TAU * l as f64 / lon as f64;
            v.push(Vec3::new(radius * s * az.cos(), radius * s * az.sin(), radius * c));
        }
    }
    v.push(Vec3::new(0.0, 0.0, -radius));
    let south = v.len() - 1;
    let idx = |r: usize, l: usize| 1 + (r - 1) * lon + (l % lon);

    let mut t = Vec::new();
    for l in 0..lon {
        t.push([0, idx(1, l), idx(1, l + 1)]);
        t.push([south, idx(rings, l + 1), idx(rings, l)]);
    }
    for r in 1..rings {
        for l in 0..lon {
            let (a, b, c, d) = (idx(r, l), idx(r, l + 1), idx(r + 1, l + 1), idx(r + 1, l));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    TriangleMesh::new(v, t).unwrap()
}
