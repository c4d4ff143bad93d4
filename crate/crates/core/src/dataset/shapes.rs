//! Procedural shape corpus: eight parametric classes of watertight triangle
//! meshes standing in for CAD models. Every instance is centered on its
//! bounding-box center, scaled so the largest extent is 1, and built in a
//! fixed canonical orientation (z up).
//!
//! Each generator's true rotational symmetry group must EQUAL the symmetry
//! declared in [`SHAPE_CLASSES`], or pose supervision becomes contradictory:
//! a uniform cylinder, for instance, is also symmetric under a 180-degree
//! flip about any diameter, so two identical-looking clouds would carry
//! labels a half-turn apart. The revolution shapes therefore break the flip
//! (stepped boss, tapered bore, egg cross-section) and the box breaks its
//! top/bottom and 90-degree symmetries with chamfered top edges.

use crate::error::{Error, Result};
use crate::geom::{TriangleMesh, Vec3};
use crate::metrics::SymmetrySpec;
use crate::rng::Rng;

const Z_AXIS: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

/// Parametric generator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Box,
    Cylinder,
    Cone,
    LBracket,
    Wedge,
    Torus,
    Pyramid,
    Tube,
}

/// Shape class: generator plus the symmetry the evaluation metric honors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub name: &'static str,
    pub kind: ShapeKind,
    pub symmetry: SymmetrySpec,
}

/// The eight-class desk corpus. Symmetries: revolution shapes are continuous
/// about z, box and wedge are 2-fold, the pyramid 4-fold, the bracket none.
pub const SHAPE_CLASSES: [ShapeSpec; 8] = [
    ShapeSpec {
        name: "box",
        kind: ShapeKind::Box,
        symmetry: SymmetrySpec::DiscreteAxis { axis: Z_AXIS, order: 2 },
    },
    ShapeSpec {
        name: "cylinder",
        kind: ShapeKind::Cylinder,
        symmetry: SymmetrySpec::ContinuousAxis { axis: Z_AXIS },
    },
    ShapeSpec {
        name: "cone",
        kind: ShapeKind::Cone,
        symmetry: SymmetrySpec::ContinuousAxis { axis: Z_AXIS },
    },
    ShapeSpec { name: "l_bracket", kind: ShapeKind::LBracket, symmetry: SymmetrySpec::None },
    ShapeSpec {
        name: "wedge",
        kind: ShapeKind::Wedge,
        symmetry: SymmetrySpec::DiscreteAxis { axis: Z_AXIS, order: 2 },
    },
    ShapeSpec {
        name: "torus",
        kind: ShapeKind::Torus,
        symmetry: SymmetrySpec::ContinuousAxis { axis: Z_AXIS },
    },
    ShapeSpec {
        name: "pyramid",
        kind: ShapeKind::Pyramid,
        symmetry: SymmetrySpec::DiscreteAxis { axis: Z_AXIS, order: 4 },
    },
    ShapeSpec {
        name: "tube",
        kind: ShapeKind::Tube,
        symmetry: SymmetrySpec::ContinuousAxis { axis: Z_AXIS },
    },
];

pub const PARAM_RESAMPLE_LIMIT: usize = 10;

/// Draws instance parameters and builds the mesh, normalized to unit extent.
/// Parameter draws that land in a degenerate configuration are retried up to
/// [`PARAM_RESAMPLE_LIMIT`] times.
pub fn generate_instance(spec: &ShapeSpec, rng: &mut Rng) -> Result<TriangleMesh> {
    for _ in 0..PARAM_RESAMPLE_LIMIT {
        if let Some(mesh) = try_generate(spec.kind, rng)? {
            return Ok(normalize_extent(mesh));
        }
    }
    Err(Error::ShapeResampleExceeded(PARAM_RESAMPLE_LIMIT))
}

fn try_generate(kind: ShapeKind, rng: &mut Rng) -> Result<Option<TriangleMesh>> {
    let mesh = match kind {
        ShapeKind::Box => {
            let dx = rng.uniform(0.5, 1.0);
            let dy = rng.uniform(0.4, 1.0);
            let dz = rng.uniform(0.4, 1.0);
            // Chamfering the two top x-edges breaks the top/bottom flip and
            // any accidental 4-fold symmetry, leaving exactly the declared
            // 2-fold rotation about z.
            let chamfer = rng.uniform(0.2, 0.35) * dx.min(dz);
            make_box(dx, dy, dz, chamfer)
        }
        ShapeKind::Cylinder => {
            // A stepped boss on top keeps the revolution symmetry but kills
            // the diameter flip of a plain cylinder.
            let r = rng.uniform(0.3, 0.5);
            let boss_r = r * rng.uniform(0.45, 0.7);
            let h = rng.uniform(0.7, 1.4);
            let boss_frac = rng.uniform(0.2, 0.35);
            make_stepped_cylinder(r, boss_r, h, boss_frac, 32)
        }
        ShapeKind::Cone => {
            let r = rng.uniform(0.3, 0.55);
            let h = rng.uniform(0.7, 1.3);
            make_cone(r, h, 32)
        }
        ShapeKind::LBracket => {
            let leg_a = rng.uniform(0.7, 1.0);
            let leg_b = rng.uniform(0.45, 0.65);
            let thick = rng.uniform(0.15, 0.3);
            let depth = rng.uniform(0.3, 0.6);
            if thick >= leg_b - 0.05 {
                return Ok(None);
            }
            make_l_bracket(leg_a, leg_b, thick, depth)
        }
        ShapeKind::Wedge => {
            let half_base = rng.uniform(0.35, 0.6);
            let height = rng.uniform(0.4, 0.9);
            let depth = rng.uniform(0.5, 1.1);
            make_wedge(half_base, height, depth)
        }
        ShapeKind::Torus => {
            // Egg-shaped tube cross-section: still a surface of revolution,
            // no longer symmetric under flipping the ring over.
            let major = rng.uniform(0.36, 0.48);
            let minor = rng.uniform(0.12, 0.16);
            let egg = rng.uniform(0.7, 0.9);
            if minor * (1.0 + egg) >= major - 0.05 {
                return Ok(None);
            }
            make_egg_ring(major, minor, egg, 24, 12)
        }
        ShapeKind::Pyramid => {
            let half_base = rng.uniform(0.3, 0.55);
            let height = rng.uniform(0.5, 1.1);
            make_pyramid(half_base, height)
        }
        ShapeKind::Tube => {
            // Frustum pipe: the outer wall tapers toward the top (a flip cue
            // visible from every side), the bore stays a hole.
            let outer_bottom = rng.uniform(0.36, 0.5);
            let outer_top = outer_bottom * rng.uniform(0.65, 0.8);
            let wall = rng.uniform(0.08, 0.14);
            let h = rng.uniform(0.6, 1.3);
            if wall >= outer_top - 0.05 {
                return Ok(None);
            }
            make_tapered_tube(outer_bottom, outer_top, wall, h, 32)
        }
    }?;
    Ok(Some(mesh))
}

/// Bounding-box center to the origin, largest extent to 1.
pub fn normalize_extent(mesh: TriangleMesh) -> TriangleMesh {
    let (lo, hi) = mesh.bounds();
    let center = (lo + hi) * 0.5;
    let ext = hi - lo;
    let max_ext = ext.x.max(ext.y).max(ext.z);
    let vertices = mesh.vertices.iter().map(|&v| (v - center) / max_ext).collect();
    TriangleMesh { vertices, triangles: mesh.triangles }
}

/// Extrudes a counterclockwise (x, z) profile along y. `fan` is a
/// triangulation of the profile following its orientation; the profile must
/// be star-shaped from each fan apex.
fn extrude(profile: &[(f64, f64)], fan: &[[usize; 3]], depth: f64) -> Result<TriangleMesh> {
    let m = profile.len();
    let (yf, yb) = (depth / 2.0, -depth / 2.0);
    let mut v = Vec::with_capacity(2 * m);
    for &(x, z) in profile {
        v.push(Vec3::new(x, yf, z));
    }
    for &(x, z) in profile {
        v.push(Vec3::new(x, yb, z));
    }
    let mut t = Vec::new();
    for f in fan {
        t.push([f[0], f[2], f[1]]); // front face, +y outward
        t.push([f[0] + m, f[1] + m, f[2] + m]); // back face, -y outward
    }
    for i in 0..m {
        let j = (i + 1) % m;
        t.push([i, j, j + m]);
        t.push([i, j + m, i + m]);
    }
    TriangleMesh::new(v, t)
}

/// Surface of revolution of an open (r, z) profile running from a bottom
/// point on the axis (r = 0) along the outer surface to a top point on the
/// axis. Interior profile points must have r > 0.
fn lathe_open(profile: &[(f64, f64)], n: usize) -> Result<TriangleMesh> {
    assert!(profile.len() >= 3);
    assert!(profile[0].0 == 0.0 && profile[profile.len() - 1].0 == 0.0);
    let interior = &profile[1..profile.len() - 1];
    let rings = interior.len();
    let mut v = Vec::with_capacity(rings * n + 2);
    for &(r, z) in interior {
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            v.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let bottom_pole = v.len();
    v.push(Vec3::new(0.0, 0.0, profile[0].1));
    let top_pole = v.len();
    v.push(Vec3::new(0.0, 0.0, profile[profile.len() - 1].1));

    let mut t = Vec::new();
    let ring = |i: usize, k: usize| i * n + (k % n);
    for k in 0..n {
        t.push([bottom_pole, ring(0, k + 1), ring(0, k)]);
        t.push([top_pole, ring(rings - 1, k), ring(rings - 1, k + 1)]);
    }
    for i in 0..rings - 1 {
        for k in 0..n {
            // Profile-tangent cross azimuth orients these outward for any
            // bottom-to-top outer-surface traversal.
            t.push([ring(i, k), ring(i, k + 1), ring(i + 1, k)]);
            t.push([ring(i, k + 1), ring(i + 1, k + 1), ring(i + 1, k)]);
        }
    }
    TriangleMesh::new(v, t)
}

/// Surface of revolution of a closed (r, z) loop (all r > 0), traversed
/// counterclockwise in the half-plane. Genus 1.
fn lathe_closed(profile: &[(f64, f64)], n: usize) -> Result<TriangleMesh> {
    let m = profile.len();
    assert!(m >= 3);
    let mut v = Vec::with_capacity(m * n);
    for k in 0..n {
        let a = std::f64::consts::TAU * k as f64 / n as f64;
        let (ca, sa) = (a.cos(), a.sin());
        for &(r, z) in profile {
            v.push(Vec3::new(r * ca, r * sa, z));
        }
    }
    let at = |k: usize, i: usize| (k % n) * m + (i % m);
    let mut t = Vec::with_capacity(2 * m * n);
    for k in 0..n {
        for i in 0..m {
            let a = at(k, i);
            let b = at(k + 1, i);
            let c = at(k + 1, i + 1);
            let d = at(k, i + 1);
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    TriangleMesh::new(v, t)
}

fn make_box(dx: f64, dy: f64, dz: f64, chamfer: f64) -> Result<TriangleMesh> {
    let (hx, hz) = (dx / 2.0, dz / 2.0);
    let profile = [
        (-hx, -hz),
        (hx, -hz),
        (hx, hz - chamfer),
        (hx - chamfer, hz),
        (-hx + chamfer, hz),
        (-hx, hz - chamfer),
    ];
    let fan = [[0usize, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]];
    extrude(&profile, &fan, dy)
}

fn make_stepped_cylinder(
    r: f64,
    boss_r: f64,
    h: f64,
    boss_frac: f64,
    n: usize,
) -> Result<TriangleMesh> {
    let (zb, zt) = (-h / 2.0, h / 2.0);
    let z_step = zt - h * boss_frac;
    let profile = [
        (0.0, zb),
        (r, zb),
        (r, z_step),
        (boss_r, z_step),
        (boss_r, zt),
        (0.0, zt),
    ];
    lathe_open(&profile, n)
}

fn make_cone(r: f64, h: f64, n: usize) -> Result<TriangleMesh> {
    let (zb, zt) = (-h / 2.0, h / 2.0);
    lathe_open(&[(0.0, zb), (r, zb), (0.0, zt)], n)
}

fn make_l_bracket(leg_a: f64, leg_b: f64, thick: f64, depth: f64) -> Result<TriangleMesh> {
    // Vertex 3 is the reflex corner; the L is star-shaped from it, so the
    // fan triangulation from vertex 3 covers the profile.
    let profile = [
        (0.0, 0.0),
        (leg_a, 0.0),
        (leg_a, thick),
        (thick, thick),
        (thick, leg_b),
        (0.0, leg_b),
    ];
    let fan = [[3usize, 0, 1], [3, 1, 2], [3, 4, 5], [3, 5, 0]];
    extrude(&profile, &fan, depth)
}

fn make_wedge(half_base: f64, height: f64, depth: f64) -> Result<TriangleMesh> {
    let profile = [(-half_base, 0.0), (half_base, 0.0), (0.0, height)];
    extrude(&profile, &[[0, 1, 2]], depth)
}

fn make_egg_ring(
    major: f64,
    minor: f64,
    egg: f64,
    n_ring: usize,
    n_tube: usize,
) -> Result<TriangleMesh> {
    // Tube cross-section radius grows toward +z: m(b) = minor (1 + egg sin b).
    let profile: Vec<(f64, f64)> = (0..n_tube)
        .map(|j| {
            let b = std::f64::consts::TAU * j as f64 / n_tube as f64;
            let m = minor * (1.0 + egg * b.sin());
            (major + m * b.cos(), m * b.sin())
        })
        .collect();
    lathe_closed(&profile, n_ring)
}

fn make_tapered_tube(
    r_out_bottom: f64,
    r_out_top: f64,
    wall: f64,
    h: f64,
    n: usize,
) -> Result<TriangleMesh> {
    let (zb, zt) = (-h / 2.0, h / 2.0);
    // Counterclockwise in the (r, z) half-plane: outer wall up, top annulus
    // inward, bore down, bottom annulus outward.
    let profile = [
        (r_out_bottom, zb),
        (r_out_top, zt),
        (r_out_top - wall, zt),
        (r_out_bottom - wall, zb),
    ];
    lathe_closed(&profile, n)
}

fn make_pyramid(half_base: f64, height: f64) -> Result<TriangleMesh> {
    let (zb, zt) = (-height / 2.0, height / 2.0);
    let v = vec![
        Vec3::new(-half_base, -half_base, zb),
        Vec3::new(half_base, -half_base, zb),
        Vec3::new(half_base, half_base, zb),
        Vec3::new(-half_base, half_base, zb),
        Vec3::new(0.0, 0.0, zt),
    ];
    let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [0, 2, 1], [0, 3, 2]];
    TriangleMesh::new(v, t)
}


/// V - E + F over unique undirected edges; 2 for genus-0 meshes, 0 for the
/// torus and the tube.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let mut edges = std::collections::HashSet::new();
    for &[a, b, c] in &mesh.triangles {
        for (u, w) in [(a, b), (b, c), (c, a)] {
            edges.insert((u.min(w), u.max(w)));
        }
    }
    mesh.vertices.len() as i64 - edges.len() as i64 + mesh.triangles.len() as i64
}

/// Expected Euler characteristic per generator.
pub fn expected_euler(kind: ShapeKind) -> i64 {
    match kind {
        ShapeKind::Torus | ShapeKind::Tube => 0,
        _ => 2,
    }
}

/// Each undirected edge shared by exactly two triangles, with opposite
/// orientations: the closedness test backing "watertight".
pub fn is_watertight(mesh: &TriangleMesh) -> bool {
    let mut directed = std::collections::HashMap::new();
    for &[a, b, c] in &mesh.triangles {
        for (u, w) in [(a, b), (b, c), (c, a)] {
            *directed.entry((u, w)).or_insert(0usize) += 1;
        }
    }
    directed
        .iter()
        .all(|(&(u, w), &n)| n == 1 && directed.get(&(w, u)) == Some(&1))
}
