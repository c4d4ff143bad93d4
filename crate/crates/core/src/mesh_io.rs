//! Mesh loading: OFF and OBJ, triangles only (quads and larger polygons are
//! fan-triangulated).

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{TriangleMesh, Vec3};

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("off") | Some("OFF") => parse_off(&text),
        Some("obj") | Some("OBJ") => parse_obj(&text),
        other => Err(Error::Parse {
            what: "mesh file",
            detail: format!("unsupported extension {:?} (expected .off or .obj)", other),
        }),
    }
}

fn parse_err(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Parse { what, detail: detail.into() }
}

pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .peekable();

    // Header keyword is optional in some OFF writers; counts may share its line.
    if tokens.peek() == Some(&"OFF") {
        tokens.next();
    }
    let mut next_usize = |what: &'static str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| parse_err("off", format!("missing {what}")))?
            .parse()
            .map_err(|e| parse_err("off", format!("bad {what}: {e}")))
    };
    let nv = next_usize("vertex count")?;
    let nf = next_usize("face count")?;
    let _ne = next_usize("edge count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            *c = tokens
                .next()
                .ok_or_else(|| parse_err("off", "truncated vertex list"))?
                .parse()
                .map_err(|e| parse_err("off", format!("bad coordinate: {e}")))?;
        }
        vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
    }

    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k: usize = tokens
            .next()
            .ok_or_else(|| parse_err("off", "truncated face list"))?
            .parse()
            .map_err(|e| parse_err("off", format!("bad face arity: {e}")))?;
        if k < 3 {
            return Err(parse_err("off", format!("face with {k} vertices")));
        }
        let mut idx = Vec::with_capacity(k);
        for _ in 0..k {
            let i: usize = tokens
                .next()
                .ok_or_else(|| parse_err("off", "truncated face"))?
                .parse()
                .map_err(|e| parse_err("off", format!("bad face index: {e}")))?;
            idx.push(i);
        }
        fan_triangulate(&idx, &mut triangles);
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    *c = parts
                        .next()
                        .ok_or_else(|| parse_err("obj", format!("line {}: short vertex", lineno + 1)))?
                        .parse()
                        .map_err(|e| parse_err("obj", format!("line {}: {e}", lineno + 1)))?;
                }
                vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for spec in parts {
                    // "f v", "f v/vt", "f v/vt/vn", "f v//vn" all start with the
                    // vertex index; negative indices count from the end.
                    let first = spec.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|e| parse_err("obj", format!("line {}: {e}", lineno + 1)))?;
                    let i = if raw > 0 {
                        (raw - 1) as usize
                    } else if raw < 0 {
                        let n = vertices.len() as i64 + raw;
                        if n < 0 {
                            return Err(parse_err("obj", format!("line {}: index {raw}", lineno + 1)));
                        }
                        n as usize
                    } else {
                        return Err(parse_err("obj", format!("line {}: zero index", lineno + 1)));
                    };
                    idx.push(i);
                }
                if idx.len() < 3 {
                    return Err(parse_err("obj", format!("line {}: face arity {}", lineno + 1, idx.len())));
                }
                fan_triangulate(&idx, &mut triangles);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn fan_triangulate(idx: &[usize], out: &mut Vec<[usize; 3]>) {
    for i in 1..idx.len() - 1 {
        out.push([idx[0], idx[i], idx[i + 1]]);
    }
}
