pub mod align;
pub mod eval;
pub mod hpr;
pub mod report;
pub mod synth;
pub mod train;

use anyhow::{bail, Result};
use ppc_core::geom::Vec3;

/// "x,y,z" -> Vec3.
pub fn parse_vec3(s: &str) -> Result<Vec3> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        bail!("expected x,y,z, got {s:?}");
    }
    Ok(Vec3::new(parts[0].trim().parse()?, parts[1].trim().parse()?, parts[2].trim().parse()?))
}
