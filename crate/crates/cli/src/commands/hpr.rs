//! `ppc hpr`: hidden point removal on a stored cloud file.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use ppc_core::dataset::{read_cloud_file, write_cloud_file};
use ppc_core::geom::{Frame, PointCloud};
use ppc_core::hpr::{hidden_point_removal, visible_subset};

use super::parse_vec3;

#[derive(Debug, Args)]
pub struct HprArgs {
    /// Input cloud (.ppc).
    #[arg(long)]
    pub input: PathBuf,
    /// Viewpoint as "x,y,z".
    #[arg(long)]
    pub viewpoint: String,
    /// Flip radius exponent: R = max range * 10^gamma.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Output cloud with only the visible points.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(args: &HprArgs) -> Result<()> {
    let viewpoint = parse_vec3(&args.viewpoint)?;
    let points = read_cloud_file(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let cloud = PointCloud::new(points, Frame::Camera);
    let mask = hidden_point_removal(&cloud, viewpoint, args.gamma)?;
    let visible = visible_subset(&cloud, &mask);
    write_cloud_file(&visible.points, &args.output)?;
    println!(
        "hpr: {} of {} points visible from ({}, {}, {}) at gamma {} -> {}",
        visible.len(),
        cloud.len(),
        viewpoint.x,
        viewpoint.y,
        viewpoint.z,
        args.gamma,
        args.output.display()
    );
    Ok(())
}
