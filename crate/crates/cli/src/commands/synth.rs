//! `ppc synth`: build a synthetic partial-cloud dataset with exact pose
//! labels.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use ppc_core::dataset::{build_dataset, BuildConfig};
use ppc_core::geom::TranslationRanges;
use ppc_core::render::PinholeCamera;

use crate::config::{resolve, ConfigFile};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of shape classes (procedural corpus supports up to 8).
    #[arg(long)]
    pub classes: Option<usize>,
    /// Training instances per class.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Held-out test instances per class.
    #[arg(long)]
    pub test_instances: Option<usize>,
    /// Rendered views per training instance.
    #[arg(long)]
    pub views: Option<usize>,
    /// Points per sample after subsampling.
    #[arg(long)]
    pub points: Option<usize>,
    /// Canonical model points stored per instance.
    #[arg(long)]
    pub model_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-class mesh directories (OFF/OBJ) replacing the procedural corpus.
    #[arg(long)]
    pub mesh_dir: Option<PathBuf>,
    /// key=value config file (sections: camera, corpus).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn build_config(args: &SynthArgs) -> Result<BuildConfig> {
    let cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let camera = PinholeCamera {
        fx: resolve(None, &cfg, "camera", "fx", PinholeCamera::DEFAULT.fx)?,
        fy: resolve(None, &cfg, "camera", "fy", PinholeCamera::DEFAULT.fy)?,
        cx: resolve(None, &cfg, "camera", "cx", PinholeCamera::DEFAULT.cx)?,
        cy: resolve(None, &cfg, "camera", "cy", PinholeCamera::DEFAULT.cy)?,
        width: resolve(None, &cfg, "camera", "width", PinholeCamera::DEFAULT.width)?,
        height: resolve(None, &cfg, "camera", "height", PinholeCamera::DEFAULT.height)?,
    };
    let d = TranslationRanges::DEFAULT;
    let translation = TranslationRanges {
        x: (
            resolve(None, &cfg, "corpus", "tx_min", d.x.0)?,
            resolve(None, &cfg, "corpus", "tx_max", d.x.1)?,
        ),
        y: (
            resolve(None, &cfg, "corpus", "ty_min", d.y.0)?,
            resolve(None, &cfg, "corpus", "ty_max", d.y.1)?,
        ),
        z: (
            resolve(None, &cfg, "corpus", "tz_min", d.z.0)?,
            resolve(None, &cfg, "corpus", "tz_max", d.z.1)?,
        ),
    };
    Ok(BuildConfig {
        classes: resolve(args.classes, &cfg, "corpus", "classes", 8)?,
        train_instances: resolve(args.instances, &cfg, "corpus", "train_instances", 40)?,
        test_instances: resolve(args.test_instances, &cfg, "corpus", "test_instances", 10)?,
        views: resolve(args.views, &cfg, "corpus", "views", 5)?,
        points: resolve(args.points, &cfg, "corpus", "points", 1024)?,
        model_points: resolve(args.model_points, &cfg, "corpus", "model_points", 512)?,
        seed: resolve(args.seed, &cfg, "corpus", "seed", 7)?,
        camera,
        translation,
        out_dir: args.out.clone(),
        mesh_dir: args.mesh_dir.clone(),
    })
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let config = build_config(args)?;
    let summary = build_dataset(&config)?;
    println!(
        "synth: {} train + {} test samples over {} instances -> {}",
        summary.train_samples,
        summary.test_samples,
        summary.instances,
        summary.manifest_path.display()
    );
    Ok(())
}
