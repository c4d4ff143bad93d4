//! `ppc align`: materialize an aligned copy of a dataset. The pose source is
//! the ground-truth label (`oracle`), a trained regressor (`predicted`), or
//! nothing (`none`, which just normalizes — the unaligned baseline protocol).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use ppc_core::dataset::{
    derive_alignment_target, read_cloud_file, read_manifest, write_cloud_file, write_manifest,
    Manifest, SampleRecord, MANIFEST_NAME,
};
use ppc_core::geom::{Frame, PointCloud, RigidPose, Vec3};
use ppc_core::nn::Models;
use ppc_core::sphsig::encode_signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoseSource {
    Oracle,
    Predicted,
    None,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Input dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub pose_source: PoseSource,
    /// Trained pose checkpoint (required for --pose-source predicted).
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Also write the per-sample alignment poses as JSON lines.
    #[arg(long)]
    pub emit_pred: Option<PathBuf>,
}

#[derive(serde::Serialize, serde::Deserialize)]
pub struct PredLine {
    pub split: ppc_core::dataset::Split,
    pub instance_id: u64,
    pub view_id: u32,
    /// Alignment-space pose: (w, x, y, z) quaternion and translation.
    pub quat: [f64; 4],
    pub trans: [f64; 3],
}

pub fn run(args: &AlignArgs) -> Result<()> {
    let manifest = read_manifest(&args.data.join(MANIFEST_NAME))
        .with_context(|| format!("loading manifest in {}", args.data.display()))?;
    if manifest.meta.frame != Frame::Camera {
        bail!("dataset is already aligned (frame {:?})", manifest.meta.frame);
    }
    let models = match (args.pose_source, &args.ckpt) {
        (PoseSource::Predicted, Some(path)) => Some(Models::load(path)?),
        (PoseSource::Predicted, None) => bail!("--pose-source predicted requires --ckpt"),
        _ => None,
    };

    std::fs::create_dir_all(args.out.join("samples/train"))?;
    std::fs::create_dir_all(args.out.join("samples/test"))?;
    std::fs::create_dir_all(args.out.join("models"))?;

    let mut preds = Vec::new();
    for record in &manifest.samples {
        let points = read_cloud_file(&args.data.join(&record.file))?;
        let normed = normalize_with_stored(&points, record);
        let align_pose = alignment_pose(args.pose_source, record, &normed, models.as_ref())?;
        let out_points = match &align_pose {
            Some(pose) => normed.points.iter().map(|&p| pose.apply_point(p)).collect(),
            None => normed.points.clone(),
        };
        write_cloud_file(&out_points, &args.out.join(&record.file))?;
        if args.emit_pred.is_some() {
            let pose = align_pose.unwrap_or(RigidPose::IDENTITY);
            preds.push(PredLine {
                split: record.split,
                instance_id: record.instance_id,
                view_id: record.view_id,
                quat: [pose.rotation.w, pose.rotation.x, pose.rotation.y, pose.rotation.z],
                trans: [pose.translation.x, pose.translation.y, pose.translation.z],
            });
        }
    }

    for inst in &manifest.instances {
        std::fs::copy(args.data.join(&inst.model_file), args.out.join(&inst.model_file))?;
    }

    let meta = ppc_core::dataset::DatasetMeta {
        frame: match args.pose_source {
            PoseSource::None => Frame::Normalized,
            _ => Frame::Canonical,
        },
        ..manifest.meta.clone()
    };
    let Manifest { instances, samples, .. } = manifest;
    write_manifest(&args.out.join(MANIFEST_NAME), &meta, &instances, &samples)?;

    if let Some(path) = &args.emit_pred {
        let mut text = String::new();
        for line in &preds {
            text.push_str(&serde_json::to_string(line)?);
            text.push('\n');
        }
        std::fs::write(path, text)?;
    }
    println!(
        "align: {} samples ({:?} source) -> {}",
        samples.len(),
        args.pose_source,
        args.out.display()
    );
    Ok(())
}

fn normalize_with_stored(points: &[Vec3], record: &SampleRecord) -> PointCloud {
    let centroid = record.centroid_vec();
    let normed = points.iter().map(|&p| (p - centroid) / record.scale).collect();
    PointCloud::new(normed, Frame::Normalized)
}

fn alignment_pose(
    source: PoseSource,
    record: &SampleRecord,
    normed: &PointCloud,
    models: Option<&Models>,
) -> Result<Option<RigidPose>> {
    match source {
        PoseSource::None => Ok(None),
        PoseSource::Oracle => {
            let target =
                derive_alignment_target(&record.pose()?, record.centroid_vec(), record.scale)?;
            Ok(Some(target))
        }
        PoseSource::Predicted => {
            let models = models.expect("checked in run");
            let regressor = models
                .regressor
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("checkpoint has no pose regressor"))?;
            let grid = models.config.grid()?;
            let signal = encode_signal(normed, &grid)?;
            let (q, t, _) = regressor.forward(&signal.values)?;
            Ok(Some(RigidPose::new(
                ppc_core::geom::Quaternion { w: q[0], x: q[1], y: q[2], z: q[3] },
                t,
            )))
        }
    }
}

/// Reads a predictions file written by `--emit-pred` (or compatible).
pub fn read_predictions(path: &Path) -> Result<Vec<PredLine>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .with_context(|| format!("{}: line {}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}
