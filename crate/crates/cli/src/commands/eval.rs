//! `ppc eval`: score a checkpoint (or a predictions source) on a dataset
//! split, writing metric rows as CSV.

use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use ppc_core::dataset::{derive_alignment_target, load_dataset, LoadedDataset, Split};
use ppc_core::geom::{Quaternion, RigidPose, Vec3};
use ppc_core::metrics::{
    classification_accuracy, confusion_matrix, pose_accuracy, write_metric_csv, MetricRow,
    ROT_THRESH_DEG, TRANS_THRESH_M,
};
use ppc_core::nn::{eval_classification, eval_poses, pose_errors_for_predictions, Models};

use super::align::read_predictions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Pose,
    Cls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Trained checkpoint to evaluate.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Pose predictions: `oracle` for ground-truth alignment targets, or a
    /// JSONL file from `align --emit-pred`.
    #[arg(long)]
    pub pred: Option<String>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Method label in the report rows (defaults to the checkpoint stem).
    #[arg(long)]
    pub name: Option<String>,
    /// Metric CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the K x K confusion matrix (classification only).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    /// Print a per-class breakdown (pose metric only).
    #[arg(long)]
    pub per_class: bool,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let split = match args.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let rows = match args.metric {
        MetricArg::Cls => eval_cls(args, &dataset, split)?,
        MetricArg::Pose => eval_pose(args, &dataset, split)?,
    };
    for row in &rows {
        println!("{} {} {} = {:.6}", row.method, row.split, row.metric, row.value);
    }
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        write_metric_csv(&rows, out)?;
    }
    Ok(())
}

fn method_name(args: &EvalArgs) -> String {
    if let Some(name) = &args.name {
        return name.clone();
    }
    if let Some(ckpt) = &args.ckpt {
        if let Some(stem) = ckpt.file_stem().and_then(|s| s.to_str()) {
            return stem.to_string();
        }
    }
    match args.pred.as_deref() {
        Some("oracle") => "oracle".to_string(),
        Some(path) => PathBuf::from(path)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("pred")
            .to_string(),
        None => "eval".to_string(),
    }
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
    }
}

fn eval_cls(args: &EvalArgs, dataset: &LoadedDataset, split: Split) -> Result<Vec<MetricRow>> {
    let Some(ckpt) = &args.ckpt else {
        bail!("--metric cls needs --ckpt");
    };
    let models = Models::load(ckpt)?;
    let (preds, labels) = eval_classification(&models, dataset, split)?;
    let acc = classification_accuracy(&preds, &labels)?;
    if let Some(path) = &args.confusion {
        let m = confusion_matrix(&preds, &labels, dataset.num_classes())?;
        let mut csv = String::new();
        for row in &m {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        std::fs::write(path, csv)?;
    }
    Ok(vec![MetricRow {
        method: method_name(args),
        split: split_name(split).to_string(),
        metric: "cls_acc".to_string(),
        value: acc,
    }])
}

fn eval_pose(args: &EvalArgs, dataset: &LoadedDataset, split: Split) -> Result<Vec<MetricRow>> {
    let predictions: Vec<RigidPose> = match (&args.ckpt, args.pred.as_deref()) {
        (Some(ckpt), None) => {
            let models = Models::load(ckpt)?;
            eval_poses(&models, dataset, split)?
        }
        (None, Some("oracle")) => dataset
            .split(split)
            .iter()
            .map(|s| {
                derive_alignment_target(&s.record.pose()?, s.record.centroid_vec(), s.record.scale)
                    .map_err(Into::into)
            })
            .collect::<Result<_>>()?,
        (None, Some(path)) => {
            let lines = read_predictions(&PathBuf::from(path))?;
            let by_key: HashMap<(u64, u32), &super::align::PredLine> = lines
                .iter()
                .filter(|l| l.split == split)
                .map(|l| ((l.instance_id, l.view_id), l))
                .collect();
            dataset
                .split(split)
                .iter()
                .map(|s| {
                    let line = by_key
                        .get(&(s.record.instance_id, s.record.view_id))
                        .ok_or_else(|| {
                            anyhow::anyhow!(
                                "no prediction for instance {} view {}",
                                s.record.instance_id,
                                s.record.view_id
                            )
                        })?;
                    Ok(RigidPose::new(
                        Quaternion::new(line.quat[0], line.quat[1], line.quat[2], line.quat[3])?,
                        Vec3::new(line.trans[0], line.trans[1], line.trans[2]),
                    ))
                })
                .collect::<Result<_>>()?
        }
        (Some(_), Some(_)) => bail!("--ckpt and --pred are mutually exclusive"),
        (None, None) => bail!("--metric pose needs --ckpt or --pred"),
    };

    let errors = pose_errors_for_predictions(dataset, split, &predictions)?;
    if args.per_class {
        for (class_id, info) in dataset.meta.classes.iter().enumerate() {
            let class_errors: Vec<_> = dataset
                .split(split)
                .iter()
                .zip(&errors)
                .filter(|(s, _)| s.record.class_id == class_id)
                .map(|(_, e)| *e)
                .collect();
            if class_errors.is_empty() {
                continue;
            }
            let n = class_errors.len() as f64;
            let rot = class_errors.iter().map(|e| e.rot_deg).sum::<f64>() / n;
            let trans = class_errors.iter().map(|e| e.trans).sum::<f64>() / n;
            let acc = pose_accuracy(&class_errors, ROT_THRESH_DEG, TRANS_THRESH_M)?;
            println!(
                "  class {:<10} n={:<4} rot {:7.2} deg  trans {:.4} m  acc {:.4}",
                info.name,
                class_errors.len(),
                rot,
                trans,
                acc
            );
        }
    }
    let acc = pose_accuracy(&errors, ROT_THRESH_DEG, TRANS_THRESH_M)?;
    let n = errors.len() as f64;
    let rot_mean = errors.iter().map(|e| e.rot_deg).sum::<f64>() / n;
    let trans_mean = errors.iter().map(|e| e.trans).sum::<f64>() / n;
    let method = method_name(args);
    let split_s = split_name(split).to_string();
    Ok(vec![
        MetricRow {
            method: method.clone(),
            split: split_s.clone(),
            metric: "pose_acc_10cm10deg".to_string(),
            value: acc,
        },
        MetricRow {
            method: method.clone(),
            split: split_s.clone(),
            metric: "rot_mean_deg".to_string(),
            value: rot_mean,
        },
        MetricRow { method, split: split_s, metric: "trans_mean_m".to_string(), value: trans_mean },
    ])
}
