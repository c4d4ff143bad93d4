//! `ppc train`: train the pose regressor, the classifier, or both jointly.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use ppc_core::dataset::load_dataset;
use ppc_core::nn::{train, PoseLossKind, TrainConfig, TrainOutcome, TrainTask};

use crate::config::{resolve, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Pose,
    Cls,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Reg,
    Geo,
    Pm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory (from `synth` or `align`).
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint output path; the per-epoch log lands next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// Classification weight in the joint objective.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Translation weight in the pose loss.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptArg>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Per-epoch multiplicative learning-rate decay.
    #[arg(long)]
    pub lr_decay: Option<f64>,
    /// Momentum (SGD optimizer only).
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points fed to the classifier.
    #[arg(long)]
    pub cls_points: Option<usize>,
    /// Spherical signal grid size (square).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Block classifier gradients from the pose heads (joint ablation).
    #[arg(long)]
    pub detach_align: bool,
    /// Disable train-time augmentation.
    #[arg(long)]
    pub no_augment: bool,
    /// Keep shift/jitter augmentation but skip the random SO(3) rotation.
    #[arg(long)]
    pub no_rotation_augment: bool,
    /// Use the raw quaternion L2 instead of the double-cover-safe form.
    #[arg(long)]
    pub raw_reg: bool,
    /// key=value config file ([training] and [grid] sections).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn build_config(args: &TrainArgs, num_classes: usize) -> Result<TrainConfig> {
    let cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let task = match args.task {
        TaskArg::Pose => TrainTask::PoseOnly,
        TaskArg::Cls => TrainTask::ClsOnly,
        TaskArg::Joint => TrainTask::Joint,
    };
    let mut config = TrainConfig::new(task, num_classes, 0);
    config.loss = match args.loss {
        Some(LossArg::Reg) => PoseLossKind::Reg,
        Some(LossArg::Geo) => PoseLossKind::Geo,
        Some(LossArg::Pm) => PoseLossKind::Pm,
        None => match cfg.get("training", "loss") {
            Some("reg") | None => PoseLossKind::Reg,
            Some("geo") => PoseLossKind::Geo,
            Some("pm") => PoseLossKind::Pm,
            Some(other) => anyhow::bail!("config: unknown loss {other:?}"),
        },
    };
    config.double_cover_safe = !args.raw_reg;
    config.lambda = resolve(args.lambda, &cfg, "training", "lambda", 10.0)?;
    config.alpha = resolve(args.alpha, &cfg, "training", "alpha", 10.0)?;
    config.epochs = resolve(args.epochs, &cfg, "training", "epochs", 30)?;
    config.batch_size = resolve(args.batch, &cfg, "training", "batch", 16)?;
    config.optimizer = match args.optimizer {
        Some(OptArg::Adam) => ppc_core::nn::OptimizerKind::Adam,
        Some(OptArg::Sgd) => ppc_core::nn::OptimizerKind::Sgd,
        None => match cfg.get("training", "optimizer") {
            Some("adam") | None => ppc_core::nn::OptimizerKind::Adam,
            Some("sgd") => ppc_core::nn::OptimizerKind::Sgd,
            Some(other) => anyhow::bail!("config: unknown optimizer {other:?}"),
        },
    };
    config.lr = resolve(args.lr, &cfg, "training", "lr", 1e-3)?;
    config.lr_decay = resolve(args.lr_decay, &cfg, "training", "lr_decay", 1.0)?;
    config.momentum = resolve(args.momentum, &cfg, "training", "momentum", 0.9)?;
    config.seed = resolve(args.seed, &cfg, "training", "seed", 0)?;
    config.cls_points = resolve(args.cls_points, &cfg, "training", "cls_points", 1024)?;
    config.detach_align =
        args.detach_align || cfg.get("training", "detach_align") == Some("true");
    config.augment = if args.no_augment {
        false
    } else {
        resolve(None, &cfg, "training", "augment", true)?
    };
    config.aug_rotation = if args.no_rotation_augment {
        false
    } else {
        resolve(None, &cfg, "training", "aug_rotation", true)?
    };
    let grid = resolve(args.grid, &cfg, "grid", "w", 64)?;
    let grid_h = resolve(args.grid, &cfg, "grid", "h", grid)?;
    config.regressor.grid_w = grid;
    config.regressor.grid_h = grid_h;
    if let Some(raw) = cfg.get("training", "conv_channels") {
        config.regressor.conv_channels = parse_usize_list(raw)?;
    }
    if let Some(raw) = cfg.get("training", "conv_strides") {
        config.regressor.conv_strides = parse_usize_list(raw)?;
    }
    if let Some(raw) = cfg.get("training", "pose_dense") {
        config.regressor.dense = parse_usize_list(raw)?;
    }
    if config.regressor.conv_channels.len() != config.regressor.conv_strides.len() {
        anyhow::bail!("conv_channels and conv_strides must have the same length");
    }
    Ok(config)
}

fn parse_usize_list(raw: &str) -> Result<Vec<usize>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| anyhow::anyhow!("{raw:?}: {e}")))
        .collect()
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let config = build_config(args, dataset.num_classes())?;
    let TrainOutcome { models, log } = train(&dataset, config)?;

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    models.save(&args.out)?;
    let log_path = args.out.with_extension("log.csv");
    let mut csv = String::from("epoch,loss,pose_loss,cls_loss,train_accuracy\n");
    for e in &log {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.mean_loss, e.mean_pose_loss, e.mean_cls_loss, e.train_accuracy
        ));
    }
    std::fs::write(&log_path, csv)?;

    if let Some(last) = log.last() {
        println!(
            "train: {} epochs, final loss {:.6}, train accuracy {:.4} -> {}",
            log.len(),
            last.mean_loss,
            last.train_accuracy,
            args.out.display()
        );
    }
    Ok(())
}
