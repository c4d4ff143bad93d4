use thiserror::Error;

/// Errors surfaced by the geometry, rendering, and training pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("cloud is in frame {found:?}, expected {expected:?}")]
    WrongFrame {
        expected: crate::geom::Frame,
        found: crate::geom::Frame,
    },
    #[error("all points coincide; unit-sphere scale would be zero")]
    DegenerateScale,
    #[error("invalid sampling range: lo {lo} >= hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("requested {requested} samples from a cloud of {available}")]
    NotEnoughPoints { requested: usize, available: usize },
    #[error("mesh has no triangles or zero total area")]
    ZeroAreaMesh,
    #[error("triangle index {index} out of range ({len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("no visible pixels for the requested view")]
    NoVisiblePixels,
    #[error("view resampling exceeded {0} attempts")]
    ViewResampleExceeded(usize),
    #[error("negative loss weight: {0}")]
    NegativeWeight(f64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pose head produced a near-zero quaternion (norm {0:.3e})")]
    DegenerateHeadOutput(f64),
    #[error("loss became non-finite at epoch {epoch}, step {step}")]
    NanLoss { epoch: usize, step: usize },
    #[error("shape generation failed after {0} parameter resamples")]
    ShapeResampleExceeded(usize),
    #[error("parse error in {what}: {detail}")]
    Parse { what: &'static str, detail: String },
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
