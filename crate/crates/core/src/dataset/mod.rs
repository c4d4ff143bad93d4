//! Dataset records, manifests, sample serialization, and the alignment
//! target derivation tying pose labels to the normalized clouds the networks
//! consume.
//!
//! On-disk layout under a dataset root:
//! - `manifest.jsonl` — one meta line, then instance lines, then sample lines
//! - `samples/<split>/…​.ppc` — per-sample camera-frame points
//! - `models/…​.ppc` — per-instance canonical model points (for the
//!   point-matching loss)
//!
//! `.ppc` files are `PPC1`, a u32-LE point count, then xyz f32-LE triples.

mod build;
mod shapes;

pub use build::{build_dataset, procedural_instance_mesh, BuildConfig, BuildSummary};
pub use shapes::{
    euler_characteristic, expected_euler, generate_instance, is_watertight, ShapeKind, ShapeSpec,
    SHAPE_CLASSES,
};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    pose_inverse, quat_to_matrix, Frame, PointCloud, Quaternion, RigidPose, TranslationRanges,
    Vec3,
};
use crate::metrics::SymmetrySpec;
use crate::render::PinholeCamera;

pub const CLOUD_MAGIC: &[u8; 4] = b"PPC1";
pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    pub symmetry: SymmetrySpec,
}

/// Manifest header: everything needed to interpret the records that follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub version: u32,
    pub seed: u64,
    pub classes: Vec<ClassInfo>,
    pub train_instances_per_class: usize,
    pub test_instances_per_class: usize,
    pub views_per_train_instance: usize,
    pub points_per_sample: usize,
    pub model_points_per_instance: usize,
    pub camera: PinholeCamera,
    pub translation: TranslationRanges,
    /// Frame of the stored sample points (`camera` for synthesized data;
    /// `normalized`/`canonical` after the align command).
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: u64,
    pub class_id: usize,
    pub split: Split,
    pub model_file: String,
}

/// One training/evaluation unit. `quat`/`trans` are the camera-from-canonical
/// pose; `centroid`/`scale` restore the unit-sphere normalization of the
/// stored points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub instance_id: u64,
    pub class_id: usize,
    pub view_id: u32,
    pub split: Split,
    /// (w, x, y, z), hemisphere-canonical.
    pub quat: [f64; 4],
    pub trans: [f64; 3],
    pub centroid: [f64; 3],
    pub scale: f64,
    /// Symmetry spec id of the class (e.g. `continuous-z`).
    pub sym: String,
    pub file: String,
}

impl SampleRecord {
    pub fn pose(&self) -> Result<RigidPose> {
        Ok(RigidPose::new(
            Quaternion::new(self.quat[0], self.quat[1], self.quat[2], self.quat[3])?,
            Vec3::new(self.trans[0], self.trans[1], self.trans[2]),
        ))
    }

    pub fn centroid_vec(&self) -> Vec3 {
        Vec3::new(self.centroid[0], self.centroid[1], self.centroid[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ManifestRecord {
    Meta(DatasetMeta),
    Instance(InstanceRecord),
    Sample(SampleRecord),
}

/// Stable identifier for a symmetry spec, stored per sample record.
pub fn symmetry_id(spec: &SymmetrySpec) -> String {
    match spec {
        SymmetrySpec::None => "none".to_string(),
        SymmetrySpec::DiscreteAxis { order, .. } => format!("discrete-z-{order}"),
        SymmetrySpec::ContinuousAxis { .. } => "continuous-z".to_string(),
    }
}

// --- Cloud files -----------------------------------------------------------

pub fn write_cloud_file(points: &[Vec3], path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 12 * points.len());
    buf.extend_from_slice(CLOUD_MAGIC);
    buf.extend_from_slice(&(points.len() as u32).to_le_bytes());
    for p in points {
        buf.extend_from_slice(&(p.x as f32).to_le_bytes());
        buf.extend_from_slice(&(p.y as f32).to_le_bytes());
        buf.extend_from_slice(&(p.z as f32).to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_cloud_file(path: &Path) -> Result<Vec<Vec3>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 || &bytes[0..4] != CLOUD_MAGIC {
        return Err(Error::Parse { what: "ppc file", detail: format!("{}: bad header", path.display()) });
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 12 * n {
        return Err(Error::Parse {
            what: "ppc file",
            detail: format!("{}: expected {n} points", path.display()),
        });
    }
    let mut points = Vec::with_capacity(n);
    for chunk in bytes[8..].chunks_exact(12) {
        let x = f32::from_le_bytes(chunk[0..4].try_into().unwrap()) as f64;
        let y = f32::from_le_bytes(chunk[4..8].try_into().unwrap()) as f64;
        let z = f32::from_le_bytes(chunk[8..12].try_into().unwrap()) as f64;
        points.push(Vec3::new(x, y, z));
    }
    Ok(points)
}

/// Round-trips coordinates through f32 so downstream normalization metadata
/// is computed from exactly what a reader of the `.ppc` file will see.
pub fn quantize_f32(points: &[Vec3]) -> Vec<Vec3> {
    points
        .iter()
        .map(|p| Vec3::new(p.x as f32 as f64, p.y as f32 as f64, p.z as f32 as f64))
        .collect()
}

// --- Alignment targets -------------------------------------------------------

/// The rigid transform that maps the normalized cloud onto the canonical
/// instance (scaled by 1/scale): for camera points `p = R x + t`,
/// the target is `R* = R^T`, `t* = R^T (centroid - t) / scale`, so that
/// `R* (p - centroid)/scale + t* = x / scale`.
pub fn derive_alignment_target(pose: &RigidPose, centroid: Vec3, scale: f64) -> Result<RigidPose> {
    if !(scale > 0.0) {
        return Err(Error::DegenerateScale);
    }
    let inv_rot = pose.rotation.conjugate();
    let t = inv_rot.rotate(centroid - pose.translation) / scale;
    Ok(RigidPose::new(inv_rot.hemisphere_canonical(), t))
}

/// Inverse of [`derive_alignment_target`]: recovers the implied
/// camera-from-canonical pose from an alignment-space prediction, for
/// evaluation in scene units.
pub fn implied_camera_pose(align: &RigidPose, centroid: Vec3, scale: f64) -> RigidPose {
    let rot = align.rotation.conjugate();
    let t = centroid - rot.rotate(align.translation) * scale;
    RigidPose::new(rot.hemisphere_canonical(), t)
}

/// Max distance (canonical units) from the sample's points, mapped back to
/// the canonical frame, to the instance mesh surface. `stride` checks every
/// `stride`-th point.
pub fn sample_surface_residual(
    points: &[Vec3],
    pose: &RigidPose,
    mesh: &crate::geom::TriangleMesh,
    stride: usize,
) -> f64 {
    let inv = pose_inverse(pose);
    let r = quat_to_matrix(inv.rotation);
    points
        .iter()
        .step_by(stride.max(1))
        .map(|&p| mesh.distance_to_point(r.apply(p) + inv.translation))
        .fold(0.0, f64::max)
}

// --- Manifest IO -------------------------------------------------------------

pub fn write_manifest(
    path: &Path,
    meta: &DatasetMeta,
    instances: &[InstanceRecord],
    samples: &[SampleRecord],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&ManifestRecord::Meta(meta.clone()))?);
    out.push('\n');
    for rec in instances {
        out.push_str(&serde_json::to_string(&ManifestRecord::Instance(rec.clone()))?);
        out.push('\n');
    }
    for rec in samples {
        out.push_str(&serde_json::to_string(&ManifestRecord::Sample(rec.clone()))?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub struct Manifest {
    pub meta: DatasetMeta,
    pub instances: Vec<InstanceRecord>,
    pub samples: Vec<SampleRecord>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut meta = None;
    let mut instances = Vec::new();
    let mut samples = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ManifestRecord>(&line)? {
            ManifestRecord::Meta(m) => meta = Some(m),
            ManifestRecord::Instance(i) => instances.push(i),
            ManifestRecord::Sample(s) => samples.push(s),
        }
    }
    let meta = meta.ok_or(Error::Parse {
        what: "manifest",
        detail: "missing meta record".into(),
    })?;
    Ok(Manifest { meta, instances, samples })
}

// --- Loaded dataset ----------------------------------------------------------

/// A sample with its points resident in memory.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub record: SampleRecord,
    pub points: Vec<Vec3>,
}

impl LoadedSample {
    pub fn cloud(&self, frame: Frame) -> PointCloud {
        PointCloud::new(self.points.clone(), frame)
    }
}

/// Fully loaded dataset: records plus point data plus per-instance model
/// points, keyed by instance id.
pub struct LoadedDataset {
    pub root: PathBuf,
    pub meta: DatasetMeta,
    pub instances: Vec<InstanceRecord>,
    pub train: Vec<LoadedSample>,
    pub test: Vec<LoadedSample>,
    pub model_points: BTreeMap<u64, Vec<Vec3>>,
}

impl LoadedDataset {
    pub fn split(&self, split: Split) -> &[LoadedSample] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.meta.classes.len()
    }

    pub fn symmetry_of(&self, class_id: usize) -> SymmetrySpec {
        self.meta.classes[class_id].symmetry
    }
}

pub fn load_dataset(root: &Path) -> Result<LoadedDataset> {
    let manifest = read_manifest(&root.join(MANIFEST_NAME))?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for record in manifest.samples {
        let points = read_cloud_file(&root.join(&record.file))?;
        let sample = LoadedSample { record, points };
        match sample.record.split {
            Split::Train => train.push(sample),
            Split::Test => test.push(sample),
        }
    }
    let mut model_points = BTreeMap::new();
    for inst in &manifest.instances {
        let pts = read_cloud_file(&root.join(&inst.model_file))?;
        model_points.insert(inst.instance_id, pts);
    }
    Ok(LoadedDataset {
        root: root.to_path_buf(),
        meta: manifest.meta,
        instances: manifest.instances,
        train,
        test,
        model_points,
    })
}
