//! Dataset assembly: renders single-view partial clouds of procedurally
//! generated (or user-supplied) instances, with exact pose labels.
//!
//! Generation is parallel across instances; each task derives its own RNG
//! streams from `(seed, instance_id, view_id)`, so thread count and schedule
//! never change the output bytes. `PPC_THREADS` caps the worker count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{
    normalize_unit_sphere, farthest_point_sample, mesh_surface_sample, sample_translation,
    sample_uniform_rotation, Frame, PointCloud, RigidPose, TranslationRanges, TriangleMesh,
};
use crate::mesh_io::load_mesh;
use crate::render::{build_bvh, render_partial_view, PinholeCamera};
use crate::rng::Rng;

use super::shapes::{generate_instance, normalize_extent, SHAPE_CLASSES};
use super::{
    quantize_f32, sample_surface_residual, symmetry_id, write_cloud_file, write_manifest,
    ClassInfo, DatasetMeta, InstanceRecord, SampleRecord, Split, MANIFEST_NAME,
};

const STREAM_MESH: u64 = 1;
const STREAM_MODEL: u64 = 2;
const STREAM_VIEW: u64 = 3;

/// Max canonical-frame distance from stored points to the instance surface;
/// f32 storage of coordinates up to ~5.5 m costs at most ~4e-7.
const SURFACE_RESIDUAL_TOL: f64 = 1e-6;
const RESIDUAL_CHECK_STRIDE: usize = 8;

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub classes: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    pub views: usize,
    pub points: usize,
    pub model_points: usize,
    pub seed: u64,
    pub camera: PinholeCamera,
    pub translation: TranslationRanges,
    pub out_dir: PathBuf,
    /// Directory of per-class mesh subdirectories (OFF/OBJ) replacing the
    /// procedural corpus.
    pub mesh_dir: Option<PathBuf>,
}

impl BuildConfig {
    /// The desk-scale default corpus: 8 classes, 40 train + 10 test instances
    /// per class, 5 views, 1024 points per sample.
    pub fn mini_partial_net(out_dir: PathBuf, seed: u64) -> Self {
        Self {
            classes: 8,
            train_instances: 40,
            test_instances: 10,
            views: 5,
            points: 1024,
            model_points: 512,
            seed,
            camera: PinholeCamera::DEFAULT,
            translation: TranslationRanges::DEFAULT,
            out_dir,
            mesh_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub train_samples: usize,
    pub test_samples: usize,
    pub instances: usize,
    pub manifest_path: PathBuf,
}

struct InstanceTask {
    instance_id: u64,
    class_id: usize,
    split: Split,
    local_idx: usize,
}

enum MeshSource {
    Procedural,
    Files(Vec<Vec<PathBuf>>), // per class, sorted
}

pub fn build_dataset(config: &BuildConfig) -> Result<BuildSummary> {
    config.translation.validate()?;
    config.camera.validate()?;
    if config.views == 0 || config.points == 0 || config.train_instances == 0 {
        return Err(Error::Degenerate("views, points, and train instances must be positive"));
    }

    let (classes, source) = match &config.mesh_dir {
        None => {
            if config.classes == 0 || config.classes > SHAPE_CLASSES.len() {
                return Err(Error::Degenerate("procedural corpus supports 1..=8 classes"));
            }
            let classes: Vec<ClassInfo> = SHAPE_CLASSES[..config.classes]
                .iter()
                .map(|s| ClassInfo { name: s.name.to_string(), symmetry: s.symmetry })
                .collect();
            (classes, MeshSource::Procedural)
        }
        Some(dir) => enumerate_mesh_dir(dir, config)?,
    };

    let per_class = config.train_instances + config.test_instances;
    let mut tasks = Vec::new();
    for class_id in 0..classes.len() {
        for local_idx in 0..per_class {
            let split = if local_idx < config.train_instances { Split::Train } else { Split::Test };
            tasks.push(InstanceTask {
                instance_id: (class_id * per_class + local_idx) as u64,
                class_id,
                split,
                local_idx,
            });
        }
    }

    std::fs::create_dir_all(config.out_dir.join("samples/train"))?;
    std::fs::create_dir_all(config.out_dir.join("samples/test"))?;
    std::fs::create_dir_all(config.out_dir.join("models"))?;

    let run = || -> Result<Vec<(InstanceRecord, Vec<SampleRecord>)>> {
        tasks
            .par_iter()
            .map(|task| build_instance(task, config, &classes, &source))
            .collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parse { what: "thread pool", detail: e.to_string() })?
            .install(run),
        None => run(),
    }?;

    let mut instances = Vec::new();
    let mut samples = Vec::new();
    for (inst, recs) in results {
        instances.push(inst);
        samples.extend(recs);
    }
    samples.sort_by_key(|s| (s.split, s.class_id, s.instance_id, s.view_id));

    let meta = DatasetMeta {
        version: 1,
        seed: config.seed,
        classes,
        train_instances_per_class: config.train_instances,
        test_instances_per_class: config.test_instances,
        views_per_train_instance: config.views,
        points_per_sample: config.points,
        model_points_per_instance: config.model_points,
        camera: config.camera,
        translation: config.translation,
        frame: Frame::Camera,
    };
    let manifest_path = config.out_dir.join(MANIFEST_NAME);
    write_manifest(&manifest_path, &meta, &instances, &samples)?;

    let train_samples = samples.iter().filter(|s| s.split == Split::Train).count();
    Ok(BuildSummary {
        train_samples,
        test_samples: samples.len() - train_samples,
        instances: instances.len(),
        manifest_path,
    })
}

fn thread_cap() -> Option<usize> {
    std::env::var("PPC_THREADS").ok()?.parse::<usize>().ok().filter(|&n| n >= 1)
}

fn enumerate_mesh_dir(dir: &Path, config: &BuildConfig) -> Result<(Vec<ClassInfo>, MeshSource)> {
    let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Parse { what: "mesh dir", detail: "no class subdirectories".into() });
    }
    let needed = config.train_instances + config.test_instances;
    let mut classes = Vec::new();
    let mut files = Vec::new();
    for cd in &class_dirs {
        let mut meshes: Vec<PathBuf> = std::fs::read_dir(cd)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("off") | Some("obj") | Some("OFF") | Some("OBJ")
                )
            })
            .collect();
        meshes.sort();
        if meshes.len() < needed {
            return Err(Error::Parse {
                what: "mesh dir",
                detail: format!(
                    "{}: {} meshes, need {needed}",
                    cd.display(),
                    meshes.len()
                ),
            });
        }
        classes.push(ClassInfo {
            name: cd.file_name().unwrap().to_string_lossy().to_string(),
            // Unknown geometry: no symmetry reduction.
            symmetry: crate::metrics::SymmetrySpec::None,
        });
        files.push(meshes);
    }
    Ok((classes, MeshSource::Files(files)))
}

fn build_instance(
    task: &InstanceTask,
    config: &BuildConfig,
    classes: &[ClassInfo],
    source: &MeshSource,
) -> Result<(InstanceRecord, Vec<SampleRecord>)> {
    let mesh = instance_mesh(task, config, source)?;
    let bvh = build_bvh(&mesh)?;

    // Canonical model points for the point-matching loss.
    let mut model_rng = Rng::derive(config.seed, &[STREAM_MODEL, task.instance_id]);
    let dense = mesh_surface_sample(&mesh, (config.model_points * 8).max(config.model_points), &mut model_rng)?;
    let model = farthest_point_sample(&dense, config.model_points)?;
    let model_file = format!("models/i{:04}.ppc", task.instance_id);
    write_cloud_file(&model.points, &config.out_dir.join(&model_file))?;

    let sym = symmetry_id(&classes[task.class_id].symmetry);
    let view_count = match task.split {
        Split::Train => config.views,
        Split::Test => 1,
    };
    let mut samples = Vec::with_capacity(view_count);
    for view_id in 0..view_count {
        let mut rng = Rng::derive(config.seed, &[STREAM_VIEW, task.instance_id, view_id as u64]);
        let pose = RigidPose::new(
            sample_uniform_rotation(&mut rng).hemisphere_canonical(),
            sample_translation(&mut rng, &config.translation)?,
        );
        let (cloud, pose) =
            render_partial_view(&bvh, pose, &config.camera, config.points, &mut rng, &config.translation)?;

        // Metadata must describe the f32-quantized points a reader gets back.
        let stored = quantize_f32(&cloud.points);
        let (_, centroid, scale) =
            normalize_unit_sphere(&PointCloud::new(stored.clone(), Frame::Camera))?;
        let residual = sample_surface_residual(&stored, &pose, &mesh, RESIDUAL_CHECK_STRIDE);
        if residual >= SURFACE_RESIDUAL_TOL {
            return Err(Error::Degenerate("sample points left the instance surface"));
        }

        let file = format!(
            "samples/{}/c{:02}_i{:04}_v{:02}.ppc",
            task.split.dir_name(),
            task.class_id,
            task.instance_id,
            view_id
        );
        write_cloud_file(&stored, &config.out_dir.join(&file))?;
        samples.push(SampleRecord {
            instance_id: task.instance_id,
            class_id: task.class_id,
            view_id: view_id as u32,
            split: task.split,
            quat: [pose.rotation.w, pose.rotation.x, pose.rotation.y, pose.rotation.z],
            trans: [pose.translation.x, pose.translation.y, pose.translation.z],
            centroid: [centroid.x, centroid.y, centroid.z],
            scale,
            sym: sym.clone(),
            file,
        });
    }

    Ok((
        InstanceRecord {
            instance_id: task.instance_id,
            class_id: task.class_id,
            split: task.split,
            model_file,
        },
        samples,
    ))
}

fn instance_mesh(
    task: &InstanceTask,
    config: &BuildConfig,
    source: &MeshSource,
) -> Result<TriangleMesh> {
    match source {
        MeshSource::Procedural => procedural_instance_mesh(config.seed, task.class_id, task.instance_id),
        MeshSource::Files(files) => {
            let path = &files[task.class_id][task.local_idx];
            Ok(normalize_extent(load_mesh(path)?))
        }
    }
}

/// Regenerates the canonical mesh of a procedural-corpus instance exactly as
/// the dataset builder produced it (same derived stream).
pub fn procedural_instance_mesh(
    seed: u64,
    class_id: usize,
    instance_id: u64,
) -> Result<TriangleMesh> {
    let mut rng = Rng::derive(seed, &[STREAM_MESH, instance_id]);
    generate_instance(&SHAPE_CLASSES[class_id], &mut rng)
}
