//! Single-view partial point cloud classification with pose-supervised
//! alignment, at desk scale.
//!
//! The crate covers the whole pipeline:
//! - [`geom`] — rigid-body algebra, SO(3)/translation sampling, point-cloud
//!   primitives;
//! - [`render`] — BVH depth rendering of posed meshes and back-projection to
//!   partial camera-frame clouds;
//! - [`hpr`] — hidden point removal for already-fused clouds;
//! - [`sphsig`] — the equiangular farthest-distance spherical signal;
//! - [`metrics`] — pose/classification losses, symmetry handling, the
//!   10cm10deg metric;
//! - [`nn`] — a from-scratch differentiable stack (pose regressor, PointNet
//!   classifier, differentiable alignment) with deterministic training;
//! - [`dataset`] — the procedural shape corpus, dataset builds, and
//!   manifest/sample serialization.

pub mod dataset;
pub mod error;
pub mod geom;
pub mod hpr;
pub mod mesh_io;
pub mod metrics;
pub mod nn;
pub mod render;
pub mod rng;
pub mod sphsig;

pub use error::{Error, Result};
pub use geom::{
    farthest_point_sample, mesh_surface_sample, normalize_unit_sphere, pose_apply, pose_inverse,
    quat_from_matrix, quat_to_matrix, sample_translation, sample_uniform_rotation, Frame, Mat3,
    PointCloud, Quaternion, RigidPose, TranslationRanges, TriangleMesh, Vec3,
};
pub use rng::Rng;
