//! Non-learned building blocks of a 4D-radar object detection pipeline:
//! kernel-density point features, pillar and voxel encodings, anchor target
//! assignment, detection losses with analytic gradients, and AP evaluation.

pub mod cloud;
pub mod error;
pub mod eval;
pub mod export;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod kde;
pub mod labels;
pub mod losses;
pub mod pillars;
pub mod profile;
pub mod schema;
pub mod synth;
pub mod targets;
pub mod voxels;

pub use cloud::{filter_roi, load_pointcloud, PointCloud};
pub use error::{Error, Result};
pub use geometry::{iou_3d, iou_bev, Box3D, Roi3D};
pub use kde::{build_grid_index, kde_bruteforce, kde_densities, kde_multiband, normalize_densities, DensityField, KdeConfig};
pub use pillars::{concat_channels, pillarize, scatter_to_canvas, PillarConfig, PillarTensor, PseudoImage};
pub use profile::PipelineConfig;
pub use schema::{FeatureSchema, Field};
pub use voxels::{to_dense, voxelize, SparseVoxelGrid, VoxelConfig};
