//! Sparse voxel grid over a density-annotated cloud.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Roi3D;
use crate::grid::{ceil_cells, cell_index, exact_cells};
use crate::pillars::PseudoImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Reduce {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelConfig {
    pub cell_x: f64,
    pub cell_y: f64,
    pub cell_z: f64,
    pub roi: Roi3D,
    #[serde(default)]
    pub reduce: Reduce,
}

impl VoxelConfig {
    /// Grid dimensions `(D, H, W)` along (z, y, x). x and y must tile the ROI
    /// exactly; a fractional top layer in z is kept and truncated at `z_max`.
    pub fn dims(&self) -> Result<(usize, usize, usize)> {
        self.roi.validate()?;
        let [ex, ey, ez] = self.roi.extent();
        Ok((
            ceil_cells(ez, self.cell_z, "z")?,
            exact_cells(ey, self.cell_y, "y")?,
            exact_cells(ex, self.cell_x, "x")?,
        ))
    }
}

/// COO voxel grid: sorted unique `(d, h, w)` coordinates with a value vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVoxelGrid {
    pub dims: (usize, usize, usize),
    pub channels: usize,
    pub coords: Vec<[usize; 3]>,
    /// `values[v * channels + c]`.
    pub values: Vec<f64>,
    /// Points per voxel.
    pub counts: Vec<usize>,
}

impl SparseVoxelGrid {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn value(&self, v: usize) -> &[f64] {
        &self.values[v * self.channels..(v + 1) * self.channels]
    }
}

/// Voxelize with a single density column.
pub fn voxelize(pc: &PointCloud, density: &[f64], cfg: &VoxelConfig) -> Result<SparseVoxelGrid> {
    voxelize_channels(pc, density, 1, cfg)
}

/// Voxelize with a row-major `N_p x channels` value matrix.
pub fn voxelize_channels(
    pc: &PointCloud,
    values: &[f64],
    channels: usize,
    cfg: &VoxelConfig,
) -> Result<SparseVoxelGrid> {
    if channels == 0 || values.len() != pc.len() * channels {
        return Err(Error::Shape(format!(
            "{} values for {} points x {channels} channels",
            values.len(),
            pc.len()
        )));
    }
    let (d_n, h_n, w_n) = cfg.dims()?;
    pc.all_inside(&cfg.roi)?;
    let mut members: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
    for i in 0..pc.len() {
        let [x, y, z] = pc.xyz(i);
        let key = [
            cell_index(z - cfg.roi.z_min, cfg.cell_z, d_n),
            cell_index(y - cfg.roi.y_min, cfg.cell_y, h_n),
            cell_index(x - cfg.roi.x_min, cfg.cell_x, w_n),
        ];
        members.entry(key).or_default().push(i);
    }
    let mut grid = SparseVoxelGrid {
        dims: (d_n, h_n, w_n),
        channels,
        coords: Vec::with_capacity(members.len()),
        values: Vec::with_capacity(members.len() * channels),
        counts: Vec::with_capacity(members.len()),
    };
    for (key, idx) in members {
        for c in 0..channels {
            let it = idx.iter().map(|&i| values[i * channels + c]);
            let v = match cfg.reduce {
                Reduce::Mean => it.sum::<f64>() / idx.len() as f64,
                Reduce::Max => it.fold(f64::NEG_INFINITY, f64::max),
            };
            grid.values.push(v);
        }
        grid.coords.push(key);
        grid.counts.push(idx.len());
    }
    Ok(grid)
}

/// Dense `C x D x H x W` tensor, zero outside listed voxels.
pub fn to_dense(grid: &SparseVoxelGrid) -> Vec<f64> {
    let (d_n, h_n, w_n) = grid.dims;
    let plane = d_n * h_n * w_n;
    let mut out = vec![0.0; grid.channels * plane];
    for (v, [d, h, w]) in grid.coords.iter().enumerate() {
        let flat = (d * h_n + h) * w_n + w;
        for c in 0..grid.channels {
            out[c * plane + flat] = grid.values[v * grid.channels + c];
        }
    }
    out
}

/// `(C, H, W)` map holding the maximum over occupied voxels in each column.
///
/// This is a fixed stand-in for the learned collapse of the voxel tensor to a
/// BEV map; columns with no occupied voxel are zero.
pub fn bev_max_projection(grid: &SparseVoxelGrid) -> PseudoImage {
    let (_, h_n, w_n) = grid.dims;
    let mut img = PseudoImage::zeros(grid.channels, h_n, w_n);
    let mut seen = vec![false; h_n * w_n];
    for (v, [_, h, w]) in grid.coords.iter().enumerate() {
        let flat = h * w_n + w;
        let first = !std::mem::replace(&mut seen[flat], true);
        for c in 0..grid.channels {
            let slot = &mut img.data[c * h_n * w_n + flat];
            let val = grid.values[v * grid.channels + c];
            *slot = if first { val } else { slot.max(val) };
        }
    }
    img
}
