//! Pillar binning, point capping and the sparse `(D, P, N)` feature tensor,
//! plus BEV canvas scatter and channel concatenation.


use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Roi3D;
use crate::grid::{cell_index, exact_cells};
use crate::kde::DensityField;

/// Number of positional features appended to every point.
pub const AUGMENTED_FEATURES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PillarConfig {
    pub cell_x: f64,
    pub cell_y: f64,
    pub max_points: usize,
    pub roi: Roi3D,
    pub seed: u64,
}

impl PillarConfig {
    /// Canvas size `(H, W)`: rows along y, columns along x.
    pub fn canvas(&self) -> Result<(usize, usize)> {
        if self.max_points == 0 {
            return Err(Error::Config("max points per pillar must be at least 1".into()));
        }
        self.roi.validate()?;
        let [ex, ey, _] = self.roi.extent();
        Ok((exact_cells(ey, self.cell_y, "y")?, exact_cells(ex, self.cell_x, "x")?))
    }

    /// Geometric center of a pillar in the x-y plane.
    pub fn pillar_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.roi.x_min + (col as f64 + 0.5) * self.cell_x,
            self.roi.y_min + (row as f64 + 0.5) * self.cell_y,
        ]
    }
}

/// Zero-padded `(D, P, N)` tensor of augmented point features.
///
/// Row layout per point: raw schema fields, then any appended density
/// channels, then offsets from the pillar centroid `(x_c, y_c, z_c)` and from
/// the pillar's geometric center `(x_p, y_p, z_p)`, with `z_p` measured from
/// the ROI z midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarTensor {
    pub num_features: usize,
    pub max_points: usize,
    /// `values[(d * P + p) * N + n]`.
    pub values: Vec<f64>,
    /// `(row, col)` per pillar, ascending.
    pub coords: Vec<(usize, usize)>,
    pub counts: Vec<usize>,
    /// Source point indices kept for each pillar.
    pub sources: Vec<Vec<usize>>,
    pub height: usize,
    pub width: usize,
}

impl PillarTensor {
    pub fn num_pillars(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn get(&self, d: usize, p: usize, n: usize) -> f64 {
        self.values[(d * self.num_pillars() + p) * self.max_points + n]
    }

    /// Feature row of slot `n` in pillar `p`.
    pub fn point(&self, p: usize, n: usize) -> Vec<f64> {
        (0..self.num_features).map(|d| self.get(d, p, n)).collect()
    }

    /// Channel-major `D x P` mean of each feature over the kept points.
    pub fn mean_features(&self) -> Vec<f64> {
        let p_total = self.num_pillars();
        let mut out = vec![0.0; self.num_features * p_total];
        for d in 0..self.num_features {
            for p in 0..p_total {
                let c = self.counts[p];
                let s: f64 = (0..c).map(|n| self.get(d, p, n)).sum();
                out[d * p_total + p] = s / c as f64;
            }
        }
        out
    }
}

fn pillar_seed(seed: u64, row: usize, col: usize) -> u64 {
    // splitmix64 finalizer over the seed and pillar key
    let mut z = seed ^ ((row as u64) << 32 | col as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform subset of `cap` indices via a seeded Fisher-Yates prefix, returned
/// in ascending order.
fn subsample(mut members: Vec<usize>, cap: usize, seed: u64) -> Vec<usize> {
    if members.len() <= cap {
        return members;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..cap {
        let j = rng.random_range(i..members.len());
        members.swap(i, j);
    }
    members.truncate(cap);
    members.sort_unstable();
    members
}

/// Bin an ROI-filtered cloud into pillars and build the augmented tensor.
///
/// When `densities` is given its normalized channels are appended to the raw
/// features of each point.
pub fn pillarize(pc: &PointCloud, densities: Option<&DensityField>, cfg: &PillarConfig) -> Result<PillarTensor> {
    let (height, width) = cfg.canvas()?;
    pc.all_inside(&cfg.roi)?;
    let bands = match densities {
        Some(f) if f.num_points() != pc.len() => {
            return Err(Error::Shape(format!(
                "density field has {} points, cloud has {}",
                f.num_points(),
                pc.len()
            )))
        }
        Some(f) => f.num_bands(),
        None => 0,
    };
    let raw = pc.num_fields();
    let dims = raw + bands + AUGMENTED_FEATURES;
    let cap = cfg.max_points;

    // pillar key per point, then runs of equal keys; indices stay ascending
    let mut keyed: Vec<(usize, usize)> = (0..pc.len())
        .map(|i| {
            let [x, y, _] = pc.xyz(i);
            let row = cell_index(y - cfg.roi.y_min, cfg.cell_y, height);
            let col = cell_index(x - cfg.roi.x_min, cfg.cell_x, width);
            (row * width + col, i)
        })
        .collect();
    keyed.sort_unstable();
    let mut bins: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (key, i) in keyed {
        match bins.last_mut() {
            Some(last) if last.0 * width + last.1 == key => last.2.push(i),
            _ => bins.push((key / width, key % width, vec![i])),
        }
    }
    let z_mid = cfg.roi.z_mid();

    // per pillar: kept indices and a kept x D block
    let blocks: Vec<(Vec<usize>, Vec<f64>)> = bins
        .par_iter()
        .map(|(row, col, members)| {
            let (row, col) = (*row, *col);
            let kept = subsample(members.clone(), cap, pillar_seed(cfg.seed, row, col));
            let k = kept.len() as f64;
            let mut centroid = [0.0; 3];
            for &i in &kept {
                let p = pc.xyz(i);
                for a in 0..3 {
                    centroid[a] += p[a];
                }
            }
            centroid = centroid.map(|c| c / k);
            let [gx, gy] = cfg.pillar_center(row, col);
            let mut block = vec![0.0; kept.len() * dims];
            for (n, &i) in kept.iter().enumerate() {
                let out = &mut block[n * dims..(n + 1) * dims];
                out[..raw].copy_from_slice(pc.row(i));
                if let Some(f) = densities {
                    out[raw..raw + bands].copy_from_slice(f.normalized_row(i));
                }
                let [x, y, z] = pc.xyz(i);
                let aug = &mut out[raw + bands..];
                aug[0] = x - centroid[0];
                aug[1] = y - centroid[1];
                aug[2] = z - centroid[2];
                aug[3] = x - gx;
                aug[4] = y - gy;
                aug[5] = z - z_mid;
            }
            (kept, block)
        })
        .collect();

    let p_total = blocks.len();
    let mut values = vec![0.0; dims * p_total * cap];
    let mut counts = Vec::with_capacity(p_total);
    let mut sources = Vec::with_capacity(p_total);
    for (p, (kept, block)) in blocks.into_iter().enumerate() {
        for (n, point) in block.chunks_exact(dims).enumerate() {
            for (d, v) in point.iter().enumerate() {
                values[(d * p_total + p) * cap + n] = *v;
            }
        }
        counts.push(kept.len());
        sources.push(kept);
    }
    let coords = bins.iter().map(|(r, c, _)| (*r, *c)).collect();
    Ok(PillarTensor {
        num_features: dims,
        max_points: cap,
        values,
        coords,
        counts,
        sources,
        height,
        width,
    })
}

/// Dense `(C, H, W)` BEV feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoImage {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Meters per cell along (x, y), when known.
    pub cell_size: Option<[f64; 2]>,
    /// `data[(c * H + h) * W + w]`.
    pub data: Vec<f64>,
}

impl PseudoImage {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            cell_size: None,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn with_cell_size(mut self, cell_x: f64, cell_y: f64) -> Self {
        self.cell_size = Some([cell_x, cell_y]);
        self
    }

    #[inline]
    pub fn get(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[(c * self.height + h) * self.width + w]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
}

/// Write column `p` of a channel-major `C x P` matrix to `coords[p]`.
pub fn scatter_to_canvas(
    features: &[f64],
    channels: usize,
    coords: &[(usize, usize)],
    height: usize,
    width: usize,
) -> Result<PseudoImage> {
    let p_total = coords.len();
    if features.len() != channels * p_total {
        return Err(Error::Shape(format!(
            "{} feature values for {channels} channels x {p_total} pillars",
            features.len()
        )));
    }
    let mut img = PseudoImage::zeros(channels, height, width);
    let mut seen = vec![false; height * width];
    for (p, &(row, col)) in coords.iter().enumerate() {
        if row >= height || col >= width {
            return Err(Error::CoordOutOfRange { row, col, height, width });
        }
        let flat = row * width + col;
        if std::mem::replace(&mut seen[flat], true) {
            return Err(Error::DuplicateCoord { row, col });
        }
        for c in 0..channels {
            img.data[c * height * width + flat] = features[c * p_total + p];
        }
    }
    Ok(img)
}

/// Stack maps along the channel axis, in argument order.
pub fn concat_channels(maps: &[PseudoImage]) -> Result<PseudoImage> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Shape("no feature maps to concatenate".into()))?;
    for (i, m) in maps.iter().enumerate().skip(1) {
        if m.height != first.height || m.width != first.width || m.cell_size != first.cell_size {
            return Err(Error::Shape(format!(
                "map {i} is {}x{} (cell {:?}), expected {}x{} (cell {:?})",
                m.height, m.width, m.cell_size, first.height, first.width, first.cell_size
            )));
        }
    }
    let mut out = PseudoImage {
        channels: maps.iter().map(|m| m.channels).sum(),
        height: first.height,
        width: first.width,
        cell_size: first.cell_size,
        data: Vec::with_capacity(maps.iter().map(|m| m.data.len()).sum()),
    };
    for m in maps {
        out.data.extend_from_slice(&m.data);
    }
    Ok(out)
}
