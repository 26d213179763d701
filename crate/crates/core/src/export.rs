//! On-disk artifacts: pillar tensors, sparse voxel grids, density columns and
//! BEV heatmaps. Binary payloads are little-endian `f32`; metadata is JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::kde::{DensityField, KdeConfig};
use crate::pillars::PillarTensor;
use crate::voxels::{Reduce, SparseVoxelGrid};

/// `<stem><suffix>`, keeping any dots already in the stem.
pub fn artifact_path(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn f32_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect()
}

fn read_f32(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect()
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

/// Single-line JSON, for metadata holding per-pillar arrays.
fn compact<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec(v)?;
    s.push(b'\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PillarMeta {
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub feature_names: Vec<String>,
    pub cell_size: [f64; 2],
    pub coords: Vec<[usize; 2]>,
    pub counts: Vec<usize>,
    pub seed: u64,
    /// Channel counts of the fused pseudo-image (`c1`, `c2_1`, `c2_2`, `c_f`).
    pub channels: serde_json::Value,
}

impl PillarMeta {
    pub fn new(
        t: &PillarTensor,
        feature_names: Vec<String>,
        cell_size: [f64; 2],
        seed: u64,
        channels: serde_json::Value,
    ) -> Result<Self> {
        if feature_names.len() != t.num_features {
            return Err(Error::Shape(format!(
                "{} feature names for {} pillar features",
                feature_names.len(),
                t.num_features
            )));
        }
        Ok(Self {
            d: t.num_features,
            p: t.num_pillars(),
            n: t.max_points,
            h: t.height,
            w: t.width,
            feature_names,
            cell_size,
            coords: t.coords.iter().map(|&(r, c)| [r, c]).collect(),
            counts: t.counts.clone(),
            seed,
            channels,
        })
    }
}

pub fn write_pillars(stem: &Path, t: &PillarTensor, meta: &PillarMeta) -> Result<[PathBuf; 2]> {
    let bin = artifact_path(stem, ".pillars.bin");
    let json = artifact_path(stem, ".pillars.meta.json");
    write_atomic(&bin, &f32_bytes(&t.values))?;
    write_atomic(&json, &compact(meta)?)?;
    Ok([bin, json])
}

/// Read back a pillar tensor as `(meta, D x P x N values)`.
pub fn read_pillars(stem: &Path) -> Result<(PillarMeta, Vec<f64>)> {
    let json = artifact_path(stem, ".pillars.meta.json");
    let bin = artifact_path(stem, ".pillars.bin");
    let text = std::fs::read(&json).map_err(|e| Error::io(&json, e))?;
    let meta: PillarMeta = serde_json::from_slice(&text)?;
    let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let expect = meta.d * meta.p * meta.n * 4;
    if bytes.len() != expect {
        return Err(Error::Shape(format!("{}: {} bytes, header implies {expect}", bin.display(), bytes.len())));
    }
    Ok((meta, read_f32(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelHeader {
    /// `(D, H, W)`.
    pub dims: [usize; 3],
    /// Cell sizes along (x, y, z), meters.
    pub cells: [f64; 3],
    pub reduce: Reduce,
    pub channels: usize,
    pub num_voxels: usize,
}

/// Layout: `u32` header length, JSON header, then per voxel three `i32`
/// coordinates `(d, h, w)` followed by `channels` `f32` values.
pub fn encode_voxels(grid: &SparseVoxelGrid, cells: [f64; 3], reduce: Reduce) -> Result<Vec<u8>> {
    let header = VoxelHeader {
        dims: [grid.dims.0, grid.dims.1, grid.dims.2],
        cells,
        reduce,
        channels: grid.channels,
        num_voxels: grid.len(),
    };
    let head = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(4 + head.len() + grid.len() * (12 + 4 * grid.channels));
    out.extend_from_slice(&(head.len() as u32).to_le_bytes());
    out.extend_from_slice(&head);
    for (v, c) in grid.coords.iter().enumerate() {
        for &i in c {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
        out.extend(f32_bytes(grid.value(v)));
    }
    Ok(out)
}

/// Parse a voxel file into its header, coordinates and values.
pub fn decode_voxels(bytes: &[u8]) -> Result<(VoxelHeader, Vec<[usize; 3]>, Vec<f64>)> {
    let bad = |m: &str| Error::Shape(format!("voxel file: {m}"));
    if bytes.len() < 4 {
        return Err(bad("truncated header length"));
    }
    let hl = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let head = bytes.get(4..4 + hl).ok_or_else(|| bad("truncated header"))?;
    let header: VoxelHeader = serde_json::from_slice(head)?;
    let body = &bytes[4 + hl..];
    let rec = 12 + 4 * header.channels;
    if body.len() != rec * header.num_voxels {
        return Err(bad("record section does not match header"));
    }
    let mut coords = Vec::with_capacity(header.num_voxels);
    let mut values = Vec::with_capacity(header.num_voxels * header.channels);
    for r in body.chunks_exact(rec) {
        let idx = |k: usize| i32::from_le_bytes([r[4 * k], r[4 * k + 1], r[4 * k + 2], r[4 * k + 3]]) as usize;
        coords.push([idx(0), idx(1), idx(2)]);
        values.extend(read_f32(&r[12..]));
    }
    Ok((header, coords, values))
}

pub fn write_voxels(stem: &Path, grid: &SparseVoxelGrid, cells: [f64; 3], reduce: Reduce) -> Result<PathBuf> {
    let path = artifact_path(stem, ".voxels.bin");
    write_atomic(&path, &encode_voxels(grid, cells, reduce)?)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMeta {
    pub num_points: usize,
    pub bands: usize,
    pub bandwidths: Vec<f64>,
    pub kernel_dims: Vec<String>,
    pub epsilon: f64,
    pub exclude_self: bool,
    /// Which matrix the binary holds.
    pub values: String,
}

/// Normalized densities as `N_p x B` `f32` plus a JSON sidecar.
pub fn write_density(stem: &Path, field: &DensityField, cfgs: &[KdeConfig]) -> Result<[PathBuf; 2]> {
    let first = cfgs.first().ok_or_else(|| Error::Config("no KDE configuration".into()))?;
    let meta = DensityMeta {
        num_points: field.num_points(),
        bands: field.num_bands(),
        bandwidths: field.bandwidths.clone(),
        kernel_dims: first.kernel_dims.clone(),
        epsilon: first.epsilon,
        exclude_self: first.exclude_self,
        values: "normalized".into(),
    };
    let bin = artifact_path(stem, ".density.bin");
    let json = artifact_path(stem, ".density.meta.json");
    write_atomic(&bin, &f32_bytes(&field.normalized))?;
    write_atomic(&json, &pretty(&meta)?)?;
    Ok([bin, json])
}

pub fn read_density(stem: &Path) -> Result<(DensityMeta, Vec<f64>)> {
    let json = artifact_path(stem, ".density.meta.json");
    let bin = artifact_path(stem, ".density.bin");
    let text = std::fs::read(&json).map_err(|e| Error::io(&json, e))?;
    let meta: DensityMeta = serde_json::from_slice(&text)?;
    let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() != meta.num_points * meta.bands * 4 {
        return Err(Error::Shape(format!("{}: size does not match sidecar", bin.display())));
    }
    Ok((meta, read_f32(&bytes)))
}

/// Plain (ASCII) PGM of a row-major grid, linearly scaled to 0..=255. A
/// constant grid renders as uniform mid-gray.
pub fn pgm_bytes(grid: &[f64], height: usize, width: usize) -> Result<Vec<u8>> {
    if grid.len() != height * width {
        return Err(Error::Shape(format!("grid of {} cells is not {height}x{width}", grid.len())));
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let level = |v: f64| -> u8 {
        if !(span > 0.0) {
            128
        } else {
            (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
        }
    };
    let mut out = format!("P2\n{width} {height}\n255\n");
    for r in 0..height {
        let row: Vec<String> = grid[r * width..(r + 1) * width]
            .iter()
            .map(|v| level(*v).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Parse a plain PGM back into `(height, width, levels)`.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<u8>)> {
    let bad = || Error::Shape("malformed PGM".into());
    let mut tok = text.split_ascii_whitespace();
    if tok.next() != Some("P2") {
        return Err(bad());
    }
    let mut num = || -> Result<usize> { tok.next().and_then(|t| t.parse().ok()).ok_or_else(bad) };
    let width = num()?;
    let height = num()?;
    let _max = num()?;
    let levels = (0..width * height).map(|_| num().map(|v| v as u8)).collect::<Result<Vec<_>>>()?;
    Ok((height, width, levels))
}

/// One CSV line per grid row, full precision.
pub fn csv_bytes(grid: &[f64], height: usize, width: usize) -> Result<Vec<u8>> {
    if grid.len() != height * width {
        return Err(Error::Shape(format!("grid of {} cells is not {height}x{width}", grid.len())));
    }
    let mut out = String::new();
    for r in 0..height {
        let row: Vec<String> = grid[r * width..(r + 1) * width].iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_suffix_keeps_dots() {
        assert_eq!(artifact_path(Path::new("a/00.1"), ".voxels.bin"), PathBuf::from("a/00.1.voxels.bin"));
    }

    #[test]
    fn voxel_roundtrip() {
        let grid = SparseVoxelGrid {
            dims: (2, 3, 4),
            channels: 2,
            coords: vec![[0, 1, 2], [1, 2, 3]],
            values: vec![0.5, -1.0, 2.0, 0.25],
            counts: vec![1, 3],
        };
        let bytes = encode_voxels(&grid, [0.16, 0.16, 0.24], Reduce::Mean).unwrap();
        let (h, coords, values) = decode_voxels(&bytes).unwrap();
        assert_eq!(h.dims, [2, 3, 4]);
        assert_eq!(h.num_voxels, 2);
        assert_eq!(coords, grid.coords);
        assert_eq!(values, grid.values);
        assert!(decode_voxels(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn pgm_levels() {
        let b = pgm_bytes(&[0.0, 1.0, 2.0, 1.0], 2, 2).unwrap();
        let (h, w, lv) = parse_pgm(std::str::from_utf8(&b).unwrap()).unwrap();
        assert_eq!((h, w), (2, 2));
        assert_eq!(lv, vec![0, 128, 255, 128]);
        let flat = pgm_bytes(&[0.0; 6], 2, 3).unwrap();
        let (_, _, lv) = parse_pgm(std::str::from_utf8(&flat).unwrap()).unwrap();
        assert!(lv.iter().all(|v| *v == 128));
    }

    #[test]
    fn csv_shape() {
        let b = csv_bytes(&[1.0, 2.5, -3.0, 0.0], 2, 2).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "1,2.5\n-3,0\n");
        assert!(csv_bytes(&[1.0], 2, 2).is_err());
    }
}
