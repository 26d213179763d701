//! Point-wise kernel density features.
//!
//! For every point `p` the raw density is
//!
//! ```text
//! rho(p) = 1 / (M_p R^3) * sum_i prod_t exp(-((t - t_i) / R_t)^2)
//! ```
//!
//! over the `M_p` other points whose x, y and z each differ from `p` by at
//! most `R` (a Chebyshev cube, not a ball). `R_t` equals `R` unless a
//! per-dimension override is configured. `M_p = 0` gives `rho = 0`.
//! Raw densities are then z-scored per bandwidth channel.

use rustc_hash::FxHashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Roi3D;
use crate::schema::FeatureSchema;

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    /// Bandwidth and neighbor-cube half-width, meters.
    pub radius: f64,
    /// Fields entering the kernel product; must contain x, y, z.
    pub kernel_dims: Vec<String>,
    pub epsilon: f64,
    pub exclude_self: bool,
    /// Optional kernel scale per entry of `kernel_dims`. The spatial gate and
    /// the `R^3` normalizer always use `radius`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_bandwidths: Option<Vec<f64>>,
}

impl KdeConfig {
    pub fn new(radius: f64, kernel_dims: Vec<String>) -> Self {
        Self {
            radius,
            kernel_dims,
            epsilon: DEFAULT_EPSILON,
            exclude_self: true,
            dim_bandwidths: None,
        }
    }

    /// x, y, z plus the schema's Doppler field when it has one.
    pub fn for_schema(schema: &FeatureSchema, radius: f64) -> Self {
        let mut dims: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        if let Some(d) = schema.doppler_field() {
            dims.push(d.to_string());
        }
        Self::new(radius, dims)
    }

    pub fn spatial(radius: f64) -> Self {
        Self::new(radius, vec!["x".into(), "y".into(), "z".into()])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Config(format!("KDE radius must be positive, got {}", self.radius)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("KDE epsilon must be positive, got {}", self.epsilon)));
        }
        for axis in ["x", "y", "z"] {
            if !self.kernel_dims.iter().any(|d| d == axis) {
                return Err(Error::Config(format!("kernel dimensions must include `{axis}`")));
            }
        }
        if let Some(bw) = &self.dim_bandwidths {
            if bw.len() != self.kernel_dims.len() {
                return Err(Error::Config(format!(
                    "{} per-dimension bandwidths for {} kernel dimensions",
                    bw.len(),
                    self.kernel_dims.len()
                )));
            }
            if bw.iter().any(|b| !(*b > 0.0)) {
                return Err(Error::Config("per-dimension bandwidths must be positive".into()));
            }
        }
        Ok(())
    }

    /// Column index and kernel scale for every kernel dimension.
    fn resolve(&self, schema: &FeatureSchema) -> Result<Vec<(usize, f64)>> {
        self.validate()?;
        self.kernel_dims
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let col = schema.require(name)?;
                let scale = self
                    .dim_bandwidths
                    .as_ref()
                    .map_or(self.radius, |bw| bw[k]);
                Ok((col, scale))
            })
            .collect()
    }
}

type CellKey = (i64, i64, i64);

/// Uniform cubic bucketing of point indices.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell_size: f64,
    cells: FxHashMap<CellKey, Vec<usize>>,
}

impl GridIndex {
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    #[inline]
    pub fn key(&self, p: [f64; 3]) -> CellKey {
        (
            (p[0] / self.cell_size).floor() as i64,
            (p[1] / self.cell_size).floor() as i64,
            (p[2] / self.cell_size).floor() as i64,
        )
    }

    pub fn cell(&self, key: CellKey) -> Option<&[usize]> {
        self.cells.get(&key).map(Vec::as_slice)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, &Vec<usize>)> {
        self.cells.iter()
    }

    /// Indices of every point in cells that can hold a point within Chebyshev
    /// distance `reach` of `p`, in a fixed cell order.
    pub fn candidates(&self, p: [f64; 3], reach: f64, out: &mut Vec<usize>) {
        out.clear();
        let lo = self.key([p[0] - reach, p[1] - reach, p[2] - reach]);
        let hi = self.key([p[0] + reach, p[1] + reach, p[2] + reach]);
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                for cz in lo.2..=hi.2 {
                    if let Some(ix) = self.cells.get(&(cx, cy, cz)) {
                        out.extend_from_slice(ix);
                    }
                }
            }
        }
    }
}

/// Bucket every point by `floor(coord / cell_size)`. Indices inside a cell are
/// ascending.
pub fn build_grid_index(pc: &PointCloud, cell_size: f64) -> Result<GridIndex> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(Error::Config(format!("cell size must be positive, got {cell_size}")));
    }
    let mut grid = GridIndex {
        cell_size,
        cells: FxHashMap::default(),
    };
    for i in 0..pc.len() {
        let k = grid.key(pc.xyz(i));
        grid.cells.entry(k).or_default().push(i);
    }
    Ok(grid)
}

/// Kernel-dimension values, scaled by their inverse bandwidths, packed per point.
struct KernelTable {
    dims: usize,
    scaled: Vec<f64>,
}

impl KernelTable {
    fn new(pc: &PointCloud, resolved: &[(usize, f64)]) -> Self {
        let dims = resolved.len();
        let mut scaled = Vec::with_capacity(pc.len() * dims);
        for r in pc.rows() {
            for &(col, scale) in resolved {
                scaled.push(r[col] / scale);
            }
        }
        Self { dims, scaled }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.scaled[i * self.dims..(i + 1) * self.dims]
    }
}

/// Raw densities using a grid index with cell size `R`.
pub fn kde_densities(pc: &PointCloud, cfg: &KdeConfig) -> Result<Vec<f64>> {
    let resolved = cfg.resolve(pc.schema())?;
    if pc.is_empty() {
        return Ok(Vec::new());
    }
    // slightly oversized cells keep every gate-passing pair within adjacent
    // cells despite rounding in the floor division
    let cell = cfg.radius * (1.0 + 1e-9);
    if let Some(d) = dense_densities(pc, cfg, &resolved, cell) {
        return Ok(d);
    }
    let grid = build_grid_index(pc, cell)?;
    Ok(densities_with_index(pc, cfg, &resolved, &grid))
}

/// Cells per point above which the dense layout gives way to the hash grid.
const DENSE_CELLS_PER_POINT: usize = 16;

/// Points sorted into a dense cell array with z as the fastest axis, so the
/// 3x3x3 neighborhood of a cell is 9 contiguous runs. `None` when the cloud's
/// extent would need too many empty cells.
fn dense_densities(pc: &PointCloud, cfg: &KdeConfig, resolved: &[(usize, f64)], cell: f64) -> Option<Vec<f64>> {
    let n = pc.len();
    let keys: Vec<[i64; 3]> = (0..n)
        .map(|i| pc.xyz(i).map(|v| (v / cell).floor() as i64))
        .collect();
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for k in &keys {
        for a in 0..3 {
            lo[a] = lo[a].min(k[a]);
            hi[a] = hi[a].max(k[a]);
        }
    }
    let dims = [0, 1, 2].map(|a| (hi[a] - lo[a] + 1) as u128);
    let total = dims[0] * dims[1] * dims[2];
    if total > (DENSE_CELLS_PER_POINT * n + 4096) as u128 {
        return None;
    }
    let [nx, ny, nz] = dims.map(|d| d as usize);
    let id = |x: usize, y: usize, z: usize| (x * ny + y) * nz + z;
    let local: Vec<[usize; 3]> = keys
        .iter()
        .map(|k| [0, 1, 2].map(|a| (k[a] - lo[a]) as usize))
        .collect();

    let mut starts = vec![0usize; nx * ny * nz + 1];
    for l in &local {
        starts[id(l[0], l[1], l[2]) + 1] += 1;
    }
    for c in 0..nx * ny * nz {
        starts[c + 1] += starts[c];
    }
    let mut fill = starts.clone();
    let mut order = vec![0usize; n];
    for (i, l) in local.iter().enumerate() {
        let c = id(l[0], l[1], l[2]);
        order[fill[c]] = i;
        fill[c] += 1;
    }

    let table = KernelTable::new(pc, resolved);
    let d = table.dims;
    let xyz: Vec<[f64; 3]> = order.iter().map(|&i| pc.xyz(i)).collect();
    let kern: Vec<f64> = order.iter().flat_map(|&i| table.row(i).iter().copied()).collect();
    let r = cfg.radius;
    let norm = r * r * r;

    let sorted: Vec<f64> = (0..n)
        .into_par_iter()
        .with_min_len(256)
        .map(|s| {
            let [x, y, z] = local[order[s]];
            let p = xyz[s];
            let tp = &kern[s * d..(s + 1) * d];
            let (z0, z1) = (z.saturating_sub(1), (z + 1).min(nz - 1));
            let mut sum = 0.0;
            let mut m = 0usize;
            for cx in x.saturating_sub(1)..=(x + 1).min(nx - 1) {
                for cy in y.saturating_sub(1)..=(y + 1).min(ny - 1) {
                    for j in starts[id(cx, cy, z0)]..starts[id(cx, cy, z1) + 1] {
                        if cfg.exclude_self && j == s {
                            continue;
                        }
                        let q = xyz[j];
                        if (p[0] - q[0]).abs() > r || (p[1] - q[1]).abs() > r || (p[2] - q[2]).abs() > r {
                            continue;
                        }
                        let tq = &kern[j * d..(j + 1) * d];
                        let mut e = 0.0;
                        for k in 0..d {
                            let u = tp[k] - tq[k];
                            e += u * u;
                        }
                        sum += (-e).exp();
                        m += 1;
                    }
                }
            }
            if m == 0 {
                0.0
            } else {
                sum / (m as f64 * norm)
            }
        })
        .collect();

    let mut out = vec![0.0; n];
    for (s, &i) in order.iter().enumerate() {
        out[i] = sorted[s];
    }
    Some(out)
}

fn densities_with_index(
    pc: &PointCloud,
    cfg: &KdeConfig,
    resolved: &[(usize, f64)],
    grid: &GridIndex,
) -> Vec<f64> {
    let n = pc.len();
    let r = cfg.radius;
    let norm = r * r * r;
    let table = KernelTable::new(pc, resolved);
    let xyz: Vec<[f64; 3]> = (0..n).map(|i| pc.xyz(i)).collect();

    // Work is grouped by occupied cell so the neighborhood gather is shared by
    // every point of the cell. Cells are visited in sorted order; each point's
    // summation order depends only on the grid, never on the schedule.
    let mut keys: Vec<(&CellKey, &Vec<usize>)> = grid.iter().collect();
    keys.sort_unstable_by_key(|(k, _)| **k);

    let per_cell: Vec<Vec<(usize, f64)>> = keys
        .par_iter()
        .map(|(key, members)| {
            let mut cand = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(ix) = grid.cell((key.0 + dx, key.1 + dy, key.2 + dz)) {
                            cand.extend_from_slice(ix);
                        }
                    }
                }
            }
            members
                .iter()
                .map(|&i| {
                    let p = xyz[i];
                    let tp = table.row(i);
                    let mut sum = 0.0;
                    let mut m = 0usize;
                    for &j in &cand {
                        if cfg.exclude_self && j == i {
                            continue;
                        }
                        let q = xyz[j];
                        if (p[0] - q[0]).abs() > r || (p[1] - q[1]).abs() > r || (p[2] - q[2]).abs() > r {
                            continue;
                        }
                        let tq = table.row(j);
                        let mut e = 0.0;
                        for k in 0..tp.len() {
                            let d = tp[k] - tq[k];
                            e += d * d;
                        }
                        sum += (-e).exp();
                        m += 1;
                    }
                    let rho = if m == 0 { 0.0 } else { sum / (m as f64 * norm) };
                    (i, rho)
                })
                .collect()
        })
        .collect();

    let mut out = vec![0.0; n];
    for cell in per_cell {
        for (i, rho) in cell {
            out[i] = rho;
        }
    }
    out
}

/// Exhaustive O(N^2) evaluation of the same density, without any index.
pub fn kde_bruteforce(pc: &PointCloud, cfg: &KdeConfig) -> Result<Vec<f64>> {
    let resolved = cfg.resolve(pc.schema())?;
    let r = cfg.radius;
    let n = pc.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = pc.row(i);
        let mut sum = 0.0;
        let mut m = 0usize;
        for j in 0..n {
            if cfg.exclude_self && i == j {
                continue;
            }
            let b = pc.row(j);
            if (0..3).any(|k| (a[k] - b[k]).abs() > r) {
                continue;
            }
            let mut prod = 1.0;
            for &(col, scale) in &resolved {
                let u = (a[col] - b[col]) / scale;
                prod *= (-(u * u)).exp();
            }
            sum += prod;
            m += 1;
        }
        out.push(if m == 0 { 0.0 } else { sum / (m as f64 * r.powi(3)) });
    }
    Ok(out)
}

/// Z-score with population variance: `(rho - mean) / sqrt(var + eps)`.
pub fn normalize_densities(raw: &[f64], epsilon: f64) -> Vec<f64> {
    if raw.is_empty() {
        return Vec::new();
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let denom = (var + epsilon).sqrt();
    raw.iter().map(|r| (r - mean) / denom).collect()
}

/// Raw and normalized densities, one column per bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub bandwidths: Vec<f64>,
    num_points: usize,
    /// Row-major `N_p x B`.
    pub raw: Vec<f64>,
    /// Row-major `N_p x B`.
    pub normalized: Vec<f64>,
}

impl DensityField {
    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_bands(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn raw_column(&self, b: usize) -> Vec<f64> {
        column(&self.raw, self.num_bands(), b)
    }

    pub fn normalized_column(&self, b: usize) -> Vec<f64> {
        column(&self.normalized, self.num_bands(), b)
    }

    pub fn normalized_row(&self, i: usize) -> &[f64] {
        let b = self.num_bands();
        &self.normalized[i * b..(i + 1) * b]
    }
}

fn column(m: &[f64], width: usize, b: usize) -> Vec<f64> {
    m.iter().skip(b).step_by(width).copied().collect()
}

/// One density channel per configuration, each normalized independently.
pub fn kde_multiband(pc: &PointCloud, cfgs: &[KdeConfig]) -> Result<DensityField> {
    if cfgs.is_empty() {
        return Err(Error::Config("at least one KDE bandwidth is required".into()));
    }
    let n = pc.len();
    let bands = cfgs.len();
    let mut raw = vec![0.0; n * bands];
    let mut normalized = vec![0.0; n * bands];
    for (b, cfg) in cfgs.iter().enumerate() {
        let col = kde_densities(pc, cfg)?;
        let norm = normalize_densities(&col, cfg.epsilon);
        for i in 0..n {
            raw[i * bands + b] = col[i];
            normalized[i * bands + b] = norm[i];
        }
    }
    Ok(DensityField {
        bandwidths: cfgs.iter().map(|c| c.radius).collect(),
        num_points: n,
        raw,
        normalized,
    })
}

/// BEV grid (`height` rows along y, `width` columns along x) holding the
/// maximum of `values` over the points in each cell; empty cells hold 0.
pub fn bev_max_grid(pc: &PointCloud, values: &[f64], roi: &Roi3D, height: usize, width: usize) -> Result<Vec<f64>> {
    if values.len() != pc.len() {
        return Err(Error::Shape(format!(
            "{} values for {} points",
            values.len(),
            pc.len()
        )));
    }
    if height == 0 || width == 0 {
        return Err(Error::Config("heatmap resolution must be positive".into()));
    }
    let [ex, ey, _] = roi.extent();
    let cx = ex / width as f64;
    let cy = ey / height as f64;
    let mut grid = vec![f64::NEG_INFINITY; height * width];
    for i in 0..pc.len() {
        let [x, y, _] = pc.xyz(i);
        if !roi.contains_bev(x, y) {
            continue;
        }
        let col = crate::grid::cell_index(x - roi.x_min, cx, width);
        let row = crate::grid::cell_index(y - roi.y_min, cy, height);
        let slot = &mut grid[row * width + col];
        *slot = slot.max(values[i]);
    }
    for v in grid.iter_mut() {
        if *v == f64::NEG_INFINITY {
            *v = 0.0;
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Field;

    fn cloud(rows: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_rows(FeatureSchema::xyz(), rows).unwrap()
    }

    #[test]
    fn grid_floor_semantics() {
        let g = build_grid_index(&cloud(&[[0.0, 0.0, 0.0]]), 1.0).unwrap();
        assert_eq!(g.cell((0, 0, 0)), Some(&[0usize][..]));
        let g = build_grid_index(&cloud(&[[0.1, 0.0, 0.0], [1.1, 0.0, 0.0]]), 1.0).unwrap();
        assert_eq!(g.cell((0, 0, 0)), Some(&[0usize][..]));
        assert_eq!(g.cell((1, 0, 0)), Some(&[1usize][..]));
        let g = build_grid_index(&cloud(&[[-0.1, -1.5, 0.0]]), 1.0).unwrap();
        assert_eq!(g.cell((-1, -2, 0)), Some(&[0usize][..]));
        assert!(build_grid_index(&cloud(&[]), 1.0).unwrap().is_empty());
        assert!(build_grid_index(&cloud(&[]), 0.0).is_err());
    }

    #[test]
    fn single_point_has_zero_density() {
        let pc = cloud(&[[3.0, 1.0, 0.0]]);
        for r in [0.6, 1.0, 2.0] {
            assert_eq!(kde_densities(&pc, &KdeConfig::spatial(r)).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn coincident_pair_has_unit_density() {
        let pc = cloud(&[[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]]);
        let cfg = KdeConfig::spatial(1.0);
        assert_eq!(kde_densities(&pc, &cfg).unwrap(), vec![1.0, 1.0]);
        assert_eq!(kde_bruteforce(&pc, &cfg).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn unit_spaced_pair() {
        // e^-1 for each of the two points: the neighbor sits exactly on the gate
        let pc = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let cfg = KdeConfig::spatial(1.0);
        let d = kde_densities(&pc, &cfg).unwrap();
        assert!((d[0] - (-1f64).exp()).abs() < 1e-15);
        assert!((d[0] - 0.367879).abs() < 1e-6);
        assert_eq!(d[0], d[1]);
    }

    #[test]
    fn self_inclusion_is_configurable() {
        let pc = cloud(&[[0.0, 0.0, 0.0]]);
        let mut cfg = KdeConfig::spatial(1.0);
        cfg.exclude_self = false;
        assert_eq!(kde_densities(&pc, &cfg).unwrap(), vec![1.0]);
    }

    #[test]
    fn unknown_dimension_errors() {
        let pc = cloud(&[[0.0, 0.0, 0.0]]);
        let cfg = KdeConfig::new(1.0, vec!["x".into(), "y".into(), "z".into(), "v_r".into()]);
        assert!(matches!(kde_densities(&pc, &cfg), Err(Error::UnknownField(f)) if f == "v_r"));
        assert!(matches!(kde_bruteforce(&pc, &cfg), Err(Error::UnknownField(_))));
    }

    #[test]
    fn doppler_dimension_enters_kernel() {
        let schema = FeatureSchema::new(vec![
            Field::new("x", "m"),
            Field::new("y", "m"),
            Field::new("z", "m"),
            Field::new("v_r", "m/s"),
        ])
        .unwrap();
        let pc = PointCloud::from_rows(schema.clone(), &[[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 2.0]]).unwrap();
        let cfg = KdeConfig::for_schema(&schema, 1.0);
        assert_eq!(cfg.kernel_dims.len(), 4);
        let d = kde_densities(&pc, &cfg).unwrap();
        assert!((d[0] - (-4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn per_dimension_bandwidth_override() {
        let schema = FeatureSchema::tj4d();
        let pc = PointCloud::from_rows(schema.clone(), &[[0.0, 0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 2.0, 1.0]]).unwrap();
        let mut cfg = KdeConfig::for_schema(&schema, 1.0);
        cfg.dim_bandwidths = Some(vec![1.0, 1.0, 1.0, 2.0]);
        let d = kde_densities(&pc, &cfg).unwrap();
        assert!((d[0] - (-1f64).exp()).abs() < 1e-15);
        cfg.dim_bandwidths = Some(vec![1.0]);
        assert!(kde_densities(&pc, &cfg).is_err());
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_densities(&[1.0, 1.0], 1e-5), vec![0.0, 0.0]);
        assert_eq!(normalize_densities(&[0.0, 2.0], 0.0), vec![-1.0, 1.0]);
        assert_eq!(normalize_densities(&[5.0], 1e-5), vec![0.0]);
        assert_eq!(normalize_densities(&[5.0], 0.0 + 1.0), vec![0.0]);
        assert!(normalize_densities(&[], 1e-5).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(KdeConfig::spatial(0.0).validate().is_err());
        assert!(KdeConfig::new(1.0, vec!["x".into(), "y".into()]).validate().is_err());
        let mut c = KdeConfig::spatial(1.0);
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn multiband_layout() {
        let pc = cloud(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [5.0, 5.0, 0.0]]);
        let f = kde_multiband(&pc, &[KdeConfig::spatial(1.5), KdeConfig::spatial(2.0)]).unwrap();
        assert_eq!(f.bandwidths, vec![1.5, 2.0]);
        assert_eq!(f.raw.len(), 6);
        assert_eq!(f.raw_column(0), kde_densities(&pc, &KdeConfig::spatial(1.5)).unwrap());
        assert_eq!(f.raw_column(1), kde_densities(&pc, &KdeConfig::spatial(2.0)).unwrap());
        let same = kde_multiband(&pc, &[KdeConfig::spatial(1.0), KdeConfig::spatial(1.0)]).unwrap();
        assert_eq!(same.normalized_column(0), same.normalized_column(1));
        assert!(kde_multiband(&pc, &[]).is_err());
    }

    #[test]
    fn bev_grid_takes_cell_max() {
        let roi = Roi3D::new((0.0, 4.0), (0.0, 4.0), (-1.0, 1.0)).unwrap();
        let pc = cloud(&[[0.5, 0.5, 0.0], [0.7, 0.2, 0.0], [3.5, 2.5, 0.0]]);
        let g = bev_max_grid(&pc, &[-1.0, 2.0, 3.0], &roi, 4, 4).unwrap();
        assert_eq!(g[0], 2.0);
        assert_eq!(g[2 * 4 + 3], 3.0);
        assert_eq!(g.iter().filter(|v| **v != 0.0).count(), 2);
    }
}
