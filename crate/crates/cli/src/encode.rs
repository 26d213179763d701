use std::path::{Path, PathBuf};

use radar_mrf::cloud::{filter_roi, load_scan};
use radar_mrf::export::{write_density, write_pillars, write_voxels, PillarMeta};
use radar_mrf::voxels::voxelize_channels;
use radar_mrf::{kde_multiband, pillarize, DensityField, PillarTensor, PipelineConfig, PointCloud, SparseVoxelGrid};
use rayon::prelude::*;
use serde_json::json;

use crate::failure::{combine, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scan files (`<stem>.bin`, with an optional `<stem>.schema.json`)
    #[arg(required = true)]
    pub scans: Vec<PathBuf>,

    /// Output directory for the artifacts
    #[arg(short, long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub struct Encoded {
    pub field: DensityField,
    pub pillars: PillarTensor,
    pub voxels: SparseVoxelGrid,
}

/// Load a scan and keep the points inside the profile's region.
pub fn load_filtered(cfg: &PipelineConfig, path: &Path) -> Result<PointCloud, Failure> {
    let pc = load_scan(path, Some(&cfg.schema)).map_err(|e| Failure::from(e).at(path))?;
    let kept = filter_roi(&pc, &cfg.roi);
    if kept.len() < pc.len() {
        log::info!("{}: dropped {} points outside the region", path.display(), pc.len() - kept.len());
    }
    Ok(kept)
}

pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scan".into())
}

pub fn density(cfg: &PipelineConfig, pc: &PointCloud) -> radar_mrf::Result<DensityField> {
    kde_multiband(pc, &cfg.kde_configs())
}

pub fn pillars(cfg: &PipelineConfig, pc: &PointCloud, field: &DensityField) -> radar_mrf::Result<PillarTensor> {
    let extra = cfg.pillar.append_density.then_some(field);
    pillarize(pc, extra, &cfg.pillar_config())
}

/// One voxel channel per bandwidth.
pub fn voxels(cfg: &PipelineConfig, pc: &PointCloud, field: &DensityField) -> radar_mrf::Result<SparseVoxelGrid> {
    voxelize_channels(pc, &field.normalized, field.num_bands(), &cfg.voxel_config())
}

pub fn encode_cloud(cfg: &PipelineConfig, pc: &PointCloud) -> radar_mrf::Result<Encoded> {
    let field = density(cfg, pc)?;
    let pillars = pillars(cfg, pc, &field)?;
    let voxels = voxels(cfg, pc, &field)?;
    Ok(Encoded { field, pillars, voxels })
}

fn feature_names(cfg: &PipelineConfig, pc: &PointCloud) -> Vec<String> {
    let mut names: Vec<String> = pc.schema().names().map(str::to_string).collect();
    if cfg.pillar.append_density {
        names.extend(cfg.bandwidths.iter().map(|r| format!("density_r{r}")));
    }
    names.extend(["x_c", "y_c", "z_c", "x_p", "y_p", "z_p"].map(String::from));
    names
}

fn encode_one(cfg: &PipelineConfig, scan: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let pc = load_filtered(cfg, scan)?;
    let enc = encode_cloud(cfg, &pc).map_err(|e| Failure::from(e).at(scan))?;
    let stem = out_dir.join(stem_of(scan));
    let channels = json!({
        "c1": cfg.channels.c1,
        "c2_1": cfg.channels.c2_1,
        "c2_2": cfg.channels.c2_2,
        "c_f": cfg.channels.fused(),
    });
    let meta = PillarMeta::new(
        &enc.pillars,
        feature_names(cfg, &pc),
        [cfg.pillar.cell_x, cfg.pillar.cell_y],
        cfg.seed,
        channels,
    )?;
    let mut written = Vec::new();
    written.extend(write_density(&stem, &enc.field, &cfg.kde_configs())?);
    written.extend(write_pillars(&stem, &enc.pillars, &meta)?);
    let cells = [cfg.voxel.cell_x, cfg.voxel.cell_y, cfg.voxel.cell_z];
    written.push(write_voxels(&stem, &enc.voxels, cells, cfg.voxel.reduce)?);
    log::info!(
        "{}: {} points, {} pillars, {} voxels",
        scan.display(),
        pc.len(),
        enc.pillars.num_pillars(),
        enc.voxels.len()
    );
    Ok(written)
}

pub fn run(cfg: &PipelineConfig, args: Args) -> Result<(), Failure> {
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::input(format!("{}: {e}", args.out_dir.display())))?;
    let results: Vec<Result<Vec<PathBuf>, Failure>> = args
        .scans
        .par_iter()
        .map(|scan| encode_one(cfg, scan, &args.out_dir))
        .collect();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
            }
            Err(f) => failures.push(f),
        }
    }
    combine(failures)
}
