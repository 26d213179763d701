use std::path::PathBuf;

use radar_mrf::export::{artifact_path, csv_bytes, pgm_bytes};
use radar_mrf::io::write_atomic;
use radar_mrf::kde::bev_max_grid;
use radar_mrf::PipelineConfig;

use crate::encode::{density, load_filtered, stem_of};
use crate::failure::Failure;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scan file
    pub scan: PathBuf,

    /// Output stem; writes `<stem>.pgm` and `<stem>.csv` [default: the scan's stem]
    #[arg(short, long)]
    pub out: Option<PathBuf>,

    /// Grid rows and columns as HxW [default: the pillar canvas]
    #[arg(long, value_name = "HxW")]
    pub resolution: Option<String>,

    /// Which bandwidth's densities to draw (index into the bandwidth list)
    #[arg(long, default_value_t = 0)]
    pub band: usize,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::config(format!("resolution `{s}` is not of the form HxW"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}

pub fn run(cfg: &PipelineConfig, args: Args) -> Result<(), Failure> {
    let (h, w) = match &args.resolution {
        Some(s) => parse_resolution(s)?,
        None => cfg.pillar_config().canvas()?,
    };
    if args.band >= cfg.bandwidths.len() {
        return Err(Failure::config(format!(
            "band {} requested but only {} bandwidths are configured",
            args.band,
            cfg.bandwidths.len()
        )));
    }
    let pc = load_filtered(cfg, &args.scan)?;
    let field = density(cfg, &pc).map_err(|e| Failure::from(e).at(&args.scan))?;
    let grid = bev_max_grid(&pc, &field.normalized_column(args.band), &cfg.roi, h, w)?;
    let stem = args.out.unwrap_or_else(|| PathBuf::from(stem_of(&args.scan)));
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::input(format!("{}: {e}", parent.display())))?;
    }
    let pgm = artifact_path(&stem, ".pgm");
    let csv = artifact_path(&stem, ".csv");
    write_atomic(&pgm, &pgm_bytes(&grid, h, w)?)?;
    write_atomic(&csv, &csv_bytes(&grid, h, w)?)?;
    println!("{}", pgm.display());
    println!("{}", csv.display());
    Ok(())
}
