use std::collections::BTreeMap;
use std::path::PathBuf;

use radar_mrf::io::write_atomic;
use radar_mrf::labels::read_records;
use radar_mrf::targets::{assign_targets, generate_anchors};
use radar_mrf::{Box3D, PipelineConfig};
use serde_json::json;

use crate::failure::Failure;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Ground-truth label file (JSON lines)
    pub labels: PathBuf,

    /// Output JSON file
    #[arg(short, long, default_value = "assignments.json")]
    pub out: PathBuf,
}

pub fn run(cfg: &PipelineConfig, args: Args) -> Result<(), Failure> {
    let records = read_records(&args.labels, cfg.class_names()).map_err(|e| Failure::from(e).at(&args.labels))?;
    let mut frames: BTreeMap<String, Vec<Box3D>> = BTreeMap::new();
    for r in records {
        frames.entry(r.frame).or_default().push(r.bbox);
    }
    let (h, w) = cfg.anchor_canvas()?;
    let grid = generate_anchors(&cfg.anchors, h, w, &cfg.roi)?;
    let mut out = serde_json::Map::new();
    for (frame, gts) in &frames {
        let a = assign_targets(&grid, gts, &cfg.anchors, cfg.match_metric)?;
        log::info!("frame {frame}: {} boxes, {} positive anchors", gts.len(), a.num_positive());
        out.insert(frame.clone(), a.to_json());
    }
    let doc = json!({
        "profile": cfg.profile,
        "anchor_grid": {
            "height": grid.height,
            "width": grid.width,
            "stride": grid.stride,
            "origin": grid.origin,
            "layout": "class, row, col, rotation",
            "anchors": cfg.anchors,
        },
        "match_metric": cfg.match_metric,
        "frames": out,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Failure::internal(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&args.out, &bytes)?;
    println!("{}", args.out.display());
    Ok(())
}
