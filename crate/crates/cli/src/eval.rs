use std::path::PathBuf;

use radar_mrf::eval::{evaluate_named, Detection, GroundTruth, RegionFilter};
use radar_mrf::io::write_atomic;
use radar_mrf::labels::read_records;
use radar_mrf::PipelineConfig;

use crate::failure::Failure;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Detection file (JSON lines with a `score` per record)
    pub detections: PathBuf,

    /// Ground-truth label file (JSON lines)
    pub labels: PathBuf,

    /// Region to evaluate (repeatable) [default: every region with bounds]
    #[arg(long = "region")]
    pub regions: Vec<String>,

    /// Recall sample count (40, or 11 for the older protocol)
    #[arg(long)]
    pub recall_positions: Option<usize>,

    /// Ignore boxes farther than this many meters from the sensor
    #[arg(long)]
    pub max_range: Option<f64>,

    /// Drop ground truth whose record says it contains no radar points
    #[arg(long)]
    pub require_points_in_gt: bool,

    /// Write the full report as JSON here
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: Args) -> Result<(), Failure> {
    let mut ecfg = cfg.eval.clone();
    if let Some(r) = args.recall_positions {
        ecfg.recall_positions = r;
    }
    if let Some(m) = args.max_range {
        ecfg.max_range_m = Some(m);
    }
    if args.require_points_in_gt {
        ecfg.require_points_in_gt = true;
    }
    let names: Vec<String> = if args.regions.is_empty() {
        ecfg.regions
            .iter()
            .filter(|r| {
                let set = r.filter != RegionFilter::Unset;
                if !set {
                    log::warn!("skipping region `{}`: no bounds configured", r.name);
                }
                set
            })
            .map(|r| r.name.clone())
            .collect()
    } else {
        for name in &args.regions {
            match ecfg.regions.iter().find(|r| &r.name == name) {
                None => return Err(Failure::config(format!("unknown evaluation region `{name}`"))),
                Some(r) if r.filter == RegionFilter::Unset => {
                    return Err(Failure::config(format!("evaluation region `{name}` has no bounds configured")))
                }
                Some(_) => {}
            }
        }
        args.regions.clone()
    };

    let classes = ecfg.classes.clone();
    let dets: Vec<Detection> = read_records(&args.detections, &classes)
        .map_err(|e| Failure::from(e).at(&args.detections))?
        .into_iter()
        .map(|r| {
            let score = r.score.ok_or_else(|| {
                Failure::input(format!("{}: detection in frame {} has no score", args.detections.display(), r.frame))
            })?;
            Ok(Detection {
                frame: r.frame,
                bbox: r.bbox,
                score,
            })
        })
        .collect::<Result<_, Failure>>()?;
    let gts: Vec<GroundTruth> = read_records(&args.labels, &classes)
        .map_err(|e| Failure::from(e).at(&args.labels))?
        .into_iter()
        .map(|r| GroundTruth {
            frame: r.frame,
            bbox: r.bbox,
            num_points: r.num_points,
        })
        .collect();

    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let report = evaluate_named(&dets, &gts, &ecfg, &refs)?;
    print!("{}", report.table());
    if let Some(path) = &args.out {
        let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| Failure::internal(e.to_string()))?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)?;
    }
    Ok(())
}
