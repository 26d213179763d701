use std::path::PathBuf;

use radar_mrf::cloud::save_scan;
use radar_mrf::io::write_atomic;
use radar_mrf::labels::{to_jsonl, BoxRecord, ZRef};
use radar_mrf::synth::{gen_scene, typical_objects, ObjectSpec, Provenance, SceneSpec};
use radar_mrf::PipelineConfig;

use crate::failure::Failure;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Output directory
    #[arg(short, long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Number of scans to generate
    #[arg(long, default_value_t = 1)]
    pub count: usize,

    /// Objects per scan, cycling through the profile's classes
    #[arg(long, default_value_t = 3)]
    pub objects: usize,

    /// Inclusive range of uniform clutter points per scan
    #[arg(long, value_name = "LO,HI", default_value = "50,150", value_parser = parse_range)]
    pub clutter: (usize, usize),
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: usize = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if lo > hi {
        return Err(format!("{lo} exceeds {hi}"));
    }
    Ok((lo, hi))
}

fn class_objects(cfg: &PipelineConfig) -> Vec<ObjectSpec> {
    let base = typical_objects();
    cfg.anchors
        .iter()
        .map(|a| match base.iter().find(|o| o.class_id == a.class_id && a.class_id < 3) {
            Some(o) => o.clone(),
            // classes beyond the three typical ones are sized from their anchor
            None => ObjectSpec {
                class_id: a.class_id,
                w: (0.9 * a.w, 1.1 * a.w),
                l: (0.9 * a.l, 1.1 * a.l),
                h: (0.9 * a.h, 1.1 * a.h),
                points: (20, 60),
                std: 0.25 * a.w.max(a.l),
                doppler_mean: 3.0,
                doppler_std: 0.5,
            },
        })
        .collect()
}

pub fn run(cfg: &PipelineConfig, args: Args) -> Result<(), Failure> {
    let (lo, hi) = args.clutter;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::input(format!("{}: {e}", args.out_dir.display())))?;
    let pool = class_objects(cfg);
    if pool.is_empty() && args.objects > 0 {
        return Err(Failure::config("profile defines no classes to synthesize"));
    }
    let mut records = Vec::new();
    for k in 0..args.count {
        let spec = SceneSpec {
            roi: cfg.roi,
            schema: cfg.schema.clone(),
            objects: (0..args.objects).map(|i| pool[i % pool.len()].clone()).collect(),
            clutter: (lo, hi),
            clutter_doppler_std: 3.0,
            seed: cfg.seed.wrapping_add(k as u64),
        };
        let scene = gen_scene(&spec)?;
        let frame = format!("{k:06}");
        let bin = args.out_dir.join(format!("{frame}.bin"));
        save_scan(&bin, &scene.cloud)?;
        for (i, b) in scene.boxes.iter().enumerate() {
            let n = scene.provenance.iter().filter(|p| **p == Provenance::Object(i)).count();
            let mut rec = BoxRecord::from_box(&frame, &cfg.class_names()[b.class_id], b, None, ZRef::Bottom);
            rec.num_points = Some(n);
            records.push(rec);
        }
        println!("{}", bin.display());
    }
    let labels = args.out_dir.join("labels.jsonl");
    write_atomic(&labels, to_jsonl(&records)?.as_bytes())?;
    println!("{}", labels.display());
    Ok(())
}
