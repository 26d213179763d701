use std::path::{Path, PathBuf};
use std::time::Instant;

use radar_mrf::io::write_atomic;
use radar_mrf::PipelineConfig;
use serde::Serialize;

use crate::encode::{density, load_filtered, pillars, voxels};
use crate::failure::Failure;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scan files or directories holding `.bin` scans
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Timed repetitions per scan
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,

    /// Untimed warm-up runs per scan
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,

    /// Also write the report here
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct StageStats {
    median_ms: f64,
    p95_ms: f64,
    samples: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    profile: String,
    threads: usize,
    scans: usize,
    repetitions: usize,
    points: Vec<usize>,
    kde: StageStats,
    pillarize: StageStats,
    voxelize: StageStats,
    total: StageStats,
}

fn stats(mut ms: Vec<f64>) -> StageStats {
    ms.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        if ms.is_empty() {
            return 0.0;
        }
        let k = ((q * ms.len() as f64).ceil() as usize).clamp(1, ms.len()) - 1;
        ms[k]
    };
    let median = if ms.is_empty() {
        0.0
    } else if ms.len() % 2 == 1 {
        ms[ms.len() / 2]
    } else {
        0.5 * (ms[ms.len() / 2 - 1] + ms[ms.len() / 2])
    };
    StageStats {
        median_ms: median,
        p95_ms: pick(0.95),
        samples: ms.len(),
    }
}

fn collect_scans(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "bin") && !is_artifact(f))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Failure::input("no scans found"));
    }
    Ok(out)
}

/// Outputs of `encode` share the `.bin` extension but are not scans.
fn is_artifact(p: &Path) -> bool {
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    [".pillars.bin", ".voxels.bin", ".density.bin"].iter().any(|s| name.ends_with(s))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run(cfg: &PipelineConfig, args: Args) -> Result<(), Failure> {
    if args.repetitions == 0 {
        return Err(Failure::config("repetitions must be at least 1"));
    }
    let scans = collect_scans(&args.inputs)?;
    let clouds = scans
        .iter()
        .map(|s| load_filtered(cfg, s))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut kde, mut pil, mut vox, mut total) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for pc in &clouds {
        for rep in 0..args.warmup + args.repetitions {
            let t0 = Instant::now();
            let field = density(cfg, pc)?;
            let t_kde = ms_since(t0);
            let t1 = Instant::now();
            let p = pillars(cfg, pc, &field)?;
            let t_pil = ms_since(t1);
            let t2 = Instant::now();
            let v = voxels(cfg, pc, &field)?;
            let t_vox = ms_since(t2);
            std::hint::black_box((&p, &v));
            if rep >= args.warmup {
                kde.push(t_kde);
                pil.push(t_pil);
                vox.push(t_vox);
                total.push(t_kde + t_pil + t_vox);
            }
        }
    }
    let report = Report {
        profile: cfg.profile.clone(),
        threads: rayon::current_num_threads(),
        scans: clouds.len(),
        repetitions: args.repetitions,
        points: clouds.iter().map(|c| c.len()).collect(),
        kde: stats(kde),
        pillarize: stats(pil),
        voxelize: stats(vox),
        total: stats(total),
    };
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| Failure::internal(e.to_string()))?;
    bytes.push(b'\n');
    if let Some(path) = &args.out {
        write_atomic(path, &bytes)?;
    }
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}
