use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radar_mrf::cloud::{load_scan, save_scan};
use radar_mrf::export::{parse_pgm, read_density, read_pillars};
use radar_mrf::geometry::Box3D;
use radar_mrf::labels::read_records;
use radar_mrf::schema::FeatureSchema;
use radar_mrf::PointCloud;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radar-mrf"))
        .args(args)
        .env_remove("RUST_LOG")
        .env_remove("RADAR_MRF_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["synth", "--out-dir", p(dir)];
    args.extend_from_slice(extra);
    let o = cli(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("000000.bin")
}

#[test]
fn help_on_every_subcommand() {
    assert_eq!(code(&cli(&["--help"])), 0);
    for sub in ["encode", "kde-heatmap", "assign", "eval", "synth", "bench"] {
        let o = cli(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn usage_errors_are_input_errors() {
    assert_eq!(code(&cli(&["encode"])), 2);
    assert_eq!(code(&cli(&["no-such-command"])), 2);
}

#[test]
fn encode_writes_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scan = synth(dir.path(), &[]);
    let out = dir.path().join("out");
    let o = cli(&["encode", p(&scan), "--out-dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for suffix in [".density.bin", ".pillars.bin", ".voxels.bin"] {
        assert!(out.join(format!("000000{suffix}")).is_file(), "{suffix}");
    }
    let (meta, values) = read_pillars(&out.join("000000")).unwrap();
    assert_eq!((meta.h, meta.w), (320, 320));
    assert_eq!(values.len(), meta.d * meta.p * meta.n);
    assert_eq!(meta.d, 7 + 6);
}

#[test]
fn schema_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("xyz.bin");
    let pc = PointCloud::from_rows(FeatureSchema::xyz(), &[[10.0, 0.0, 0.0], [11.0, 0.5, 0.0]]).unwrap();
    save_scan(&scan, &pc).unwrap();
    let o = cli(&["encode", p(&scan), "--out-dir", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("v_r"), "{}", stderr(&o));

    let bad = dir.path().join("torn.bin");
    std::fs::write(&bad, [0u8; 30]).unwrap();
    let o = cli(&["encode", p(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("30 bytes"), "{}", stderr(&o));
}

#[test]
fn bandwidth_override_reaches_density_header() {
    let dir = tempfile::tempdir().unwrap();
    let scan = synth(dir.path(), &[]);
    let o = cli(&["encode", p(&scan), "--out-dir", p(dir.path()), "--bandwidths", "0.6,1.0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (meta, values) = read_density(&dir.path().join("000000")).unwrap();
    assert_eq!(meta.bands, 2);
    assert_eq!(meta.bandwidths, vec![0.6, 1.0]);
    assert_eq!(values.len(), meta.num_points * 2);
}

#[test]
fn bad_config_values_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let scan = synth(dir.path(), &[]);
    assert_eq!(code(&cli(&["encode", p(&scan), "--bandwidths", "-1"])), 3);
    assert_eq!(code(&cli(&["encode", p(&scan), "--kernel-dims", "x,y"])), 3);
    assert_eq!(code(&cli(&["encode", p(&scan), "--set", "roi.x_min=99"])), 3);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(code(&cli(&["encode", p(&scan), "--config", p(&cfg)])), 3);
}

#[test]
fn empty_scan_heatmap_is_mid_gray() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("empty.bin");
    save_scan(&scan, &PointCloud::empty(FeatureSchema::vod())).unwrap();
    let stem = dir.path().join("heat");
    let o = cli(&["kde-heatmap", p(&scan), "--out", p(&stem), "--resolution", "8x8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, w, px) = parse_pgm(&std::fs::read_to_string(dir.path().join("heat.pgm")).unwrap()).unwrap();
    assert_eq!((h, w), (8, 8));
    assert!(px.iter().all(|&v| v == 128));
    let csv = std::fs::read_to_string(dir.path().join("heat.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn cluster_cells_outshine_clutter() {
    let dir = tempfile::tempdir().unwrap();
    let scan = synth(dir.path(), &["--objects", "1", "--clutter", "100,100", "--seed", "21"]);
    let stem = dir.path().join("heat");
    let o = cli(&["kde-heatmap", p(&scan), "--out", p(&stem), "--resolution", "320x320"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, w, px) = parse_pgm(&std::fs::read_to_string(dir.path().join("heat.pgm")).unwrap()).unwrap();
    assert_eq!((h, w), (320, 320));

    // cell ownership from the labeled box: 0.16 m cells over the VoD region
    let classes: Vec<String> = ["Car", "Pedestrian", "Cyclist"].map(String::from).to_vec();
    let labels = read_records(dir.path().join("labels.jsonl"), &classes).unwrap();
    let boxes: Vec<Box3D> = labels.iter().filter(|l| l.frame == "000000").map(|l| l.bbox).collect();
    assert_eq!(boxes.len(), 1);
    let pc = load_scan(&scan, None).unwrap();
    let (mut cluster, mut clutter) = (Vec::new(), Vec::new());
    for i in 0..pc.len() {
        let [x, y, z] = pc.xyz(i);
        let col = (x / 0.16).floor() as usize;
        let row = ((y + 25.6) / 0.16).floor() as usize;
        let v = px[row.min(h - 1) * w + col.min(w - 1)];
        if boxes[0].contains_point(x, y, z) {
            cluster.push(v);
        } else {
            clutter.push(v);
        }
    }
    clutter.sort_unstable();
    let median = clutter[clutter.len() / 2];
    assert!(cluster.len() >= 20);
    assert!(cluster.iter().all(|&v| v > median), "median {median}, cluster {cluster:?}");
}

#[test]
fn eval_tables() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--count", "3"]);
    let labels = dir.path().join("labels.jsonl");
    let text = std::fs::read_to_string(&labels).unwrap();
    let scored: String = text
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v["score"] = Value::from(0.9);
            format!("{v}\n")
        })
        .collect();
    let dets = dir.path().join("dets.jsonl");
    std::fs::write(&dets, scored).unwrap();
    let report = dir.path().join("report.json");
    let o = cli(&["eval", p(&dets), p(&labels), "--out", p(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("100.00"));
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let maps: Vec<f64> = r["regions"].as_array().unwrap().iter().map(|g| g["map_3d"].as_f64().unwrap()).collect();
    assert!(!maps.is_empty() && maps.iter().all(|m| *m == 1.0), "{maps:?}");

    let empty = dir.path().join("none.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = cli(&["eval", p(&empty), p(&labels), "--out", p(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["regions"][0]["map_3d"].as_f64(), Some(0.0));

    let o = cli(&["eval", p(&dets), p(&labels), "--region", "corridor"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("corridor"));
    assert_eq!(code(&cli(&["eval", p(&dets), p(&labels), "--region", "nowhere"])), 3);

    // unscored detections and malformed lines are input errors
    assert_eq!(code(&cli(&["eval", p(&labels), p(&labels)])), 2);
    std::fs::write(&empty, "{\"frame\": \"a\"}\n").unwrap();
    let o = cli(&["eval", p(&empty), p(&labels)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn assign_writes_per_frame_targets() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--count", "2"]);
    let out = dir.path().join("asg.json");
    let o = cli(&["assign", p(&dir.path().join("labels.jsonl")), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(v.to_string().contains("000001"));
}

#[test]
fn bench_report_and_repetition_guard() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    let out = dir.path().join("bench.json");
    let o = cli(&["bench", p(dir.path()), "--repetitions", "1", "--warmup", "0", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    for stage in ["kde", "pillarize", "voxelize"] {
        assert_eq!(v[stage]["samples"].as_u64(), Some(1), "{stage}");
        assert!(v[stage]["median_ms"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(v["scans"].as_u64(), Some(1));
    assert_ne!(code(&cli(&["bench", p(dir.path()), "--repetitions", "0"])), 0);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let scan = synth(dir.path(), &[]);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_radar-mrf"))
            .args(["encode", p(&scan), "--out-dir", p(dir.path())])
            .env("RADAR_MRF_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("2")), 0);
    assert_eq!(code(&run("zero")), 3);
}
