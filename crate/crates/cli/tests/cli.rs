use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use infraqa_core::io::{read_cloud, read_png, write_cloud, write_png};
use infraqa_core::ladder::{CloudPoint, PointCloud, RasterImage};

fn infraqa(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_infraqa"));
    cmd.args(args).env_remove("INFRAQA_THREADS");
    if let Some(t) = threads {
        cmd.env("INFRAQA_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scenario(dir: &Path, name: &str, seed: u64, sigma: f64) {
    let text = format!(
        "n_frames = 8\nseed = {seed}\npos_sigma_m = {sigma}\ndropout = 0.1\nfp_rate = 0.3\nid_switch_prob = 0.1\n\n[objects]\ncar = 3\npedestrian = 2\n\n[timing]\nbase_det_ms = 45\n"
    );
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, text).unwrap();
    let out = infraqa(&["synth", "--scenario", s(&path), "--out", s(&dir.join(name))], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

const CONFIG: &str = r#"
output_dir = "report"

[[machines]]
machine_id = 1

[[machines]]
machine_id = 2

[[sensors]]
kind = "camera"
label = "C540"
width_px = 960
height_px = 540
hfov_deg = 48.1
vfov_deg = 27.7
readout_ms = 20

[[sensors]]
kind = "lidar"
label = "L32"
vertical_layers = 32
hfov_deg = 100
vfov_deg = 40
hor_ang_res_deg = 0.09
vert_ang_res_deg = 1.25
range_accuracy_m = 0.03
readout_ms = 30

[[inputs]]
camera = "C540"
gt = "cam/gt.jsonl"
detections = "cam/detections.jsonl"
tracks = "cam/tracks.jsonl"
timing = "cam/timing.csv"

[[inputs]]
lidar = "L32"
gt = "lid/gt.jsonl"
detections = "lid/detections.jsonl"
tracks = "lid/tracks.jsonl"
timing = "lid/timing.csv"

[[inputs]]
camera = "C540"
lidar = "L32"
timing = "lid/timing.csv"
"#;

fn run_dir() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    scenario(d.path(), "cam", 1, 0.3);
    scenario(d.path(), "lid", 2, 0.1);
    fs::write(d.path().join("run.toml"), CONFIG).unwrap();
    d
}

#[test]
fn evaluate_is_deterministic_across_thread_counts() {
    let d = run_dir();
    let cfg = d.path().join("run.toml");
    let mut reports = Vec::new();
    for (i, threads) in [Some("1"), Some("4"), None].into_iter().enumerate() {
        let out_dir = d.path().join(format!("out{i}"));
        let out = infraqa(&["evaluate", "--config", s(&cfg), "--out", s(&out_dir)], threads);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(
            ["report.csv", "qspace.csv", "report.json"].map(|f| fs::read(out_dir.join(f)).unwrap()),
        );
    }
    let seq_dir = d.path().join("seq");
    let out = infraqa(&["--sequential", "evaluate", "--config", s(&cfg), "--out", s(&seq_dir)], None);
    assert_eq!(code(&out), 0);
    reports.push(["report.csv", "qspace.csv", "report.json"].map(|f| fs::read(seq_dir.join(f)).unwrap()));
    assert!(reports.windows(2).all(|w| w[0] == w[1]));

    let csv = String::from_utf8(reports[0][0].clone()).unwrap();
    assert_eq!(csv.lines().next(), Some("setup,machine,mAP,A_sld,HOTA,A_norm,L_norm,R_norm,Q_mag"));
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv.contains("\nC540 & L32,2,"));
}

#[test]
fn report_regenerates_csv_from_json() {
    let d = run_dir();
    let out = infraqa(&["evaluate", "--config", s(&d.path().join("run.toml"))], None);
    assert_eq!(code(&out), 0);
    let report = d.path().join("report");
    let again = d.path().join("again");
    let out = infraqa(&["report", "--from", s(&report.join("report.json")), "--out", s(&again)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.csv", "qspace.csv"] {
        assert_eq!(fs::read(report.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn enumerate_lists_setups() {
    let d = run_dir();
    let out = infraqa(&["enumerate", "--config", s(&d.path().join("run.toml"))], None);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("C540, machine 1"));
    assert_eq!(text.lines().last(), Some("6 setups"));
}

#[test]
fn exit_codes() {
    let d = run_dir();
    let cfg = d.path().join("run.toml");
    assert_eq!(code(&infraqa(&["evaluate", "--config", "/nonexistent/run.toml"], None)), 3);
    assert_eq!(code(&infraqa(&["evaluate", "--config", s(&cfg)], Some("zero"))), 2);
    assert_eq!(code(&infraqa(&["bogus"], None)), 2);

    let bad = d.path().join("bad.toml");
    fs::write(&bad, CONFIG.replace("vertical_layers = 32", "vertical_layers = 0")).unwrap();
    assert_eq!(code(&infraqa(&["evaluate", "--config", s(&bad)], None)), 2);

    fs::remove_file(d.path().join("lid/tracks.jsonl")).unwrap();
    assert_eq!(code(&infraqa(&["evaluate", "--config", s(&cfg)], None)), 3);

    let d = run_dir();
    let blocker = d.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = infraqa(&["evaluate", "--config", s(&d.path().join("run.toml")), "--out", s(&blocker.join("x"))], None);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ladder_lidar_with_and_without_layer_ids() {
    let d = tempfile::tempdir().unwrap();
    let mut pts = Vec::new();
    for layer in 0..64 {
        let el = (-10.0 + 0.3 * layer as f64).to_radians();
        for k in 0..5 {
            let az = (k as f64 * 10.0).to_radians();
            pts.push(CloudPoint::new(
                (15.0 * el.cos() * az.cos()) as f32,
                (15.0 * el.cos() * az.sin()) as f32,
                (15.0 * el.sin()) as f32,
                layer as f32,
            ));
        }
    }
    let raw = d.path().join("raw.bin");
    write_cloud(&raw, &PointCloud::new(pts)).unwrap();
    fs::remove_file(d.path().join("raw.bin.json")).unwrap();
    let out_path = d.path().join("l16.bin");
    let out = infraqa(
        &["ladder", "lidar", "--input", s(&raw), "--output", s(&out_path), "--source-layers", "64", "--target", "16", "--vert-res-deg", "0.3"],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cloud = read_cloud(&out_path).unwrap();
    assert_eq!(cloud.len(), 16 * 5);
    assert!(cloud.points.iter().all(|p| (p.intensity as u32).is_multiple_of(4)));

    let out = infraqa(
        &["ladder", "lidar", "--input", s(&out_path), "--output", s(&d.path().join("x.bin")), "--source-layers", "16", "--target", "12"],
        None,
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn ladder_camera() {
    let d = tempfile::tempdir().unwrap();
    let src = d.path().join("in.png");
    write_png(&src, &RasterImage::filled(960, 540, [1, 2, 3])).unwrap();
    let dst = d.path().join("out.png");
    let out = infraqa(&["ladder", "camera", "--input", s(&src), "--height", "270", "--output", s(&dst)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let img = read_png(&dst).unwrap();
    assert_eq!((img.width, img.height), (480, 270));
    let out = infraqa(&["ladder", "camera", "--input", s(&src), "--height", "500", "--output", s(&dst)], None);
    assert_eq!(code(&out), 2);
    let out = infraqa(&["ladder", "camera", "--input", s(&d.path().join("none.png")), "--height", "270", "--output", s(&dst)], None);
    assert_eq!(code(&out), 3);
}
