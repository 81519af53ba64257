//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

mod common;

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::time::{Duration, Instant};

use infraqa_core::detection::map_at_05;
use infraqa_core::exec::with_thread_cap;
use infraqa_core::geometry::{convex_intersection_area, iou_3d, ConvexPolygon2D};
use infraqa_core::io::{load_run_config, qspace_csv, report_csv, report_json};
use infraqa_core::ladder::{assign_layers, downsample_layers, layer_count, resample_image, CloudPoint, PointCloud, RasterImage};
use infraqa_core::model::{Box3D, LidarParams, MachineProfile, Registration, SensorParams, SensorSpec, SetupId};
use infraqa_core::pipeline::{
    build_quality_vector, enumerate_setups, latency_norm, reliability_norm_batch, reliability_raw, QualityWeights,
};
use infraqa_core::sensor::{accuracy_norm, EvalConstants};
use infraqa_core::tracking::{hota_3d, HotaOptions};
use infraqa_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t < budget, format!("took {t:.2?}, budget {budget:?}"))
}

fn published_accuracy() -> Outcome {
    let start = Instant::now();
    // setup, A_sld, HOTA, A_norm
    let rows = [
        ("C2160", 0.0817, 0.1032, 0.3030),
        ("C540", 0.0857, 0.1290, 0.3242),
        ("C135", 0.0046, 0.0597, 0.1287),
        ("L256", 0.6237, 0.4270, 0.7184),
        ("L32", 0.4450, 0.2904, 0.5996),
        ("L8", 0.2462, 0.1511, 0.4392),
        ("C2160&L256", 0.5959, 0.2128, 0.5967),
        ("C540&L32", 0.3870, 0.2083, 0.5328),
        ("C135&L8", 0.2417, 0.1114, 0.4051),
    ];
    let mut worst = 0.0f64;
    for (name, a_sld, hota, want) in rows {
        let err = (accuracy_norm(a_sld, hota) - want).abs();
        check(err <= 5e-4, format!("{name}: error {err:.2e}"))?;
        worst = worst.max(err);
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("9 setups, max error {worst:.1e}"))
}

fn published_magnitude() -> Outcome {
    let start = Instant::now();
    let w = QualityWeights::default();
    let mut worst = 0.0f64;
    for ((a, l, r), want) in [((0.7759, 0.9528, 0.7184), 1.4233), ((0.0713, 0.0308, 0.3985), 0.4060)] {
        let err = (build_quality_vector(a, l, r, &w).magnitude - want).abs();
        check(err <= 5e-4, format!("({a}, {l}, {r}): error {err:.2e}"))?;
        worst = worst.max(err);
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("max error {worst:.1e}"))
}

fn enumeration() -> Outcome {
    let cams: Vec<String> = [2160, 1080, 720, 540, 360, 270, 180, 135].iter().map(|h| format!("C{h}")).collect();
    let lids: Vec<String> = [256, 128, 64, 32, 16, 8].iter().map(|n| format!("L{n}")).collect();
    let machines: Vec<MachineProfile> = (1..=4)
        .map(|machine_id| MachineProfile { machine_id, gpu_desc: String::new(), cpu_desc: String::new() })
        .collect();
    let setups = enumerate_setups(&cams, &lids, &machines);
    let sensor_setups: std::collections::BTreeSet<String> = setups.iter().map(SetupId::sensor_label).collect();
    let distinct: std::collections::HashSet<&SetupId> = setups.iter().collect();
    check(sensor_setups.len() == 62, format!("{} sensor setups", sensor_setups.len()))?;
    check(setups.len() == 248 && distinct.len() == 248, format!("{} total combinations", setups.len()))?;
    Ok("62 sensor setups, 248 total combinations".into())
}

fn reliability_anchors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n = rng.random_range(2..60);
        let raws: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1e4)).collect();
        let norm = reliability_norm_batch(&raws);
        let (imin, imax) = (0..n).fold((0, 0), |(lo, hi), i| {
            (if raws[i] < raws[lo] { i } else { lo }, if raws[i] > raws[hi] { i } else { hi })
        });
        check(norm[imin] == 1.0 && norm[imax] == 0.0, "extremes not anchored")?;
        check(norm.iter().all(|v| (0.0..=1.0).contains(v)), "value outside [0, 1]")?;
    }
    Ok("200 random batches: min -> 1, max -> 0".into())
}

fn latency_anchors() -> Outcome {
    let k = EvalConstants::default();
    for (t, want) in [(0.0, 1.0), (500.0, 0.5), (1000.0, 0.0), (1500.0, 0.0), (1e9, 0.0)] {
        let got = latency_norm(t, &k);
        check(got == want, format!("L({t}) = {got}, expected {want}"))?;
    }
    Ok("0 -> 1, 500 -> 0.5, >=1000 -> 0".into())
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut n = 0;
    for seed in 0..60u64 {
        let tracks = 1 + (seed as usize % 5);
        let frames = 1 + (seed as usize % 10);
        let (gt, pred) = common::scenario(seed, tracks, frames, true);
        let map = map_at_05(&gt, &pred, Exec::Sequential).map_err(|e| e.to_string())?.map_value;
        let hota = hota_3d(&gt, &pred, HotaOptions::default(), Exec::Sequential).map_err(|e| e.to_string())?.hota;
        let dm = (map - common::brute_map(&gt, &pred)).abs();
        let dh = (hota - common::brute_hota(&gt, &pred, true)).abs();
        check(dm < 1e-12 && dh < 1e-12, format!("seed {seed}: mAP diff {dm:.1e}, HOTA diff {dh:.1e}"))?;
        worst = worst.max(dm).max(dh);
        n += 1;

        let (gt, clean) = common::scenario(seed, tracks, frames, false);
        let map = map_at_05(&gt, &clean, Exec::Sequential).map_err(|e| e.to_string())?.map_value;
        let hota = hota_3d(&gt, &clean, HotaOptions::default(), Exec::Sequential).map_err(|e| e.to_string())?.hota;
        check(map == 1.0 && (hota - 1.0).abs() < 1e-12, format!("seed {seed}: clean mAP {map}, HOTA {hota}"))?;
    }
    within_budget(start, Duration::from_secs(30))?;
    Ok(format!("{n} noisy + {n} clean scenarios, max diff {worst:.1e}, {:.2?}", start.elapsed()))
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Box3D, Box3D) {
    let dims = |rng: &mut ChaCha8Rng| [rng.random_range(0.5..5.0), rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)];
    let [l, w, h] = dims(rng);
    let a = Box3D::new(
        [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0)],
        l,
        w,
        h,
        rng.random_range(-3.1..3.1),
    )
    .unwrap();
    let [l, w, h] = dims(rng);
    let b = Box3D::new(
        [
            a.center_x + rng.random_range(-2.5..2.5),
            a.center_y + rng.random_range(-2.5..2.5),
            a.center_z + rng.random_range(-1.0..1.0),
        ],
        l,
        w,
        h,
        rng.random_range(-3.1..3.1),
    )
    .unwrap();
    (a, b)
}

fn geometry() -> Outcome {
    // unit square vs itself rotated 45 degrees: octagon of area 2(sqrt2 - 1)
    let a = Box3D::new([0.0; 3], 1.0, 1.0, 1.0, 0.0).unwrap();
    let b = Box3D::new([0.0; 3], 1.0, 1.0, 1.0, FRAC_PI_4).unwrap();
    let octagon = 2.0 * (SQRT_2 - 1.0);
    let area = convex_intersection_area(&ConvexPolygon2D::from_box(&a), &ConvexPolygon2D::from_box(&b));
    let oct_err = (area - octagon).abs();
    check(oct_err <= 1e-6, format!("rotated square intersection area {area}"))?;
    let iou = iou_3d(&a, &b);
    check((iou - octagon / (2.0 - octagon)).abs() <= 1e-6, format!("rotated square IoU {iou}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs: Vec<(Box3D, Box3D)> = (0..1000).map(|_| random_pair(&mut rng)).collect();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = pairs.len().div_ceil(workers);
    let errors: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .enumerate()
            .map(|(k, part)| {
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
                    part.iter().map(|(a, b)| (iou_3d(a, b) - common::mc_iou(a, b, 1000, &mut rng)).abs()).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let overlapping = pairs.iter().filter(|(a, b)| iou_3d(a, b) > 0.0).count();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    check(worst <= 2e-3, format!("max |IoU - MC| = {worst:.2e}"))?;
    Ok(format!("octagon err {:.1e}; 1000 pairs ({overlapping} overlapping) at 1e6 samples, max err {worst:.1e}", oct_err))
}

fn layered_cloud() -> Result<PointCloud, String> {
    let res = 0.13f64;
    let mut pts = Vec::new();
    for layer in 0..300 {
        let el = (-19.5 + res * layer as f64).to_radians();
        for k in 0..12 {
            let az = (-50.0 + 100.0 * k as f64 / 11.0f64).to_radians();
            let r = 20.0 + k as f64;
            pts.push(CloudPoint::new(
                (r * el.cos() * az.cos()) as f32,
                (r * el.cos() * az.sin()) as f32,
                (r * el.sin()) as f32,
                layer as f32,
            ));
        }
    }
    let spec = SensorSpec::new(
        "L300",
        10.0,
        SensorParams::Lidar(LidarParams {
            vertical_layers: 300,
            hfov_rad: 100f64.to_radians(),
            vfov_rad: 40f64.to_radians(),
            hor_ang_res_rad: 0.09f64.to_radians(),
            vert_ang_res_rad: res.to_radians(),
            range_accuracy_m: 0.03,
        }),
        Registration { e_trans_m: 0.04, e_rot_rad: 0.0 },
        0.0,
    )
    .map_err(|e| e.to_string())?;
    assign_layers(&PointCloud::new(pts), &spec).map_err(|e| e.to_string())
}

fn ladder() -> Outcome {
    let cloud = layered_cloud()?;
    check(layer_count(&cloud) == 300, format!("source has {} layers", layer_count(&cloud)))?;
    let err = |e: infraqa_core::Error| e.to_string();
    let mut cur = cloud.clone();
    let mut src = 300;
    let mut at_256 = None;
    let mut at_128 = None;
    for target in [256u32, 128, 64, 32, 16, 8] {
        cur = downsample_layers(&cur, src, target).map_err(err)?;
        check(layer_count(&cur) == target as usize, format!("{target}: {} layers", layer_count(&cur)))?;
        let ids = cur.layer_ids.as_ref().ok_or("layer ids lost")?;
        check(ids.contains(&0), format!("{target}: layer 0 missing"))?;
        // layer 0 is the original lowest beam
        let lowest = cur.points.iter().zip(ids).filter(|(_, &i)| i == 0).all(|(p, _)| p.intensity == 0.0);
        check(lowest, format!("{target}: layer 0 is not the lowest beam"))?;
        match target {
            256 => at_256 = Some(cur.clone()),
            128 => at_128 = Some(cur.clone()),
            _ => {}
        }
        src = target;
    }
    let at_256 = at_256.ok_or("no 256 rung")?;
    let direct = downsample_layers(&at_256, 256, 64).map_err(err)?;
    let stepped = downsample_layers(&at_128.ok_or("no 128 rung")?, 128, 64).map_err(err)?;
    check(direct == stepped, "256->64 differs from 256->128->64")?;
    let from_source = downsample_layers(&cloud, 300, 8).map_err(err)?;
    check(from_source == cur, "300->8 differs from the stepped chain")?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<u8> = (0..240 * 135 * 3).map(|_| rng.random()).collect();
    let img = RasterImage::new(240, 135, data).map_err(err)?;
    let up = resample_image(&img, 270, Exec::Parallel).map_err(err)?;
    check((up.width, up.height) == (480, 270), "upsampled size")?;
    for y in 0..up.height {
        for x in 0..up.width {
            check(up.pixel(x, y) == img.pixel(x / 2, y / 2), format!("pixel ({x}, {y}) is not a block copy"))?;
        }
    }
    Ok("300->256->...->8 exact, layer 0 kept, 256->64 composes, x2 block copy on 129600 pixels".into())
}

fn population_var(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

fn reliability_arithmetic() -> Outcome {
    // Var = 1, 0.01, 1, 0; Cov(R1,R2) = 0.1; Cov(R1,R3) = 1
    let r = reliability_raw(&[1.0, 3.0], &[0.5, 0.7], &[10.0, 12.0], &[5.0, 5.0]).map_err(|e| e.to_string())?;
    check((r.raw - 4.21).abs() < 1e-12, format!("fixture gives {}", r.raw))?;
    check((population_var(&[1.0, 3.0]) - r.var_r1).abs() < 1e-15, "var_r1")?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..50);
        let mut s: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let a = reliability_raw(&s[0], &s[1], &s[2], &s[3]).map_err(|e| e.to_string())?.raw;
        for series in s.iter_mut() {
            let shift = rng.random_range(-100.0..100.0);
            series.iter_mut().for_each(|v| *v += shift);
        }
        let b = reliability_raw(&s[0], &s[1], &s[2], &s[3]).map_err(|e| e.to_string())?.raw;
        worst = worst.max((a - b).abs());
    }
    check(worst <= 1e-9, format!("translation changed raw reliability by {worst:.2e}"))?;
    Ok(format!("fixture = 4.21, translation drift {worst:.1e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = common::write_run_fixture(dir.path(), &[540, 135], &[32, 8], &[1, 2]);
    let cfg = load_run_config(&path).map_err(|e| e.to_string())?;
    let render = |threads: Option<usize>, exec: Exec| -> Result<String, String> {
        let results = with_thread_cap(threads, || cfg.evaluate(exec)).map_err(|e| e.to_string())?;
        Ok(format!("{}{}{}", report_csv(&results), qspace_csv(&results), report_json(&results)))
    };
    let reference = render(Some(1), Exec::Parallel)?;
    for (threads, exec) in [(Some(2), Exec::Parallel), (Some(8), Exec::Parallel), (None, Exec::Parallel), (None, Exec::Sequential)] {
        check(render(threads, exec)? == reference, format!("reports differ with {threads:?} workers, {exec:?}"))?;
    }
    Ok(format!("{} report bytes identical across 1, 2, 8, default workers and sequential", reference.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("published accuracy_norm recomputation", published_accuracy),
        ("published |Q| recomputation", published_magnitude),
        ("setup enumeration 62 / 248", enumeration),
        ("reliability normalization anchors", reliability_anchors),
        ("latency normalization anchors", latency_anchors),
        ("mAP and HOTA match brute-force oracles", metric_oracles),
        ("3D IoU vs Monte-Carlo, rotated square", geometry),
        ("resolution ladder invariants", ladder),
        ("reliability arithmetic", reliability_arithmetic),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
