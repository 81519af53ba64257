//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use infraqa_core::geometry::iou_3d;
use infraqa_core::model::{Box3D, FrameRecord, ObjectClass, ObjectRecord};
use infraqa_core::synth::{corrupt_detections, generate_scenario, ScenarioConfig};

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Maximum-score one-to-one matching by enumerating every permutation of
/// the padded square matrix. Pairs with padding are dropped.
pub fn brute_assignment_max(score: &[Vec<f64>]) -> (f64, Vec<(usize, usize)>) {
    let rows = score.len();
    let cols = score.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    let at = |i: usize, j: usize| if i < rows && j < cols { score[i][j] } else { 0.0 };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for p in permutations(n) {
        let total: f64 = (0..n).map(|i| at(i, p[i])).sum();
        if total > best.0 {
            let pairs = (0..rows).filter(|&i| p[i] < cols).map(|i| (i, p[i])).collect();
            best = (total, pairs);
        }
    }
    best
}

pub fn brute_assignment_min(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    permutations(n)
        .iter()
        .map(|p| (0..n).map(|i| cost[i][p[i]]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// HOTA, DetA, AssA of one class pool, written from the metric definition.
fn hota_pool(gt: &[Vec<&ObjectRecord>], pred: &[Vec<&ObjectRecord>]) -> (f64, f64, f64) {
    let alphas: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let n_gt: usize = gt.iter().map(Vec::len).sum();
    let n_pr: usize = pred.iter().map(Vec::len).sum();
    if n_gt == 0 || n_pr == 0 {
        return (0.0, 0.0, 0.0);
    }
    let id = |o: &ObjectRecord| o.track_id.expect("track id");
    let mut gt_count: BTreeMap<u64, f64> = BTreeMap::new();
    let mut pr_count: BTreeMap<u64, f64> = BTreeMap::new();
    let mut potential: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let sims: Vec<Vec<Vec<f64>>> = gt
        .iter()
        .zip(pred)
        .map(|(g, p)| g.iter().map(|a| p.iter().map(|b| iou_3d(&a.bbox, &b.bbox)).collect()).collect())
        .collect();
    for ((g, p), s) in gt.iter().zip(pred).zip(&sims) {
        for (i, a) in g.iter().enumerate() {
            *gt_count.entry(id(a)).or_default() += 1.0;
            for (j, b) in p.iter().enumerate() {
                let row: f64 = s[i].iter().sum();
                let col: f64 = s.iter().map(|r| r[j]).sum();
                let d = row + col - s[i][j];
                if d > f64::EPSILON {
                    *potential.entry((id(a), id(b))).or_default() += s[i][j] / d;
                }
            }
        }
        for b in p {
            *pr_count.entry(id(b)).or_default() += 1.0;
        }
    }
    let align = |g: u64, p: u64| {
        let pot = potential.get(&(g, p)).copied().unwrap_or(0.0);
        pot / (gt_count[&g] + pr_count[&p] - pot)
    };

    let mut frame_matches: Vec<Vec<(usize, usize)>> = Vec::new();
    for ((g, p), s) in gt.iter().zip(pred).zip(&sims) {
        let score: Vec<Vec<f64>> = g
            .iter()
            .enumerate()
            .map(|(i, a)| p.iter().enumerate().map(|(j, b)| align(id(a), id(b)) * s[i][j]).collect())
            .collect();
        frame_matches.push(if g.is_empty() || p.is_empty() { vec![] } else { brute_assignment_max(&score).1 });
    }

    let mut h = 0.0;
    let mut det = 0.0;
    let mut ass = 0.0;
    for &alpha in &alphas {
        let mut tp = 0.0;
        let mut counts: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (((g, p), s), m) in gt.iter().zip(pred).zip(&sims).zip(&frame_matches) {
            for &(i, j) in m {
                if s[i][j] >= alpha - f64::EPSILON {
                    tp += 1.0;
                    *counts.entry((id(g[i]), id(p[j]))).or_default() += 1.0;
                }
            }
        }
        let fn_ = n_gt as f64 - tp;
        let fp = n_pr as f64 - tp;
        let det_a = if tp + fn_ + fp > 0.0 { tp / (tp + fn_ + fp) } else { 0.0 };
        let ass_sum: f64 = counts
            .iter()
            .map(|(&(g, p), &c)| c * c / (gt_count[&g] + pr_count[&p] - c))
            .sum();
        let ass_a = ass_sum / tp.max(1.0);
        h += (det_a * ass_a).sqrt();
        det += det_a;
        ass += ass_a;
    }
    let k = alphas.len() as f64;
    (h / k, det / k, ass / k)
}

fn pick(frames: &[FrameRecord], cls: Option<ObjectClass>) -> Vec<Vec<&ObjectRecord>> {
    frames
        .iter()
        .map(|f| f.objects.iter().filter(|o| cls.is_none() || Some(o.cls) == cls).collect())
        .collect()
}

/// Class-aware HOTA averaged over classes present in the ground truth, or
/// pooled over all objects.
pub fn brute_hota(gt: &[FrameRecord], pred: &[FrameRecord], class_aware: bool) -> f64 {
    if !class_aware {
        return hota_pool(&pick(gt, None), &pick(pred, None)).0;
    }
    let classes: Vec<ObjectClass> = ObjectClass::ALL
        .into_iter()
        .filter(|c| gt.iter().any(|f| f.objects.iter().any(|o| o.cls == *c)))
        .collect();
    classes.iter().map(|&c| hota_pool(&pick(gt, Some(c)), &pick(pred, Some(c))).0).sum::<f64>()
        / classes.len() as f64
}

/// mAP@0.5 with 40 recall points: greedy score-ordered matching per frame
/// and class, precision evaluated over every ranked prefix.
pub fn brute_map(gt: &[FrameRecord], pred: &[FrameRecord]) -> f64 {
    let mut aps = Vec::new();
    for cls in ObjectClass::ALL {
        let mut ranked: Vec<(f64, usize, bool)> = Vec::new();
        let mut n_gt = 0usize;
        let mut seq = 0usize;
        for (g, p) in gt.iter().zip(pred) {
            let gs: Vec<&Box3D> = g.objects.iter().filter(|o| o.cls == cls).map(|o| &o.bbox).collect();
            let mut ps: Vec<&ObjectRecord> = p.objects.iter().filter(|o| o.cls == cls).collect();
            n_gt += gs.len();
            ps.sort_by(|a, b| b.score.unwrap_or(0.0).partial_cmp(&a.score.unwrap_or(0.0)).unwrap());
            let mut used = vec![false; gs.len()];
            for d in ps {
                let mut best: Option<usize> = None;
                let mut best_iou = 0.5;
                for (k, gb) in gs.iter().enumerate() {
                    let v = iou_3d(&d.bbox, gb);
                    if !used[k] && v >= best_iou && best.is_none_or(|_| v > best_iou) {
                        best = Some(k);
                        best_iou = v;
                    }
                }
                if let Some(k) = best {
                    used[k] = true;
                }
                ranked.push((d.score.unwrap_or(0.0), seq, best.is_some()));
                seq += 1;
            }
        }
        if n_gt == 0 {
            continue;
        }
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut sum = 0.0;
        for level in 1..=40 {
            let r = level as f64 / 40.0;
            let mut best = 0.0f64;
            for k in 1..=ranked.len() {
                let tp = ranked[..k].iter().filter(|x| x.2).count() as f64;
                if tp / n_gt as f64 >= r - 1e-12 {
                    best = best.max(tp / k as f64);
                }
            }
            sum += best;
        }
        aps.push(sum / 40.0);
    }
    aps.iter().sum::<f64>() / aps.len() as f64
}

/// Monte-Carlo 3D IoU of upright boxes with `n×n` jittered samples over the
/// footprint of `a`; the vertical overlap is exact.
pub fn mc_iou(a: &Box3D, b: &Box3D, n: usize, rng: &mut impl rand::Rng) -> f64 {
    let (sa, ca) = a.yaw.sin_cos();
    let (sb, cb) = b.yaw.sin_cos();
    let (hl, hw) = (b.length / 2.0, b.width / 2.0);
    let cell = 1.0 / n as f64;
    let mut hits = 0usize;
    for i in 0..n {
        for j in 0..n {
            // both jitters from one draw
            let r: u64 = rng.random();
            let ju = (r >> 32) as f64 / 4294967296.0;
            let jv = (r & 0xffff_ffff) as f64 / 4294967296.0;
            let u = ((i as f64 + ju) * cell - 0.5) * a.length;
            let v = ((j as f64 + jv) * cell - 0.5) * a.width;
            let dx = a.center_x + ca * u - sa * v - b.center_x;
            let dy = a.center_y + sa * u + ca * v - b.center_y;
            let bu = cb * dx + sb * dy;
            let bv = -sb * dx + cb * dy;
            hits += usize::from(bu.abs() <= hl && bv.abs() <= hw);
        }
    }
    let dz = (a.z_max().min(b.z_max()) - a.z_min().max(b.z_min())).max(0.0);
    let inter = hits as f64 / (n * n) as f64 * a.length * a.width * dz;
    let union = a.volume() + b.volume() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Generated ground truth, its corrupted predictions and the config.
pub fn scenario(seed: u64, tracks: usize, frames: usize, noisy: bool) -> (Vec<FrameRecord>, Vec<FrameRecord>) {
    let mut objects = BTreeMap::new();
    objects.insert(ObjectClass::Car, tracks.div_ceil(2));
    if tracks / 2 > 0 {
        objects.insert(ObjectClass::Pedestrian, tracks / 2);
    }
    let cfg = ScenarioConfig {
        n_frames: frames,
        objects,
        seed,
        pos_sigma_m: if noisy { 0.25 } else { 0.0 },
        yaw_sigma_rad: if noisy { 0.05 } else { 0.0 },
        dropout: if noisy { 0.15 } else { 0.0 },
        fp_rate: if noisy { 0.4 } else { 0.0 },
        id_switch_prob: if noisy { 0.1 } else { 0.0 },
        ..ScenarioConfig::default()
    };
    let gt = generate_scenario(&cfg).expect("valid scenario");
    let (pred, _) = corrupt_detections(&gt, &cfg).expect("valid corruption");
    (gt, pred)
}

/// Copy of `frames` with track ids removed.
pub fn without_ids(frames: &[FrameRecord]) -> Vec<FrameRecord> {
    let mut out = frames.to_vec();
    for o in out.iter_mut().flat_map(|f| f.objects.iter_mut()) {
        o.track_id = None;
    }
    out
}

pub fn object(cls: ObjectClass, bbox: Box3D, score: Option<f64>, track_id: Option<u64>) -> ObjectRecord {
    ObjectRecord { cls, bbox, score, track_id }
}

/// Write a small evaluation run (shared scene, per-sensor corruption,
/// per-machine timing, composed combined setups) and return the config path.
pub fn write_run_fixture(dir: &std::path::Path, cameras: &[u32], lidars: &[u32], machines: &[u32]) -> std::path::PathBuf {
    use infraqa_core::io::{write_frames_jsonl, write_timing_csv};
    use infraqa_core::synth::simulate_timing;
    use std::fmt::Write;

    let base = ScenarioConfig {
        n_frames: 8,
        objects: BTreeMap::from([(ObjectClass::Car, 3), (ObjectClass::Pedestrian, 2)]),
        seed: 99,
        ..ScenarioConfig::default()
    };
    let gt = generate_scenario(&base).unwrap();
    let counts: Vec<usize> = gt.iter().map(|f| f.objects.len()).collect();
    write_frames_jsonl(&dir.join("gt.jsonl"), &gt).unwrap();

    let mut cfg = String::from("output_dir = \"report\"\n\n");
    for m in machines {
        writeln!(cfg, "[[machines]]\nmachine_id = {m}\n").unwrap();
    }
    let mut labels = Vec::new();
    for (k, &h) in cameras.iter().enumerate() {
        let label = format!("C{h}");
        writeln!(
            cfg,
            "[[sensors]]\nkind = \"camera\"\nlabel = \"{label}\"\nwidth_px = {}\nheight_px = {h}\nhfov_deg = 48.1\nvfov_deg = 27.7\nreadout_ms = 20\n",
            h * 16 / 9
        )
        .unwrap();
        labels.push((label, 0.15 + 0.1 * k as f64, 40.0 + 10.0 * k as f64));
    }
    for (k, &n) in lidars.iter().enumerate() {
        let label = format!("L{n}");
        writeln!(
            cfg,
            "[[sensors]]\nkind = \"lidar\"\nlabel = \"{label}\"\nvertical_layers = {n}\nhfov_deg = 100\nvfov_deg = 40\nhor_ang_res_deg = 0.09\nvert_ang_res_deg = {}\nrange_accuracy_m = 0.03\nreadout_ms = 30\n",
            40.0 / n as f64
        )
        .unwrap();
        labels.push((label, 0.05 + 0.05 * k as f64, 60.0 - 5.0 * k as f64));
    }
    for (i, (label, sigma, det_ms)) in labels.iter().enumerate() {
        let noisy = ScenarioConfig {
            seed: 1000 + i as u64,
            pos_sigma_m: *sigma,
            dropout: 0.1,
            fp_rate: 0.3,
            id_switch_prob: 0.05,
            ..base.clone()
        };
        let (pred, _) = corrupt_detections(&gt, &noisy).unwrap();
        write_frames_jsonl(&dir.join(format!("{label}_tracks.jsonl")), &pred).unwrap();
        write_frames_jsonl(&dir.join(format!("{label}_dets.jsonl")), &without_ids(&pred)).unwrap();
        for &m in machines {
            let t = simulate_timing(gt.len(), det_ms * m as f64, 5.0, 0.5, &counts).unwrap();
            write_timing_csv(&dir.join(format!("{label}_m{m}.csv")), &t).unwrap();
        }
        let side = if label.starts_with('C') { "camera" } else { "lidar" };
        writeln!(
            cfg,
            "[[inputs]]\n{side} = \"{label}\"\ngt = \"gt.jsonl\"\ndetections = \"{{{side}}}_dets.jsonl\"\ntracks = \"{{{side}}}_tracks.jsonl\"\ntiming = \"{{{side}}}_m{{machine}}.csv\"\n"
        )
        .unwrap();
    }
    for &m in machines {
        let t = simulate_timing(gt.len(), 0.0, 8.0, 0.7 * m as f64, &counts).unwrap();
        write_timing_csv(&dir.join(format!("fused_m{m}.csv")), &t).unwrap();
    }
    for &c in cameras {
        for &l in lidars {
            writeln!(cfg, "[[inputs]]\ncamera = \"C{c}\"\nlidar = \"L{l}\"\ntiming = \"fused_m{{machine}}.csv\"\n").unwrap();
        }
    }
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}
