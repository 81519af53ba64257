//! HOTA with 3D IoU similarity.
//!
//! Two passes over the sequence: the first accumulates a global alignment
//! score for every (gt track, predicted track) pair, the second matches each
//! frame bijectively on `alignment × IoU` and counts, for each threshold
//! alpha, detection TP/FN/FP and per-pair match counts for association.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::iou_3d;
use crate::model::{FrameRecord, ObjectClass, ObjectRecord};

use super::assignment::optimal_assignment_max;

/// Number of similarity thresholds: alpha = 0.05, 0.10, ..., 0.95.
pub const ALPHA_STEPS: usize = 19;

pub fn alphas() -> [f64; ALPHA_STEPS] {
    std::array::from_fn(|k| (k + 1) as f64 / 20.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaScore {
    pub alpha: f64,
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHota {
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub per_alpha: Vec<AlphaScore>,
}

/// HOTA summary. With class-aware evaluation every per-alpha entry is the
/// mean over evaluated classes; `hota` is the mean of the per-alpha values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotaResult {
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub per_alpha: Vec<AlphaScore>,
    /// Empty for class-agnostic evaluation.
    pub per_class: BTreeMap<ObjectClass, ClassHota>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotaOptions {
    /// Evaluate each class separately and average over classes present in
    /// the ground truth; otherwise pool all objects regardless of class.
    pub class_aware: bool,
}

impl Default for HotaOptions {
    fn default() -> Self {
        HotaOptions { class_aware: true }
    }
}

// Dense per-frame view: track indices and the IoU matrix.
struct FrameView {
    gt_ids: Vec<usize>,
    pred_ids: Vec<usize>,
    sim: Vec<Vec<f64>>,
}

fn dense_ids<'a>(
    frames: impl Iterator<Item = &'a [ObjectRecord]>,
) -> Result<(HashMap<u64, usize>, Vec<Vec<usize>>)> {
    let mut map = HashMap::new();
    let mut per_frame = Vec::new();
    for objs in frames {
        let mut ids = Vec::with_capacity(objs.len());
        for o in objs {
            let id = o.track_id.ok_or(Error::TrackIdsRequired)?;
            let next = map.len();
            ids.push(*map.entry(id).or_insert(next));
        }
        per_frame.push(ids);
    }
    Ok((map, per_frame))
}

/// HOTA for a single pool of objects (one class, or all classes pooled).
fn hota_single(gt: &[Vec<ObjectRecord>], pred: &[Vec<ObjectRecord>]) -> Result<ClassHota> {
    let (gt_map, gt_ids) = dense_ids(gt.iter().map(Vec::as_slice))?;
    let (pred_map, pred_ids) = dense_ids(pred.iter().map(Vec::as_slice))?;
    let (n_gt_tracks, n_pred_tracks) = (gt_map.len(), pred_map.len());

    let views: Vec<FrameView> = gt_ids
        .into_iter()
        .zip(pred_ids)
        .zip(gt.iter().zip(pred))
        .map(|((g_ids, p_ids), (g, p))| FrameView {
            sim: g.iter().map(|a| p.iter().map(|b| iou_3d(&a.bbox, &b.bbox)).collect()).collect(),
            gt_ids: g_ids,
            pred_ids: p_ids,
        })
        .collect();

    let alphas = alphas();
    let total_gt: usize = views.iter().map(|v| v.gt_ids.len()).sum();
    let total_pred: usize = views.iter().map(|v| v.pred_ids.len()).sum();
    if total_gt == 0 || total_pred == 0 {
        let zero = alphas.map(|alpha| AlphaScore { alpha, hota: 0.0, det_a: 0.0, ass_a: 0.0 });
        return Ok(ClassHota { hota: 0.0, det_a: 0.0, ass_a: 0.0, per_alpha: zero.to_vec() });
    }

    // pass 1: global alignment
    let mut potential = vec![vec![0.0f64; n_pred_tracks]; n_gt_tracks];
    let mut gt_count = vec![0.0f64; n_gt_tracks];
    let mut pred_count = vec![0.0f64; n_pred_tracks];
    for v in &views {
        let row_sum: Vec<f64> = v.sim.iter().map(|r| r.iter().sum()).collect();
        let col_sum: Vec<f64> =
            (0..v.pred_ids.len()).map(|j| v.sim.iter().map(|r| r[j]).sum()).collect();
        for (i, &g) in v.gt_ids.iter().enumerate() {
            for (j, &p) in v.pred_ids.iter().enumerate() {
                let s = v.sim[i][j];
                let denom = row_sum[i] + col_sum[j] - s;
                if denom > f64::EPSILON {
                    potential[g][p] += s / denom;
                }
            }
        }
        v.gt_ids.iter().for_each(|&g| gt_count[g] += 1.0);
        v.pred_ids.iter().for_each(|&p| pred_count[p] += 1.0);
    }
    let alignment: Vec<Vec<f64>> = (0..n_gt_tracks)
        .map(|g| {
            (0..n_pred_tracks)
                .map(|p| potential[g][p] / (gt_count[g] + pred_count[p] - potential[g][p]))
                .collect()
        })
        .collect();

    // pass 2: per-frame matching and counting
    let mut tp = [0usize; ALPHA_STEPS];
    let mut fn_ = [0usize; ALPHA_STEPS];
    let mut fp = [0usize; ALPHA_STEPS];
    let mut match_counts = vec![vec![vec![0.0f64; n_pred_tracks]; n_gt_tracks]; ALPHA_STEPS];
    for v in &views {
        let (ng, np) = (v.gt_ids.len(), v.pred_ids.len());
        if ng == 0 || np == 0 {
            for a in 0..ALPHA_STEPS {
                fn_[a] += ng;
                fp[a] += np;
            }
            continue;
        }
        let score: Vec<Vec<f64>> = (0..ng)
            .map(|i| (0..np).map(|j| alignment[v.gt_ids[i]][v.pred_ids[j]] * v.sim[i][j]).collect())
            .collect();
        let matched = optimal_assignment_max(&score).pairs;
        for (a, &alpha) in alphas.iter().enumerate() {
            let mut n = 0;
            for &(i, j) in &matched {
                if v.sim[i][j] >= alpha - f64::EPSILON {
                    n += 1;
                    match_counts[a][v.gt_ids[i]][v.pred_ids[j]] += 1.0;
                }
            }
            tp[a] += n;
            fn_[a] += ng - n;
            fp[a] += np - n;
        }
    }

    let per_alpha: Vec<AlphaScore> = alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let det_a = tp[a] as f64 / (tp[a] + fn_[a] + fp[a]).max(1) as f64;
            let mut weighted = 0.0;
            for g in 0..n_gt_tracks {
                for p in 0..n_pred_tracks {
                    let m = match_counts[a][g][p];
                    if m > 0.0 {
                        weighted += m * m / (gt_count[g] + pred_count[p] - m);
                    }
                }
            }
            let ass_a = weighted / tp[a].max(1) as f64;
            AlphaScore { alpha, hota: (det_a * ass_a).sqrt(), det_a, ass_a }
        })
        .collect();
    Ok(summarize(per_alpha))
}

fn summarize(per_alpha: Vec<AlphaScore>) -> ClassHota {
    let n = per_alpha.len() as f64;
    ClassHota {
        hota: per_alpha.iter().map(|s| s.hota).sum::<f64>() / n,
        det_a: per_alpha.iter().map(|s| s.det_a).sum::<f64>() / n,
        ass_a: per_alpha.iter().map(|s| s.ass_a).sum::<f64>() / n,
        per_alpha,
    }
}

fn check_inputs(gt: &[FrameRecord], pred: &[FrameRecord]) -> Result<()> {
    if gt.len() != pred.len() || gt.iter().zip(pred).any(|(g, p)| g.frame_index != p.frame_index) {
        return Err(Error::invalid("ground truth and tracking frames are not aligned"));
    }
    let all = gt.iter().chain(pred).flat_map(|f| &f.objects);
    if all.clone().any(|o| o.track_id.is_none()) {
        return Err(Error::TrackIdsRequired);
    }
    Ok(())
}

/// HOTA over aligned ground-truth and tracker frames, 3D IoU similarity.
pub fn hota_3d(
    gt: &[FrameRecord],
    pred: &[FrameRecord],
    options: HotaOptions,
    exec: Exec,
) -> Result<HotaResult> {
    check_inputs(gt, pred)?;
    if gt.iter().all(|f| f.objects.is_empty()) {
        return Err(Error::NoEvaluableClasses);
    }

    let pools = |filter: Option<ObjectClass>| {
        let pick = move |f: &FrameRecord| -> Vec<ObjectRecord> {
            f.objects.iter().filter(|o| filter.is_none_or(|c| o.cls == c)).cloned().collect()
        };
        (gt.iter().map(pick).collect::<Vec<_>>(), pred.iter().map(pick).collect::<Vec<_>>())
    };

    if !options.class_aware {
        let (g, p) = pools(None);
        let c = hota_single(&g, &p)?;
        return Ok(HotaResult {
            hota: c.hota,
            det_a: c.det_a,
            ass_a: c.ass_a,
            per_alpha: c.per_alpha,
            per_class: BTreeMap::new(),
        });
    }

    let present: Vec<ObjectClass> = ObjectClass::ALL
        .into_iter()
        .filter(|c| gt.iter().any(|f| f.objects.iter().any(|o| o.cls == *c)))
        .collect();
    let per_class: Vec<ClassHota> = exec.try_map(&present, |&cls| {
        let (g, p) = pools(Some(cls));
        hota_single(&g, &p)
    })?;

    let k = per_class.len() as f64;
    let per_alpha: Vec<AlphaScore> = alphas()
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let mean = |f: fn(&AlphaScore) -> f64| {
                per_class.iter().map(|c| f(&c.per_alpha[a])).sum::<f64>() / k
            };
            AlphaScore {
                alpha,
                hota: mean(|s| s.hota),
                det_a: mean(|s| s.det_a),
                ass_a: mean(|s| s.ass_a),
            }
        })
        .collect();
    let summary = summarize(per_alpha);
    Ok(HotaResult {
        hota: summary.hota,
        det_a: summary.det_a,
        ass_a: summary.ass_a,
        per_alpha: summary.per_alpha,
        per_class: present.into_iter().zip(per_class).collect(),
    })
}
