//! Detection accuracy: score-ordered greedy matching, 40-point interpolated
//! average precision at 3D IoU 0.5, and the per-frame detection ratio used
//! as a reliability series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::iou_3d;
use crate::model::{FrameRecord, ObjectClass, ObjectRecord};

pub const MATCH_IOU: f64 = 0.5;
pub const RECALL_POINTS: u64 = 40;

/// Outcome of matching one frame (one class).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameMatch {
    /// (prediction index, ground-truth index) pairs, in matching order.
    pub matches: Vec<(usize, usize)>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
}

impl FrameMatch {
    pub fn tp(&self) -> usize {
        self.matches.len()
    }
    pub fn fp(&self) -> usize {
        self.false_positives.len()
    }
    pub fn fn_(&self) -> usize {
        self.false_negatives.len()
    }
}

fn score_of(o: &ObjectRecord) -> f64 {
    o.score.unwrap_or(0.0)
}

/// Prediction indices sorted by descending score; ties keep input order.
fn score_order(preds: &[ObjectRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| score_of(&preds[b]).total_cmp(&score_of(&preds[a])));
    order
}

/// Greedy one-to-one matching. Predictions are taken in descending score
/// order, each claiming the unmatched ground truth with the highest IoU at or
/// above `iou_threshold` (lowest index on ties). Classes are not checked:
/// callers pass single-class lists.
pub fn match_frame(preds: &[ObjectRecord], gts: &[ObjectRecord], iou_threshold: f64) -> FrameMatch {
    let mut taken = vec![false; gts.len()];
    let mut out = FrameMatch::default();
    for p in score_order(preds) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let iou = iou_3d(&preds[p].bbox, &gt.bbox);
            if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        match best {
            Some((g, _)) => {
                taken[g] = true;
                out.matches.push((p, g));
            }
            None => out.false_positives.push(p),
        }
    }
    out.false_negatives = (0..gts.len()).filter(|&g| !taken[g]).collect();
    out
}

fn of_class(objs: &[ObjectRecord], cls: ObjectClass) -> Vec<ObjectRecord> {
    objs.iter().filter(|o| o.cls == cls).cloned().collect()
}

/// Match each class separately; classes absent from both sides are omitted.
pub fn match_frame_by_class(
    preds: &[ObjectRecord],
    gts: &[ObjectRecord],
    iou_threshold: f64,
) -> Vec<(ObjectClass, Vec<ObjectRecord>, FrameMatch)> {
    ObjectClass::ALL
        .iter()
        .filter_map(|&cls| {
            let p = of_class(preds, cls);
            let g = of_class(gts, cls);
            if p.is_empty() && g.is_empty() {
                return None;
            }
            let m = match_frame(&p, &g, iou_threshold);
            Some((cls, p, m))
        })
        .collect()
}

/// A scored detection with its match outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedDetection {
    pub score: f64,
    pub is_tp: bool,
}

/// 40-point interpolated AP: mean over recall levels k/40 (k = 1..=40) of
/// the best precision reached at recall >= k/40. `None` when `n_gt == 0`.
/// Detections are ranked by descending score, ties in input order.
pub fn average_precision(detections: &[RankedDetection], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut ranked = detections.to_vec();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut tp_at = Vec::with_capacity(ranked.len());
    let mut precision = Vec::with_capacity(ranked.len());
    let mut tp = 0u64;
    for (k, d) in ranked.iter().enumerate() {
        tp += u64::from(d.is_tp);
        tp_at.push(tp);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // precision envelope: best precision at this rank or later
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }

    let n_gt = n_gt as u64;
    let mut sum = 0.0;
    let mut k = 0usize;
    for level in 1..=RECALL_POINTS {
        // recall tp/n_gt >= level/40, in integers
        while k < tp_at.len() && tp_at[k] * RECALL_POINTS < level * n_gt {
            k += 1;
        }
        if k == tp_at.len() {
            break;
        }
        sum += precision[k];
    }
    Some(sum / RECALL_POINTS as f64)
}

/// mAP over a test set plus the per-frame detection ratio series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    pub per_class_ap: BTreeMap<ObjectClass, f64>,
    pub map_value: f64,
    pub per_frame_ad: Vec<(u64, f64)>,
}

/// Within-frame detection ratio TP / (TP + FP + FN) at IoU 0.5, pooled over
/// classes. An empty frame on both sides scores 1.
pub fn per_frame_ad(gt: &FrameRecord, pred: &FrameRecord) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (_, _, m) in match_frame_by_class(&pred.objects, &gt.objects, MATCH_IOU) {
        tp += m.tp();
        fp += m.fp();
        fn_ += m.fn_();
    }
    let total = tp + fp + fn_;
    if total == 0 {
        1.0
    } else {
        tp as f64 / total as f64
    }
}

fn check_aligned(gt: &[FrameRecord], pred: &[FrameRecord]) -> Result<()> {
    if gt.len() != pred.len() {
        return Err(Error::invalid(format!(
            "frame lists not aligned: {} ground-truth vs {} prediction frames",
            gt.len(),
            pred.len()
        )));
    }
    if let Some((g, p)) = gt.iter().zip(pred).find(|(g, p)| g.frame_index != p.frame_index) {
        return Err(Error::invalid(format!(
            "frame lists not aligned: ground truth frame {} vs prediction frame {}",
            g.frame_index, p.frame_index
        )));
    }
    Ok(())
}

/// mAP@0.5 over aligned frame lists. Detections are ranked globally across
/// all frames; the mean runs over classes with at least one ground truth.
pub fn map_at_05(gt: &[FrameRecord], pred: &[FrameRecord], exec: Exec) -> Result<ApResult> {
    check_aligned(gt, pred)?;
    let idx: Vec<usize> = (0..gt.len()).collect();
    let per_frame = exec.map(&idx, |&i| {
        let matches = match_frame_by_class(&pred[i].objects, &gt[i].objects, MATCH_IOU);
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        let mut classes = Vec::with_capacity(matches.len());
        for (cls, preds, m) in &matches {
            tp += m.tp();
            fp += m.fp();
            fn_ += m.fn_();
            let mut flags = vec![false; preds.len()];
            for &(p, _) in &m.matches {
                flags[p] = true;
            }
            let ranked: Vec<RankedDetection> = preds
                .iter()
                .zip(flags)
                .map(|(o, is_tp)| RankedDetection { score: score_of(o), is_tp })
                .collect();
            classes.push((*cls, m.tp() + m.fn_(), ranked));
        }
        let total = tp + fp + fn_;
        let ad = if total == 0 { 1.0 } else { tp as f64 / total as f64 };
        (classes, ad)
    });

    let mut dets: BTreeMap<ObjectClass, Vec<RankedDetection>> = BTreeMap::new();
    let mut n_gt: BTreeMap<ObjectClass, usize> = BTreeMap::new();
    let mut per_frame_ad = Vec::with_capacity(gt.len());
    for (frame, (classes, ad)) in gt.iter().zip(per_frame) {
        per_frame_ad.push((frame.frame_index, ad));
        for (cls, count, ranked) in classes {
            *n_gt.entry(cls).or_default() += count;
            dets.entry(cls).or_default().extend(ranked);
        }
    }

    let mut per_class_ap = BTreeMap::new();
    for (&cls, &count) in &n_gt {
        let d = dets.get(&cls).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(ap) = average_precision(d, count) {
            per_class_ap.insert(cls, ap);
        }
    }
    if per_class_ap.is_empty() {
        return Err(Error::NoEvaluableClasses);
    }
    let map_value = per_class_ap.values().sum::<f64>() / per_class_ap.len() as f64;
    Ok(ApResult {
        per_class_ap,
        map_value,
        per_frame_ad,
    })
}
