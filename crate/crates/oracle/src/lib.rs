//! Brute-force reference evaluator.
//!
//! This crate re-derives the detection scoring protocol in the most literal
//! way possible: per-detection greedy matching by rescanning the ground
//! truth list, and 101-point interpolated AP computed by scanning every
//! curve point for every recall grid value. It shares only the plain data
//! types with `cocoft-core` and none of the scoring code, so tests can use
//! it as an independent check of the optimized evaluator.
//!
//! It is test support: no error handling, panics on invalid input.

pub mod gen;

use std::collections::BTreeMap;

use cocoft_core::coco::{BBox, Dataset};
use cocoft_core::eval::Detection;
use cocoft_core::subset::CategoryMap;

const MAX_DETECTIONS: usize = 100;

/// The ten IoU thresholds, derived from integer hundredths.
pub fn thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

fn overlap_1d(a_lo: f64, a_len: f64, b_lo: f64, b_len: f64) -> f64 {
    let lo = if a_lo > b_lo { a_lo } else { b_lo };
    let a_hi = a_lo + a_len;
    let b_hi = b_lo + b_len;
    let hi = if a_hi < b_hi { a_hi } else { b_hi };
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

fn iou_naive(a: &BBox, b: &BBox) -> f64 {
    let inter = overlap_1d(a.x, a.w, b.x, b.w) * overlap_1d(a.y, a.h, b.y, b.h);
    let union = a.w * a.h + b.w * b.h - inter;
    inter / union
}

fn crowd_overlap_naive(det: &BBox, crowd: &BBox) -> f64 {
    let inter = overlap_1d(det.x, det.w, crowd.x, crowd.w) * overlap_1d(det.y, det.h, crowd.y, crowd.h);
    inter / (det.w * det.h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Tp,
    Fp,
    Ignored,
}

/// Greedy matching, written as literally as possible: detections in score
/// order, each taking the unmatched non-crowd ground truth of maximal IoU
/// at or above the threshold (first one wins ties), with crowd coverage as
/// the ignore fallback.
fn match_naive(
    gts: &[(BBox, bool)], // (box, iscrowd)
    dets: &[BBox],
    threshold: f64,
) -> Vec<Outcome> {
    let mut taken = vec![false; gts.len()];
    let mut outcomes = Vec::new();
    for det in dets {
        let mut best_idx = usize::MAX;
        let mut best_iou = f64::NEG_INFINITY;
        for (gi, (gt_box, iscrowd)) in gts.iter().enumerate() {
            if *iscrowd || taken[gi] {
                continue;
            }
            let v = iou_naive(det, gt_box);
            if v >= threshold && v > best_iou {
                best_iou = v;
                best_idx = gi;
            }
        }
        if best_idx != usize::MAX {
            taken[best_idx] = true;
            outcomes.push(Outcome::Tp);
            continue;
        }
        let mut covered = false;
        for (gt_box, iscrowd) in gts {
            if *iscrowd && crowd_overlap_naive(det, gt_box) >= threshold {
                covered = true;
            }
        }
        outcomes.push(if covered { Outcome::Ignored } else { Outcome::Fp });
    }
    outcomes
}

/// AP straight from the definition: for each r in {0.00, ..., 1.00}, scan
/// every curve point and take the best precision among those with
/// recall >= r.
fn ap_naive(outcomes: &[Outcome], gt_count: usize) -> Option<f64> {
    if gt_count == 0 {
        return None;
    }
    let mut points: Vec<(f64, f64)> = Vec::new(); // (recall, precision)
    let mut tp = 0usize;
    for (n, o) in outcomes.iter().enumerate() {
        assert!(*o != Outcome::Ignored);
        if *o == Outcome::Tp {
            tp += 1;
        }
        points.push((tp as f64 / gt_count as f64, tp as f64 / (n + 1) as f64));
    }
    let mut sum = 0.0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        let mut best = 0.0f64;
        let mut any = false;
        for &(recall, precision) in &points {
            if recall >= r {
                any = true;
                if precision > best {
                    best = precision;
                }
            }
        }
        if any {
            sum += best;
        }
    }
    Some(sum / 101.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// category id -> AP per threshold (10 entries).
    pub ap: BTreeMap<u64, Vec<Option<f64>>>,
    /// category id -> mean AP over the thresholds.
    pub ap_mean: BTreeMap<u64, Option<f64>>,
    pub mean_ap: Option<f64>,
}

pub fn evaluate_naive(gt: &Dataset, detections: &[Detection], map: &CategoryMap) -> OracleReport {
    let thrs = thresholds();
    let mut ap: BTreeMap<u64, Vec<Option<f64>>> = BTreeMap::new();
    let mut ap_mean: BTreeMap<u64, Option<f64>> = BTreeMap::new();

    for &cat in map.selected_ids() {
        let gt_count = gt
            .annotations
            .iter()
            .filter(|a| a.category_id == cat && !a.iscrowd)
            .count();

        if gt_count == 0 {
            ap.insert(cat, vec![None; thrs.len()]);
            ap_mean.insert(cat, None);
            continue;
        }

        let mut per_threshold = Vec::new();
        for &thr in &thrs {
            // pooled (score, input index, outcome) across every image
            let mut pooled: Vec<(f64, usize, Outcome)> = Vec::new();
            for img in &gt.images {
                let gts: Vec<(BBox, bool)> = gt
                    .annotations
                    .iter()
                    .filter(|a| a.image_id == img.id && a.category_id == cat)
                    .map(|a| (a.bbox, a.iscrowd))
                    .collect();
                let mut dets: Vec<(f64, usize, BBox)> = detections
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.image_id == img.id && d.category_id == cat)
                    .map(|(i, d)| (d.score, i, d.bbox))
                    .collect();
                // stable sort keeps input order on score ties
                dets.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                dets.truncate(MAX_DETECTIONS);

                let boxes: Vec<BBox> = dets.iter().map(|d| d.2).collect();
                let outcomes = match_naive(&gts, &boxes, thr);
                for ((score, index, _), outcome) in dets.into_iter().zip(outcomes) {
                    if outcome != Outcome::Ignored {
                        pooled.push((score, index, outcome));
                    }
                }
            }
            pooled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let outcomes: Vec<Outcome> = pooled.into_iter().map(|(_, _, o)| o).collect();
            per_threshold.push(ap_naive(&outcomes, gt_count));
        }

        let defined: Vec<f64> = per_threshold.iter().flatten().copied().collect();
        ap_mean.insert(cat, Some(defined.iter().sum::<f64>() / defined.len() as f64));
        ap.insert(cat, per_threshold);
    }

    let defined: Vec<f64> = ap_mean.values().flatten().copied().collect();
    let mean_ap = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };

    OracleReport {
        ap,
        ap_mean,
        mean_ap,
    }
}
