//! Detection scoring with the COCO protocol: per-category average precision
//! at the ten IoU thresholds 0.50:0.05:0.95, 101-point interpolation,
//! at most 100 detections per image and category, and crowd regions as
//! ignore zones (overlap measured as intersection over detection area).
//!
//! Determinism: score ties break by input order everywhere, and ties on IoU
//! resolve to the earlier ground-truth box. AP can differ across tie orders,
//! so the rule is part of the contract.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::coco::{BBox, Dataset};
use crate::subset::CategoryMap;

pub const IOU_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

/// Cap on scored detections per (image, category), by descending score.
pub const MAX_DETECTIONS: usize = 100;

const RECALL_POINTS: usize = 101;

/// One scored predicted box, in the COCO results convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("JSON parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {message}")]
    Schema { message: String },
    #[error("integrity error: {}", .problems.join("; "))]
    Integrity { problems: Vec<String> },
    #[error("degenerate boxes cannot be evaluated: {}", .problems.join("; "))]
    Degenerate { problems: Vec<String> },
}

/// Intersection over union of two boxes. Both must have positive extents.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    assert!(
        a.is_positive() && b.is_positive(),
        "iou requires positive box extents"
    );
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Overlap of a detection with a crowd region: intersection over the
/// detection's own area, so a detection fully inside the crowd scores 1.
pub fn crowd_overlap(det: &BBox, crowd: &BBox) -> f64 {
    assert!(
        det.is_positive() && crowd.is_positive(),
        "crowd_overlap requires positive box extents"
    );
    let iw = (det.right().min(crowd.right()) - det.x.max(crowd.x)).max(0.0);
    let ih = (det.bottom().min(crowd.bottom()) - det.y.max(crowd.y)).max(0.0);
    iw * ih / det.area()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOutcome {
    TruePositive,
    FalsePositive,
    /// Covered by a crowd region; excluded from the precision/recall curve.
    Ignored,
}

/// Ground truth of one category within one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub bbox: BBox,
    pub iscrowd: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Outcome per detection, in the order given.
    pub outcomes: Vec<DetectionOutcome>,
    /// Which ground-truth boxes were matched (crowd entries stay false).
    pub matched_gt: Vec<bool>,
}

/// Greedy matching for one (image, category) pair at one IoU threshold.
///
/// `dets` must already be sorted by descending score (ties by input order).
/// Each detection takes the unmatched non-crowd ground truth of maximal IoU
/// if that IoU reaches the threshold; failing that, it is ignored when some
/// crowd region covers it at the threshold; otherwise it is a false
/// positive. Each non-crowd ground truth matches at most once.
pub fn match_category(gts: &[GroundTruth], dets: &[BBox], threshold: f64) -> MatchResult {
    let mut matched_gt = vec![false; gts.len()];
    let mut outcomes = Vec::with_capacity(dets.len());
    for det in dets {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt.iscrowd || matched_gt[gi] {
                continue;
            }
            let v = iou(det, &gt.bbox);
            if v < threshold {
                continue;
            }
            // strict `>` keeps the earlier ground truth on ties
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            matched_gt[gi] = true;
            outcomes.push(DetectionOutcome::TruePositive);
        } else if gts
            .iter()
            .any(|g| g.iscrowd && crowd_overlap(det, &g.bbox) >= threshold)
        {
            outcomes.push(DetectionOutcome::Ignored);
        } else {
            outcomes.push(DetectionOutcome::FalsePositive);
        }
    }
    MatchResult {
        outcomes,
        matched_gt,
    }
}

/// 101-point interpolated average precision.
///
/// `outcomes` is the pooled TP/FP list of one category, globally sorted by
/// descending score with ignored entries already removed. The precision
/// envelope p(r) takes the maximum precision over all curve points with
/// recall >= r; AP averages p(r) over r in {0.00, 0.01, ..., 1.00}.
/// Returns `None` when `gt_count` is zero (no defined recall).
pub fn average_precision(outcomes: &[DetectionOutcome], gt_count: usize) -> Option<f64> {
    if gt_count == 0 {
        return None;
    }
    let mut recalls = Vec::with_capacity(outcomes.len());
    let mut precisions = Vec::with_capacity(outcomes.len());
    let mut tp = 0usize;
    for (n, outcome) in outcomes.iter().enumerate() {
        debug_assert!(
            *outcome != DetectionOutcome::Ignored,
            "ignored outcomes must be removed before AP"
        );
        if *outcome == DetectionOutcome::TruePositive {
            tp += 1;
        }
        recalls.push(tp as f64 / gt_count as f64);
        precisions.push(tp as f64 / (n + 1) as f64);
    }
    // envelope: running max from the right
    for i in (0..precisions.len().saturating_sub(1)).rev() {
        precisions[i] = precisions[i].max(precisions[i + 1]);
    }
    let mut sum = 0.0;
    let mut pt = 0usize;
    for i in 0..RECALL_POINTS {
        let r = i as f64 / 100.0;
        while pt < recalls.len() && recalls[pt] < r {
            pt += 1;
        }
        if pt < recalls.len() {
            sum += precisions[pt];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryReport {
    pub category_id: u64,
    pub name: String,
    /// Non-crowd ground-truth boxes of this category.
    pub gt_count: usize,
    pub crowd_count: usize,
    /// Detections of this category referencing the dataset (before the
    /// per-image cap).
    pub det_count: usize,
    /// AP per IoU threshold, `null` for categories without ground truth.
    pub ap_per_threshold: Vec<Option<f64>>,
    /// Mean over the thresholds, `null` for categories without ground truth.
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    /// One entry per selected category, ascending by id.
    pub categories: Vec<CategoryReport>,
    /// Unweighted mean over categories with at least one non-crowd ground
    /// truth; `null` when no category qualifies.
    pub mean_ap: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("JSON serialization");
        s.push('\n');
        s
    }

    /// Plain-text summary table.
    pub fn summary_table(&self) -> String {
        fn fmt_ap(ap: Option<f64>) -> String {
            match ap {
                Some(v) => format!("{v:.3}"),
                None => "-".to_string(),
            }
        }
        let mut out = String::new();
        out.push_str(&format!(
            "{:<20} {:>6} {:>6} {:>6}  {:>6}\n",
            "category", "id", "gt", "det", "ap"
        ));
        for c in &self.categories {
            out.push_str(&format!(
                "{:<20} {:>6} {:>6} {:>6}  {:>6}\n",
                c.name,
                c.category_id,
                c.gt_count,
                c.det_count,
                fmt_ap(c.ap)
            ));
        }
        out.push_str(&format!(
            "{:<20} {:>6} {:>6} {:>6}  {:>6}\n",
            "mean AP",
            "",
            "",
            "",
            fmt_ap(self.mean_ap)
        ));
        out
    }
}

/// Parse a COCO-results detections file: a JSON array of objects with
/// `image_id`, `category_id`, `bbox` ([x, y, w, h], positive extents), and
/// `score`. Unrecognized keys are ignored.
pub fn parse_detections(bytes: &[u8]) -> Result<Vec<Detection>, EvalError> {
    #[derive(serde::Deserialize)]
    struct RawDetection {
        image_id: u64,
        category_id: u64,
        bbox: [f64; 4],
        score: f64,
    }

    let raw: Vec<RawDetection> = serde_json::from_slice(bytes).map_err(|e| EvalError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut out = Vec::with_capacity(raw.len());
    for (i, r) in raw.into_iter().enumerate() {
        let [x, y, w, h] = r.bbox;
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(EvalError::Schema {
                message: format!("detection {i} has a non-finite bbox"),
            });
        }
        if x < 0.0 || y < 0.0 {
            return Err(EvalError::Schema {
                message: format!("detection {i} has a negative bbox origin"),
            });
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(EvalError::Schema {
                message: format!("detection {i} has a degenerate bbox ({w} x {h})"),
            });
        }
        if !r.score.is_finite() {
            return Err(EvalError::Schema {
                message: format!("detection {i} has a non-finite score"),
            });
        }
        out.push(Detection {
            image_id: r.image_id,
            category_id: r.category_id,
            bbox: BBox::new(x, y, w, h),
            score: r.score,
        });
    }
    Ok(out)
}

struct ScoredBox {
    bbox: BBox,
    score: f64,
    /// Position in the input detections list; the global tie-breaker.
    index: usize,
}

/// Score `detections` against `gt` for the categories selected in `map`.
///
/// Detections of unselected categories are skipped. Detections referencing
/// unknown images or categories are integrity errors, and any degenerate box
/// (detection or ground truth) within a scored category is rejected.
pub fn evaluate(
    gt: &Dataset,
    detections: &[Detection],
    map: &CategoryMap,
) -> Result<EvalReport, EvalError> {
    let image_ids: BTreeSet<u64> = gt.images.iter().map(|i| i.id).collect();
    let category_ids: BTreeSet<u64> = gt.categories.iter().map(|c| c.id).collect();
    let names: BTreeMap<u64, &str> = gt
        .categories
        .iter()
        .map(|c| (c.id, c.name.as_str()))
        .collect();

    let mut problems = Vec::new();
    for &id in map.selected_ids() {
        if !category_ids.contains(&id) {
            problems.push(format!("category map references missing category {id}"));
        }
    }
    for (i, det) in detections.iter().enumerate() {
        if !image_ids.contains(&det.image_id) {
            problems.push(format!("detection {i} references missing image {}", det.image_id));
        }
        if !category_ids.contains(&det.category_id) {
            problems.push(format!(
                "detection {i} references missing category {}",
                det.category_id
            ));
        }
        if !det.score.is_finite() {
            problems.push(format!("detection {i} has a non-finite score"));
        }
    }
    if !problems.is_empty() {
        return Err(EvalError::Integrity { problems });
    }

    let mut degenerate = Vec::new();
    for ann in &gt.annotations {
        if map.contains(ann.category_id) && !ann.bbox.is_positive() {
            degenerate.push(format!("annotation {}", ann.id));
        }
    }
    for (i, det) in detections.iter().enumerate() {
        if map.contains(det.category_id) && !det.bbox.is_positive() {
            degenerate.push(format!("detection {i}"));
        }
    }
    if !degenerate.is_empty() {
        return Err(EvalError::Degenerate {
            problems: degenerate,
        });
    }

    // Group ground truth and detections by (category, image).
    let mut gt_groups: BTreeMap<(u64, u64), Vec<GroundTruth>> = BTreeMap::new();
    let mut gt_count: BTreeMap<u64, usize> = BTreeMap::new();
    let mut crowd_count: BTreeMap<u64, usize> = BTreeMap::new();
    for ann in &gt.annotations {
        if !map.contains(ann.category_id) {
            continue;
        }
        gt_groups
            .entry((ann.category_id, ann.image_id))
            .or_default()
            .push(GroundTruth {
                bbox: ann.bbox,
                iscrowd: ann.iscrowd,
            });
        let slot = if ann.iscrowd {
            crowd_count.entry(ann.category_id).or_default()
        } else {
            gt_count.entry(ann.category_id).or_default()
        };
        *slot += 1;
    }

    let mut det_groups: BTreeMap<(u64, u64), Vec<ScoredBox>> = BTreeMap::new();
    let mut det_count: BTreeMap<u64, usize> = BTreeMap::new();
    for (index, det) in detections.iter().enumerate() {
        if !map.contains(det.category_id) {
            continue;
        }
        *det_count.entry(det.category_id).or_default() += 1;
        det_groups
            .entry((det.category_id, det.image_id))
            .or_default()
            .push(ScoredBox {
                bbox: det.bbox,
                score: det.score,
                index,
            });
    }
    for group in det_groups.values_mut() {
        group.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
        group.truncate(MAX_DETECTIONS);
    }

    let mut categories = Vec::with_capacity(map.len());
    for &cat in map.selected_ids() {
        let n_gt = gt_count.get(&cat).copied().unwrap_or(0);
        let images: BTreeSet<u64> = gt_groups
            .range((cat, 0)..=(cat, u64::MAX))
            .map(|((_, img), _)| *img)
            .chain(
                det_groups
                    .range((cat, 0)..=(cat, u64::MAX))
                    .map(|((_, img), _)| *img),
            )
            .collect();

        let ap_per_threshold: Vec<Option<f64>> = if n_gt == 0 {
            vec![None; IOU_THRESHOLDS.len()]
        } else {
            IOU_THRESHOLDS
                .iter()
                .map(|&threshold| {
                    let mut pooled: Vec<(f64, usize, DetectionOutcome)> = Vec::new();
                    for &img in &images {
                        let no_gts: Vec<GroundTruth> = Vec::new();
                        let gts = gt_groups.get(&(cat, img)).unwrap_or(&no_gts);
                        let no_dets: Vec<ScoredBox> = Vec::new();
                        let dets = det_groups.get(&(cat, img)).unwrap_or(&no_dets);
                        let boxes: Vec<BBox> = dets.iter().map(|d| d.bbox).collect();
                        let result = match_category(gts, &boxes, threshold);
                        for (det, outcome) in dets.iter().zip(result.outcomes) {
                            if outcome != DetectionOutcome::Ignored {
                                pooled.push((det.score, det.index, outcome));
                            }
                        }
                    }
                    pooled.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                    let outcomes: Vec<DetectionOutcome> =
                        pooled.into_iter().map(|(_, _, o)| o).collect();
                    average_precision(&outcomes, n_gt)
                })
                .collect()
        };

        let ap = if n_gt == 0 {
            None
        } else {
            let defined: Vec<f64> = ap_per_threshold.iter().flatten().copied().collect();
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        };

        categories.push(CategoryReport {
            category_id: cat,
            name: names.get(&cat).copied().unwrap_or("").to_string(),
            gt_count: n_gt,
            crowd_count: crowd_count.get(&cat).copied().unwrap_or(0),
            det_count: det_count.get(&cat).copied().unwrap_or(0),
            ap_per_threshold,
            ap,
        });
    }

    let defined: Vec<f64> = categories.iter().filter_map(|c| c.ap).collect();
    let mean_ap = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };

    Ok(EvalReport {
        thresholds: IOU_THRESHOLDS.to_vec(),
        categories,
        mean_ap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coco::{Annotation, Category, ImageRecord};
    use crate::subset::make_category_map;

    const EPS: f64 = 1e-12;

    fn gt_box(x: f64, y: f64, w: f64, h: f64) -> GroundTruth {
        GroundTruth {
            bbox: BBox::new(x, y, w, h),
            iscrowd: false,
        }
    }

    #[test]
    fn iou_identical_boxes() {
        let b = BBox::new(2.0, 3.0, 8.0, 5.0);
        assert!((iou(&b, &b) - 1.0).abs() < EPS);
    }

    #[test]
    fn iou_disjoint_boxes() {
        let a = BBox::new(0.0, 0.0, 5.0, 5.0);
        let b = BBox::new(10.0, 10.0, 5.0, 5.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(5.0, 0.0, 10.0, 10.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < EPS);
    }

    #[test]
    #[should_panic(expected = "positive box extents")]
    fn iou_rejects_degenerate() {
        let a = BBox::new(0.0, 0.0, 0.0, 10.0);
        let b = BBox::new(0.0, 0.0, 1.0, 1.0);
        iou(&a, &b);
    }

    #[test]
    fn crowd_overlap_cases() {
        let det = BBox::new(2.0, 2.0, 2.0, 2.0);
        let crowd = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert!((crowd_overlap(&det, &crowd) - 1.0).abs() < EPS);

        let far = BBox::new(20.0, 20.0, 2.0, 2.0);
        assert_eq!(crowd_overlap(&far, &crowd), 0.0);

        let det = BBox::new(0.0, 0.0, 10.0, 10.0);
        let crowd = BBox::new(5.0, 0.0, 20.0, 20.0);
        assert!((crowd_overlap(&det, &crowd) - 0.5).abs() < EPS);
    }

    #[test]
    fn match_perfect_single() {
        let gts = [gt_box(0.0, 0.0, 10.0, 10.0)];
        let dets = [BBox::new(0.0, 0.0, 10.0, 10.0)];
        let r = match_category(&gts, &dets, 0.5);
        assert_eq!(r.outcomes, vec![DetectionOutcome::TruePositive]);
        assert_eq!(r.matched_gt, vec![true]);
    }

    #[test]
    fn match_second_detection_is_fp() {
        // Both detections exceed the threshold on the single ground truth;
        // whichever is scored higher (comes first) takes the match.
        let gts = [gt_box(0.0, 0.0, 10.0, 10.0)];
        let exact = BBox::new(0.0, 0.0, 10.0, 10.0);
        let shifted = BBox::new(1.0, 0.0, 10.0, 10.0);
        for dets in [[exact, shifted], [shifted, exact]] {
            let r = match_category(&gts, &dets, 0.5);
            assert_eq!(
                r.outcomes,
                vec![
                    DetectionOutcome::TruePositive,
                    DetectionOutcome::FalsePositive
                ]
            );
        }
    }

    #[test]
    fn match_crowd_ignores_detection() {
        let gts = [GroundTruth {
            bbox: BBox::new(0.0, 0.0, 50.0, 50.0),
            iscrowd: true,
        }];
        let dets = [BBox::new(10.0, 10.0, 5.0, 5.0)];
        let r = match_category(&gts, &dets, 0.5);
        assert_eq!(r.outcomes, vec![DetectionOutcome::Ignored]);
        assert_eq!(r.matched_gt, vec![false]);
    }

    #[test]
    fn match_prefers_higher_iou() {
        let gts = [gt_box(0.0, 0.0, 10.0, 10.0), gt_box(2.0, 0.0, 10.0, 10.0)];
        let dets = [BBox::new(2.0, 0.0, 10.0, 10.0)];
        let r = match_category(&gts, &dets, 0.5);
        assert_eq!(r.matched_gt, vec![false, true]);
    }

    #[test]
    fn ap_perfect_detector() {
        let ap = average_precision(&[DetectionOutcome::TruePositive], 1).unwrap();
        assert!((ap - 1.0).abs() < EPS);
    }

    #[test]
    fn ap_no_detections() {
        let ap = average_precision(&[], 1).unwrap();
        assert_eq!(ap, 0.0);
    }

    #[test]
    fn ap_half_recall() {
        // One TP of two ground truths: p(r) = 1 for the 51 recall points up
        // to 0.5, then 0, so AP = 51/101.
        let ap = average_precision(&[DetectionOutcome::TruePositive], 2).unwrap();
        assert!((ap - 51.0 / 101.0).abs() < EPS, "{ap}");
    }

    #[test]
    fn ap_zero_gt_is_undefined() {
        assert_eq!(average_precision(&[], 0), None);
    }

    #[test]
    fn removing_fp_does_not_decrease_ap() {
        use DetectionOutcome::{FalsePositive as FP, TruePositive as TP};
        let with_fp = average_precision(&[TP, FP, TP], 2).unwrap();
        let without = average_precision(&[TP, TP], 2).unwrap();
        assert!(without >= with_fp - EPS);
        let expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
        assert!((with_fp - expected).abs() < EPS);
    }

    // ---- evaluate ----

    fn dataset() -> Dataset {
        Dataset {
            images: vec![
                ImageRecord {
                    id: 1,
                    file_name: "a.jpg".into(),
                    width: 100,
                    height: 100,
                },
                ImageRecord {
                    id: 2,
                    file_name: "b.jpg".into(),
                    width: 100,
                    height: 100,
                },
            ],
            annotations: vec![
                Annotation {
                    id: 1,
                    image_id: 1,
                    category_id: 1,
                    bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
                    area: 100.0,
                    iscrowd: false,
                    segmentation: None,
                },
                Annotation {
                    id: 2,
                    image_id: 1,
                    category_id: 3,
                    bbox: BBox::new(20.0, 20.0, 10.0, 10.0),
                    area: 100.0,
                    iscrowd: false,
                    segmentation: None,
                },
                Annotation {
                    id: 3,
                    image_id: 2,
                    category_id: 1,
                    bbox: BBox::new(5.0, 5.0, 20.0, 20.0),
                    area: 400.0,
                    iscrowd: false,
                    segmentation: None,
                },
            ],
            categories: vec![
                Category {
                    id: 1,
                    name: "person".into(),
                    supercategory: "person".into(),
                },
                Category {
                    id: 3,
                    name: "car".into(),
                    supercategory: "vehicle".into(),
                },
            ],
            extra: vec![],
        }
    }

    fn perfect_detections(d: &Dataset) -> Vec<Detection> {
        d.annotations
            .iter()
            .map(|a| Detection {
                image_id: a.image_id,
                category_id: a.category_id,
                bbox: a.bbox,
                score: 0.9,
            })
            .collect()
    }

    #[test]
    fn perfect_detector_scores_one() {
        let d = dataset();
        let m = make_category_map(&d, &[1, 3]).unwrap();
        let report = evaluate(&d, &perfect_detections(&d), &m).unwrap();
        assert!((report.mean_ap.unwrap() - 1.0).abs() < EPS);
        for c in &report.categories {
            assert!((c.ap.unwrap() - 1.0).abs() < EPS);
            for ap in c.ap_per_threshold.iter().flatten() {
                assert!((ap - 1.0).abs() < EPS);
            }
        }
    }

    #[test]
    fn no_detections_scores_zero() {
        let d = dataset();
        let m = make_category_map(&d, &[1, 3]).unwrap();
        let report = evaluate(&d, &[], &m).unwrap();
        assert_eq!(report.mean_ap, Some(0.0));
    }

    #[test]
    fn category_without_gt_is_excluded_from_mean() {
        let mut d = dataset();
        d.annotations.retain(|a| a.category_id != 3);
        let m = make_category_map(&d, &[1, 3]).unwrap();
        let report = evaluate(&d, &perfect_detections(&d), &m).unwrap();
        let car = report.categories.iter().find(|c| c.category_id == 3).unwrap();
        assert_eq!(car.ap, None);
        assert!(car.ap_per_threshold.iter().all(|a| a.is_none()));
        assert!((report.mean_ap.unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn unknown_image_reference_is_integrity_error() {
        let d = dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        let dets = vec![Detection {
            image_id: 99,
            category_id: 1,
            bbox: BBox::new(0.0, 0.0, 5.0, 5.0),
            score: 0.5,
        }];
        match evaluate(&d, &dets, &m).unwrap_err() {
            EvalError::Integrity { problems } => {
                assert!(problems[0].contains("99"), "{problems:?}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_gt_rejected_at_evaluation() {
        let mut d = dataset();
        d.annotations[0].bbox = BBox::new(0.0, 0.0, 0.0, 10.0);
        let m = make_category_map(&d, &[1]).unwrap();
        match evaluate(&d, &[], &m).unwrap_err() {
            EvalError::Degenerate { problems } => {
                assert!(problems[0].contains("annotation 1"), "{problems:?}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unselected_categories_are_not_scored() {
        let d = dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        // a car detection on a person-only evaluation is skipped, not an error
        let mut dets = perfect_detections(&d);
        dets.retain(|det| det.category_id == 3);
        let report = evaluate(&d, &dets, &m).unwrap();
        assert_eq!(report.categories.len(), 1);
        assert_eq!(report.categories[0].category_id, 1);
        assert_eq!(report.categories[0].det_count, 0);
    }

    #[test]
    fn per_image_detection_cap_applies() {
        // 101 detections in one image; the sole true positive has the lowest
        // score, so the cap drops exactly it and AP collapses to zero.
        let d = dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        let mut dets = Vec::new();
        for i in 0..100 {
            dets.push(Detection {
                image_id: 1,
                category_id: 1,
                bbox: BBox::new(80.0, 80.0, 5.0, 5.0),
                score: 0.9 - (i as f64) * 1e-3,
            });
        }
        dets.push(Detection {
            image_id: 1,
            category_id: 1,
            bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
            score: 0.01,
        });
        let report = evaluate(&d, &dets, &m).unwrap();
        let person = &report.categories[0];
        // image 2 still holds an unmatched ground truth either way
        assert_eq!(person.ap_per_threshold[0], Some(0.0));
    }

    #[test]
    fn ties_break_by_input_order() {
        // Two equal-score detections on one ground truth: the earlier one in
        // the input list must take the match.
        let d = dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        let dets = vec![
            Detection {
                image_id: 1,
                category_id: 1,
                bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
                score: 0.5,
            },
            Detection {
                image_id: 1,
                category_id: 1,
                bbox: BBox::new(1.0, 0.0, 10.0, 10.0),
                score: 0.5,
            },
        ];
        let a = evaluate(&d, &dets, &m).unwrap();
        let mut swapped = dets.clone();
        swapped.swap(0, 1);
        let b = evaluate(&d, &swapped, &m).unwrap();
        // deterministic either way; swapping the input changes which box is
        // scored first and may change AP, but each run must reproduce itself
        assert_eq!(a, evaluate(&d, &dets, &m).unwrap());
        assert_eq!(b, evaluate(&d, &swapped, &m).unwrap());
    }

    #[test]
    fn detections_file_parses() {
        let json = r#"[
            {"image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10], "score": 0.9},
            {"image_id": 2, "category_id": 3, "bbox": [5.5, 5.0, 2.0, 2.0], "score": 0.1}
        ]"#;
        let dets = parse_detections(json.as_bytes()).unwrap();
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0].image_id, 1);
        assert_eq!(dets[1].bbox, BBox::new(5.5, 5.0, 2.0, 2.0));
    }

    #[test]
    fn detections_file_rejects_degenerate_box() {
        let json = r#"[{"image_id": 1, "category_id": 1, "bbox": [0, 0, 0, 10], "score": 0.9}]"#;
        assert!(matches!(
            parse_detections(json.as_bytes()).unwrap_err(),
            EvalError::Schema { .. }
        ));
    }

    #[test]
    fn report_json_is_stable() {
        let d = dataset();
        let m = make_category_map(&d, &[1, 3]).unwrap();
        let report = evaluate(&d, &perfect_detections(&d), &m).unwrap();
        assert_eq!(report.to_json(), report.to_json());
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["categories"][0]["name"], "person");
        assert_eq!(v["mean_ap"], 1.0);
        assert!(report.summary_table().contains("mean AP"));
        assert!(report.summary_table().contains("1.000"));
    }
}
