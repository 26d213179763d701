//! Average precision for 3D and BEV box overlap, per class and region.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou_3d, iou_bev, Box3D, Roi3D};

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: String,
    pub bbox: Box3D,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub frame: String,
    pub bbox: Box3D,
    /// Radar points inside the box, when known.
    pub num_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegionFilter {
    /// No spatial filter.
    All,
    /// Keep boxes whose center lies in the region.
    Bounds { roi: Roi3D },
    /// Declared but not configured; evaluating it is an error.
    Unset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub filter: RegionFilter,
}

impl Region {
    pub fn entire() -> Self {
        Self {
            name: "entire".into(),
            filter: RegionFilter::All,
        }
    }

    /// Placeholder for the dataset's driving-corridor bounds.
    pub fn corridor_unset() -> Self {
        Self {
            name: "corridor".into(),
            filter: RegionFilter::Unset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub classes: Vec<String>,
    /// IoU threshold per class, aligned with `classes`.
    pub thresholds: Vec<f64>,
    pub regions: Vec<Region>,
    pub recall_positions: usize,
    /// Drop boxes whose BEV center is farther than this from the sensor.
    #[serde(default)]
    pub max_range_m: Option<f64>,
    /// Drop ground truth known to contain no radar points.
    #[serde(default)]
    pub require_points_in_gt: bool,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.len() != self.classes.len() {
            return Err(Error::Config(format!(
                "{} IoU thresholds for {} classes",
                self.thresholds.len(),
                self.classes.len()
            )));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("IoU threshold {t} outside (0, 1]")));
        }
        if self.recall_positions < 2 {
            return Err(Error::Config("need at least 2 recall positions".into()));
        }
        Ok(())
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// True-positive flag per detection, in processing (score-descending) order.
    pub flags: Vec<bool>,
    pub scores: Vec<f64>,
    pub n_gt: usize,
}

fn box_key_cmp(a: &Box3D, b: &Box3D) -> Ordering {
    let ka = [a.cx, a.cy, a.cz, a.w, a.l, a.h, a.theta];
    let kb = [b.cx, b.cy, b.cz, b.w, b.l, b.h, b.theta];
    ka.iter()
        .zip(&kb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Greedy score-descending matching of one class.
///
/// Each detection takes its best-overlapping unmatched ground truth in the
/// same frame; it is a true positive when that overlap reaches `thr`. Inputs
/// are put in a canonical order first, so the result does not depend on how
/// they were listed.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruth],
    class_id: usize,
    iou_fn: impl Fn(&Box3D, &Box3D) -> f64,
    thr: f64,
) -> MatchResult {
    let mut by_frame: BTreeMap<&str, Vec<&Box3D>> = BTreeMap::new();
    for g in gts.iter().filter(|g| g.bbox.class_id == class_id) {
        by_frame.entry(g.frame.as_str()).or_default().push(&g.bbox);
    }
    for boxes in by_frame.values_mut() {
        boxes.sort_by(|a, b| box_key_cmp(a, b));
    }
    let n_gt = by_frame.values().map(Vec::len).sum();
    let mut used: BTreeMap<&str, Vec<bool>> = by_frame.iter().map(|(k, v)| (*k, vec![false; v.len()])).collect();

    let mut order: Vec<&Detection> = dets.iter().filter(|d| d.bbox.class_id == class_id).collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.frame.cmp(&b.frame))
            .then_with(|| box_key_cmp(&a.bbox, &b.bbox))
    });

    let mut flags = Vec::with_capacity(order.len());
    let mut scores = Vec::with_capacity(order.len());
    for d in order {
        let mut tp = false;
        if let (Some(boxes), Some(taken)) = (by_frame.get(d.frame.as_str()), used.get_mut(d.frame.as_str())) {
            let mut best: Option<(usize, f64)> = None;
            for (k, g) in boxes.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                let iou = iou_fn(&d.bbox, g);
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((k, iou));
                }
            }
            if let Some((k, iou)) = best {
                if iou >= thr {
                    taken[k] = true;
                    tp = true;
                }
            }
        }
        flags.push(tp);
        scores.push(d.score);
    }
    MatchResult { flags, scores, n_gt }
}

/// Recall sample points: `{0, 0.1, ..., 1}` for 11, else `{1/R, 2/R, ..., 1}`.
pub fn recall_samples(recall_positions: usize) -> Vec<f64> {
    if recall_positions == 11 {
        (0..=10).map(|k| k as f64 / 10.0).collect()
    } else {
        (1..=recall_positions)
            .map(|k| k as f64 / recall_positions as f64)
            .collect()
    }
}

/// Interpolated average precision; `None` when there is no ground truth.
///
/// Detections are ranked by descending score. The precision at recall `r` is
/// the best precision reached at any recall `>= r` (0 if none).
pub fn average_precision(flags: &[bool], scores: &[f64], n_gt: usize, recall_positions: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..flags.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut tp = 0usize;
    let mut curve = Vec::with_capacity(flags.len());
    for (rank, &i) in idx.iter().enumerate() {
        if flags[i] {
            tp += 1;
        }
        curve.push((tp as f64 / n_gt as f64, tp as f64 / (rank + 1) as f64));
    }
    // suffix max of precision
    let mut best = 0.0f64;
    for point in curve.iter_mut().rev() {
        best = best.max(point.1);
        point.1 = best;
    }
    let samples = recall_samples(recall_positions);
    let sum: f64 = samples
        .iter()
        .map(|&r| {
            let k = curve.partition_point(|p| p.0 < r);
            curve.get(k).map_or(0.0, |p| p.1)
        })
        .sum();
    Some(sum / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: String,
    pub iou_threshold: f64,
    pub n_gt: usize,
    pub ap_3d: Option<f64>,
    pub ap_bev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: String,
    pub classes: Vec<ClassAp>,
    pub map_3d: Option<f64>,
    pub map_bev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub recall_positions: usize,
    pub regions: Vec<RegionReport>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn keep(b: &Box3D, filter: &RegionFilter, max_range: Option<f64>) -> bool {
    let in_region = match filter {
        RegionFilter::All | RegionFilter::Unset => true,
        RegionFilter::Bounds { roi } => roi.contains(b.cx, b.cy, b.cz),
    };
    in_region && max_range.is_none_or(|r| b.cx.hypot(b.cy) <= r)
}

/// AP for every configured region and class, with both overlap measures.
pub fn evaluate(dets: &[Detection], gts: &[GroundTruth], cfg: &EvalConfig) -> Result<ApReport> {
    evaluate_regions(dets, gts, cfg, &cfg.regions)
}

/// Like [`evaluate`], restricted to the named regions.
pub fn evaluate_named(dets: &[Detection], gts: &[GroundTruth], cfg: &EvalConfig, names: &[&str]) -> Result<ApReport> {
    let regions = names
        .iter()
        .map(|n| {
            cfg.region(n)
                .cloned()
                .ok_or_else(|| Error::Config(format!("unknown evaluation region `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_regions(dets, gts, cfg, &regions)
}

fn evaluate_regions(dets: &[Detection], gts: &[GroundTruth], cfg: &EvalConfig, regions: &[Region]) -> Result<ApReport> {
    cfg.validate()?;
    if let Some(d) = dets.iter().find(|d| !d.score.is_finite()) {
        return Err(Error::Config(format!("non-finite detection score in frame {}", d.frame)));
    }
    let mut out = Vec::with_capacity(regions.len());
    for region in regions {
        if region.filter == RegionFilter::Unset {
            return Err(Error::Config(format!(
                "evaluation region `{}` has no bounds configured",
                region.name
            )));
        }
        let rd: Vec<Detection> = dets
            .iter()
            .filter(|d| keep(&d.bbox, &region.filter, cfg.max_range_m))
            .cloned()
            .collect();
        let rg: Vec<GroundTruth> = gts
            .iter()
            .filter(|g| keep(&g.bbox, &region.filter, cfg.max_range_m))
            .filter(|g| !(cfg.require_points_in_gt && g.num_points == Some(0)))
            .cloned()
            .collect();
        let classes: Vec<ClassAp> = cfg
            .classes
            .iter()
            .zip(&cfg.thresholds)
            .enumerate()
            .map(|(c, (name, &thr))| {
                let m3 = match_detections(&rd, &rg, c, iou_3d, thr);
                let mb = match_detections(&rd, &rg, c, iou_bev, thr);
                ClassAp {
                    class: name.clone(),
                    iou_threshold: thr,
                    n_gt: m3.n_gt,
                    ap_3d: average_precision(&m3.flags, &m3.scores, m3.n_gt, cfg.recall_positions),
                    ap_bev: average_precision(&mb.flags, &mb.scores, mb.n_gt, cfg.recall_positions),
                }
            })
            .collect();
        out.push(RegionReport {
            region: region.name.clone(),
            map_3d: mean_defined(classes.iter().map(|c| c.ap_3d)),
            map_bev: mean_defined(classes.iter().map(|c| c.ap_bev)),
            classes,
        });
    }
    Ok(ApReport {
        recall_positions: cfg.recall_positions,
        regions: out,
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x))
}

impl ApReport {
    /// Plain-text table: one row per region, per-class AP_3D then AP_BEV, then mAPs.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let Some(first) = self.regions.first() else {
            return s;
        };
        let mut header = format!("{:<10}", "region");
        for c in &first.classes {
            let _ = write!(header, " {:>12}", format!("{} 3D", c.class));
        }
        for c in &first.classes {
            let _ = write!(header, " {:>12}", format!("{} BEV", c.class));
        }
        let _ = write!(header, " {:>8} {:>8}", "mAP_3D", "mAP_BEV");
        let _ = writeln!(s, "{header}");
        for r in &self.regions {
            let mut line = format!("{:<10}", r.region);
            for c in &r.classes {
                let _ = write!(line, " {:>12}", pct(c.ap_3d));
            }
            for c in &r.classes {
                let _ = write!(line, " {:>12}", pct(c.ap_bev));
            }
            let _ = write!(line, " {:>8} {:>8}", pct(r.map_3d), pct(r.map_bev));
            let _ = writeln!(s, "{line}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(x: f64, y: f64) -> Box3D {
        Box3D::new([x, y, -1.0], 1.6, 3.9, 1.56, 0.0, 0).unwrap()
    }

    fn gt(frame: &str, b: Box3D) -> GroundTruth {
        GroundTruth {
            frame: frame.into(),
            bbox: b,
            num_points: None,
        }
    }

    fn det(frame: &str, b: Box3D, score: f64) -> Detection {
        Detection {
            frame: frame.into(),
            bbox: b,
            score,
        }
    }

    fn cfg() -> EvalConfig {
        EvalConfig {
            classes: vec!["Car".into()],
            thresholds: vec![0.5],
            regions: vec![Region::entire()],
            recall_positions: 40,
            max_range_m: None,
            require_points_in_gt: false,
        }
    }

    #[test]
    fn perfect_detections_all_tp() {
        let g = vec![gt("a", car(5.0, 0.0)), gt("a", car(15.0, 2.0))];
        let d = vec![det("a", car(5.0, 0.0), 1.0), det("a", car(15.0, 2.0), 1.0)];
        let m = match_detections(&d, &g, 0, iou_3d, 0.5);
        assert_eq!(m.flags, vec![true, true]);
        assert_eq!(average_precision(&m.flags, &m.scores, m.n_gt, 40), Some(1.0));
    }

    #[test]
    fn lone_detection_is_fp() {
        let m = match_detections(&[det("a", car(5.0, 0.0), 0.7)], &[], 0, iou_bev, 0.5);
        assert_eq!(m.flags, vec![false]);
        assert_eq!(m.n_gt, 0);
        assert_eq!(average_precision(&m.flags, &m.scores, 0, 40), None);
    }

    #[test]
    fn duplicate_on_one_gt_is_tp_then_fp() {
        let g = vec![gt("a", car(5.0, 0.0))];
        let d = vec![det("a", car(5.1, 0.0), 0.8), det("a", car(5.0, 0.0), 0.9)];
        let m = match_detections(&d, &g, 0, iou_bev, 0.5);
        assert_eq!(m.flags, vec![true, false]);
        assert_eq!(m.scores, vec![0.9, 0.8]);
    }

    #[test]
    fn ap_hand_cases() {
        assert_eq!(average_precision(&[false], &[0.9], 1, 40), Some(0.0));
        // FP ranked above the TP: precision 1/2 at full recall
        assert_eq!(average_precision(&[true, false], &[0.9, 0.95], 1, 40), Some(0.5));
        assert_eq!(average_precision(&[true, false], &[0.9, 0.95], 1, 11), Some(0.5));
        assert_eq!(average_precision(&[], &[], 3, 40), Some(0.0));
    }

    #[test]
    fn recall_grid() {
        let r40 = recall_samples(40);
        assert_eq!(r40.len(), 40);
        assert_eq!(r40[0], 1.0 / 40.0);
        assert_eq!(*r40.last().unwrap(), 1.0);
        let r11 = recall_samples(11);
        assert_eq!(r11[0], 0.0);
        assert_eq!(r11.len(), 11);
    }

    #[test]
    fn evaluate_identity_and_empty() {
        let g = vec![gt("a", car(5.0, 0.0)), gt("b", car(8.0, 3.0))];
        let d: Vec<Detection> = g.iter().map(|g| det(&g.frame, g.bbox, 0.9)).collect();
        let rep = evaluate(&d, &g, &cfg()).unwrap();
        assert_eq!(rep.regions[0].map_3d, Some(1.0));
        assert_eq!(rep.regions[0].map_bev, Some(1.0));
        let rep = evaluate(&[], &g, &cfg()).unwrap();
        assert_eq!(rep.regions[0].classes[0].ap_3d, Some(0.0));
        assert!(rep.table().contains("Car 3D"));
    }

    #[test]
    fn range_and_point_filters() {
        let mut c = cfg();
        c.max_range_m = Some(70.0);
        let g = vec![gt("a", car(80.0, 0.0))];
        let rep = evaluate(&[], &g, &c).unwrap();
        assert_eq!(rep.regions[0].classes[0].n_gt, 0);
        assert_eq!(rep.regions[0].map_3d, None);
        let mut c = cfg();
        c.require_points_in_gt = true;
        let g = vec![GroundTruth {
            num_points: Some(0),
            ..gt("a", car(5.0, 0.0))
        }];
        assert_eq!(evaluate(&[], &g, &c).unwrap().regions[0].classes[0].n_gt, 0);
    }

    #[test]
    fn unset_region_errors() {
        let mut c = cfg();
        c.regions.push(Region::corridor_unset());
        assert!(matches!(evaluate(&[], &[], &c), Err(Error::Config(_))));
        assert!(evaluate_named(&[], &[], &c, &["entire"]).is_ok());
        assert!(evaluate_named(&[], &[], &c, &["nowhere"]).is_err());
    }

    #[test]
    fn region_bounds_filter() {
        let mut c = cfg();
        c.regions = vec![Region {
            name: "near".into(),
            filter: RegionFilter::Bounds {
                roi: Roi3D::new((0.0, 10.0), (-5.0, 5.0), (-5.0, 5.0)).unwrap(),
            },
        }];
        let g = vec![gt("a", car(5.0, 0.0)), gt("a", car(30.0, 0.0))];
        let rep = evaluate(&[], &g, &c).unwrap();
        assert_eq!(rep.regions[0].classes[0].n_gt, 1);
    }
}
