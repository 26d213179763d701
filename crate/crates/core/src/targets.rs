//! Anchor lattice, IoU-based target assignment and residual box coding.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{iou_3d, iou_bev, normalize_angle, Box3D, Roi3D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSpec {
    pub class_id: usize,
    pub name: String,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    /// Bottom-face z of the anchor.
    pub z_bottom: f64,
    pub rotations: Vec<f64>,
    pub match_thr: f64,
    pub unmatch_thr: f64,
}

impl AnchorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.unmatch_thr && self.unmatch_thr <= self.match_thr && self.match_thr <= 1.0) {
            return Err(Error::Config(format!(
                "anchor `{}`: need 0 <= unmatch ({}) <= match ({}) <= 1",
                self.name, self.unmatch_thr, self.match_thr
            )));
        }
        for d in [self.w, self.l, self.h] {
            if !(d > 0.0) {
                return Err(Error::NonPositiveDimension(d));
            }
        }
        if self.rotations.is_empty() {
            return Err(Error::Config(format!("anchor `{}` has no rotations", self.name)));
        }
        Ok(())
    }

    pub fn center_z(&self) -> f64 {
        self.z_bottom + 0.5 * self.h
    }
}

/// Dense anchors laid out as (class, row, col, rotation).
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGrid {
    pub boxes: Vec<Box3D>,
    pub height: usize,
    pub width: usize,
    /// Meters per cell along (x, y).
    pub stride: [f64; 2],
    pub origin: [f64; 2],
    /// Per spec: (class_id, first anchor index, rotations).
    blocks: Vec<(usize, usize, usize)>,
}

impl AnchorGrid {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Flat index of (spec block, row, col, rotation).
    pub fn index(&self, block: usize, row: usize, col: usize, rot: usize) -> usize {
        let (_, start, n_rot) = self.blocks[block];
        start + (row * self.width + col) * n_rot + rot
    }

    fn col_range(&self, x: f64, reach: f64) -> (usize, usize) {
        axis_range(x - self.origin[0], reach, self.stride[0], self.width)
    }

    fn row_range(&self, y: f64, reach: f64) -> (usize, usize) {
        axis_range(y - self.origin[1], reach, self.stride[1], self.height)
    }
}

/// Cells whose centers lie within `reach` of `offset`, as an inclusive range;
/// empty when `lo > hi`.
fn axis_range(offset: f64, reach: f64, stride: f64, n: usize) -> (usize, usize) {
    let lo = ((offset - reach) / stride - 0.5).ceil().max(0.0);
    let hi = ((offset + reach) / stride - 0.5).floor();
    if hi < 0.0 || lo > (n - 1) as f64 {
        return (1, 0);
    }
    (lo as usize, (hi as usize).min(n - 1))
}

/// One anchor per spec, cell and rotation, centered on BEV cell centers of an
/// `height x width` lattice over the ROI.
pub fn generate_anchors(specs: &[AnchorSpec], height: usize, width: usize, roi: &Roi3D) -> Result<AnchorGrid> {
    if height == 0 || width == 0 {
        return Err(Error::Config(format!("anchor lattice {height}x{width} is empty")));
    }
    roi.validate()?;
    let [ex, ey, _] = roi.extent();
    let stride = [ex / width as f64, ey / height as f64];
    let mut boxes = Vec::new();
    let mut blocks = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        blocks.push((spec.class_id, boxes.len(), spec.rotations.len()));
        let cz = spec.center_z();
        for row in 0..height {
            let cy = roi.y_min + (row as f64 + 0.5) * stride[1];
            for col in 0..width {
                let cx = roi.x_min + (col as f64 + 0.5) * stride[0];
                for &rot in &spec.rotations {
                    boxes.push(Box3D::new([cx, cy, cz], spec.w, spec.l, spec.h, rot, spec.class_id)?);
                }
            }
        }
    }
    Ok(AnchorGrid {
        boxes,
        height,
        width,
        stride,
        origin: [roi.x_min, roi.y_min],
        blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IouMetric {
    #[default]
    Bev,
    #[serde(rename = "3d")]
    ThreeD,
}

impl IouMetric {
    pub fn eval(self, a: &Box3D, b: &Box3D) -> f64 {
        match self {
            IouMetric::Bev => iou_bev(a, b),
            IouMetric::ThreeD => iou_3d(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorLabel {
    Negative,
    Ignore,
    Positive { class_id: usize, gt: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub labels: Vec<AnchorLabel>,
    /// Anchor index of every positive, ascending.
    pub positives: Vec<usize>,
    /// Ground-truth index matched by each positive.
    pub matched_gt: Vec<usize>,
    pub reg_targets: Vec<[f64; 7]>,
    pub dir_targets: Vec<u8>,
}

impl Assignment {
    pub fn num_positive(&self) -> usize {
        self.positives.len()
    }

    pub fn num_negative(&self) -> usize {
        self.labels.iter().filter(|l| matches!(l, AnchorLabel::Negative)).count()
    }

    /// Label codes: -1 ignore, 0 negative, `class_id + 1` positive.
    pub fn label_codes(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| match l {
                AnchorLabel::Ignore => -1,
                AnchorLabel::Negative => 0,
                AnchorLabel::Positive { class_id, .. } => *class_id as i64 + 1,
            })
            .collect()
    }

    /// JSON export with run-length encoded label codes (`[[code, run], ...]`).
    pub fn to_json(&self) -> serde_json::Value {
        let mut runs: Vec<[i64; 2]> = Vec::new();
        for code in self.label_codes() {
            match runs.last_mut() {
                Some(last) if last[0] == code => last[1] += 1,
                _ => runs.push([code, 1]),
            }
        }
        json!({
            "num_anchors": self.labels.len(),
            "num_positive": self.num_positive(),
            "label_codes": {"ignore": -1, "negative": 0, "positive": "class_id + 1"},
            "labels_rle": runs,
            "positive_indices": self.positives,
            "matched_gt": self.matched_gt,
            "reg_targets": self.reg_targets,
            "dir_targets": self.dir_targets,
        })
    }
}

/// Label every anchor against same-class ground truth.
///
/// An anchor whose best IoU reaches its class `match_thr` is positive for the
/// arg-max box; one at or below `unmatch_thr` is negative; anything between is
/// ignored. Each ground-truth box additionally forces its best anchor (IoU > 0)
/// positive; boxes are served in order of their best overlap and one whose
/// best anchor is already claimed takes its next best. Ties resolve to the
/// lowest index.
pub fn assign_targets(anchors: &AnchorGrid, gts: &[Box3D], specs: &[AnchorSpec], metric: IouMetric) -> Result<Assignment> {
    let n_anchor = anchors.len();
    for s in specs {
        s.validate()?;
    }
    let spec_of = |class_id: usize| specs.iter().find(|s| s.class_id == class_id);

    // sparse IoU entries per ground truth, anchors ascending
    let table: Vec<Vec<(usize, f64)>> = gts
        .par_iter()
        .map(|g| {
            let mut hits = Vec::new();
            for (block, &(class_id, _, n_rot)) in anchors.blocks.iter().enumerate() {
                if class_id != g.class_id {
                    continue;
                }
                let Some(spec) = spec_of(class_id) else { continue };
                let reach = 0.5 * g.w.hypot(g.l) + 0.5 * spec.w.hypot(spec.l);
                let (r0, r1) = anchors.row_range(g.cy, reach);
                let (c0, c1) = anchors.col_range(g.cx, reach);
                if r0 > r1 || c0 > c1 {
                    continue;
                }
                for row in r0..=r1 {
                    for col in c0..=c1 {
                        for rot in 0..n_rot {
                            let a = anchors.index(block, row, col, rot);
                            let iou = metric.eval(&anchors.boxes[a], g);
                            if iou > 0.0 {
                                hits.push((a, iou));
                            }
                        }
                    }
                }
            }
            hits
        })
        .collect();

    let mut best: Vec<(f64, Option<usize>)> = vec![(0.0, None); n_anchor];
    for (g, hits) in table.iter().enumerate() {
        for &(a, iou) in hits {
            if iou > best[a].0 {
                best[a] = (iou, Some(g));
            }
        }
    }

    let mut labels: Vec<AnchorLabel> = anchors
        .boxes
        .iter()
        .zip(&best)
        .map(|(anchor, &(iou, gt))| {
            let Some(spec) = spec_of(anchor.class_id) else {
                return AnchorLabel::Negative;
            };
            match gt {
                Some(g) if iou >= spec.match_thr => AnchorLabel::Positive { class_id: anchor.class_id, gt: g },
                _ if iou <= spec.unmatch_thr => AnchorLabel::Negative,
                _ => AnchorLabel::Ignore,
            }
        })
        .collect();

    // forced matches: boxes claim their best unclaimed anchor, strongest
    // overlap first, so every box that touches the lattice keeps a positive
    let top_iou = |hits: &[(usize, f64)]| hits.iter().map(|h| h.1).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..gts.len()).filter(|&g| !table[g].is_empty()).collect();
    order.sort_by(|&x, &y| top_iou(&table[y]).total_cmp(&top_iou(&table[x])).then(x.cmp(&y)));
    let mut claimed = vec![false; n_anchor];
    for g in order {
        let mut pick: Option<(usize, f64)> = None;
        for &(a, iou) in &table[g] {
            if claimed[a] {
                continue;
            }
            match pick {
                Some((pa, piou)) if iou < piou || (iou == piou && a > pa) => {}
                _ => pick = Some((a, iou)),
            }
        }
        if let Some((a, _)) = pick {
            claimed[a] = true;
            labels[a] = AnchorLabel::Positive {
                class_id: anchors.boxes[a].class_id,
                gt: g,
            };
        }
    }

    let mut out = Assignment {
        labels,
        positives: Vec::new(),
        matched_gt: Vec::new(),
        reg_targets: Vec::new(),
        dir_targets: Vec::new(),
    };
    for a in 0..n_anchor {
        if let AnchorLabel::Positive { gt, .. } = out.labels[a] {
            let anchor = &anchors.boxes[a];
            out.positives.push(a);
            out.matched_gt.push(gt);
            out.reg_targets.push(encode_box(anchor, &gts[gt])?);
            out.dir_targets.push(direction_target(gts[gt].theta, anchor.theta));
        }
    }
    Ok(out)
}

fn check_dims(b: &Box3D) -> Result<()> {
    for d in [b.w, b.l, b.h] {
        if !(d > 0.0) {
            return Err(Error::NonPositiveDimension(d));
        }
    }
    Ok(())
}

/// Residual of `gt` relative to `anchor`:
/// `[dx/diag, dy/diag, dz/h, ln(w), ln(l), ln(h) ratios, sin(dtheta)]`.
pub fn encode_box(anchor: &Box3D, gt: &Box3D) -> Result<[f64; 7]> {
    check_dims(anchor)?;
    check_dims(gt)?;
    let diag = anchor.w.hypot(anchor.l);
    Ok([
        (gt.cx - anchor.cx) / diag,
        (gt.cy - anchor.cy) / diag,
        (gt.cz - anchor.cz) / anchor.h,
        (gt.w / anchor.w).ln(),
        (gt.l / anchor.l).ln(),
        (gt.h / anchor.h).ln(),
        (gt.theta - anchor.theta).sin(),
    ])
}

/// Inverse of [`encode_box`]. The heading is recovered on the arcsine branch
/// and turned by pi when its direction bin disagrees with `dir_bin`.
pub fn decode_box(anchor: &Box3D, delta: &[f64; 7], dir_bin: u8) -> Result<Box3D> {
    check_dims(anchor)?;
    let s = delta[6];
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::AngleResidualOutOfRange(s));
    }
    let diag = anchor.w.hypot(anchor.l);
    let mut theta = anchor.theta + s.asin();
    if direction_target(theta, anchor.theta) != dir_bin {
        theta += PI;
    }
    Box3D::new(
        [
            anchor.cx + delta[0] * diag,
            anchor.cy + delta[1] * diag,
            anchor.cz + delta[2] * anchor.h,
        ],
        anchor.w * delta[3].exp(),
        anchor.l * delta[4].exp(),
        anchor.h * delta[5].exp(),
        theta,
        anchor.class_id,
    )
}

/// 0 when the wrapped heading difference lies in [0, pi), else 1.
pub fn direction_target(theta_gt: f64, theta_anchor: f64) -> u8 {
    let d = normalize_angle(theta_gt - theta_anchor);
    if (0.0..PI).contains(&d) {
        0
    } else {
        1
    }
}
