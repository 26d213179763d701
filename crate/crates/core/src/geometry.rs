//! Regions of interest, oriented boxes and rotated-box overlap.
//!
//! Boxes carry a volumetric-center `cz`. The BEV footprint is a rectangle of
//! length `l` along the heading `theta` and width `w` across it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Axis-aligned region, half-open `[min, max)` on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi3D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Roi3D {
    pub fn new(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Result<Self> {
        let roi = Self {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            z_min: z.0,
            z_max: z.1,
        };
        roi.validate()?;
        Ok(roi)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.x_min < self.x_max && self.y_min < self.y_max && self.z_min < self.z_max;
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.z_min, self.z_max]
            .iter()
            .all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::Config(format!("degenerate region {self:?}")))
        }
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        x >= self.x_min
            && x < self.x_max
            && y >= self.y_min
            && y < self.y_max
            && z >= self.z_min
            && z < self.z_max
    }

    #[inline]
    pub fn contains_bev(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.x_max - self.x_min,
            self.y_max - self.y_min,
            self.z_max - self.z_min,
        ]
    }

    pub fn z_mid(&self) -> f64 {
        0.5 * (self.z_min + self.z_max)
    }

    pub fn translated(&self, dx: f64, dy: f64, dz: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_min: self.y_min + dy,
            y_max: self.y_max + dy,
            z_min: self.z_min + dz,
            z_max: self.z_max + dz,
        }
    }
}

/// Oriented 3D box with volumetric-center `cz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub theta: f64,
    pub class_id: usize,
}

impl Box3D {
    pub fn new(center: [f64; 3], w: f64, l: f64, h: f64, theta: f64, class_id: usize) -> Result<Self> {
        for d in [w, l, h] {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NonPositiveDimension(d));
            }
        }
        Ok(Self {
            cx: center[0],
            cy: center[1],
            cz: center[2],
            w,
            l,
            h,
            theta: normalize_angle(theta),
            class_id,
        })
    }

    /// Build from a bottom-center z, as used by anchor tables and labels.
    pub fn from_bottom(
        center_bottom: [f64; 3],
        w: f64,
        l: f64,
        h: f64,
        theta: f64,
        class_id: usize,
    ) -> Result<Self> {
        let [x, y, zb] = center_bottom;
        Self::new([x, y, zb + 0.5 * h], w, l, h, theta, class_id)
    }

    pub fn z_bottom(&self) -> f64 {
        self.cz - 0.5 * self.h
    }

    pub fn z_top(&self) -> f64 {
        self.cz + 0.5 * self.h
    }

    pub fn bev_area(&self) -> f64 {
        self.w * self.l
    }

    pub fn volume(&self) -> f64 {
        self.w * self.l * self.h
    }

    /// BEV footprint corners in counter-clockwise order.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.theta.sin_cos();
        let hl = 0.5 * self.l;
        let hw = 0.5 * self.w;
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        local.map(|[u, v]| [self.cx + c * u - s * v, self.cy + s * u + c * v])
    }

    /// Whether a point lies inside the closed box.
    pub fn contains_point(&self, x: f64, y: f64, z: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= 0.5 * self.l && v.abs() <= 0.5 * self.w && (z - self.cz).abs() <= 0.5 * self.h
    }

    fn same_footprint(&self, other: &Box3D) -> bool {
        self.cx == other.cx
            && self.cy == other.cy
            && self.w == other.w
            && self.l == other.l
            && self.theta == other.theta
    }
}

#[inline]
fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_line_intersection(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let dp = cross(a, b, p);
    let dq = cross(a, b, q);
    let t = dp / (dp - dq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Sutherland-Hodgman clip of `subject` against the convex CCW polygon `clip`.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    let mut input = Vec::with_capacity(8);
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        std::mem::swap(&mut input, &mut output);
        output.clear();
        let mut prev = *input.last().unwrap();
        let mut prev_in = cross(a, b, prev) >= 0.0;
        for &cur in input.iter() {
            let cur_in = cross(a, b, cur) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(segment_line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(segment_line_intersection(prev, cur, a, b));
            }
            prev = cur;
            prev_in = cur_in;
        }
    }
    output
}

/// Shoelace area (absolute).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc.abs()
}

/// Area of the intersection of the two BEV footprints.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    // circumscribed-circle rejection
    let ra = 0.5 * a.w.hypot(a.l);
    let rb = 0.5 * b.w.hypot(b.l);
    let dx = a.cx - b.cx;
    let dy = a.cy - b.cy;
    if dx * dx + dy * dy > (ra + rb) * (ra + rb) {
        return 0.0;
    }
    polygon_area(&clip_convex(&a.bev_corners(), &b.bev_corners()))
}

/// Rotated-rectangle IoU of the BEV footprints.
pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    if a.same_footprint(b) {
        return 1.0;
    }
    let inter = bev_intersection_area(a, b);
    let union = a.bev_area() + b.bev_area() - inter;
    if inter <= 0.0 || union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Overlap of the vertical extents.
pub fn z_overlap(a: &Box3D, b: &Box3D) -> f64 {
    (a.z_top().min(b.z_top()) - a.z_bottom().max(b.z_bottom())).max(0.0)
}

/// Volumetric IoU of two boxes rotated about the vertical axis.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let zo = z_overlap(a, b);
    if zo <= 0.0 {
        return 0.0;
    }
    if a.same_footprint(b) && a.cz == b.cz && a.h == b.h {
        return 1.0;
    }
    let inter = bev_intersection_area(a, b) * zo;
    let union = a.volume() + b.volume() - inter;
    if inter <= 0.0 || union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(cx: f64, cy: f64, w: f64, l: f64, theta: f64) -> Box3D {
        Box3D::new([cx, cy, 0.0], w, l, 1.0, theta, 0).unwrap()
    }

    #[test]
    fn angle_wraps_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-15);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI / 4.0) + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn roi_is_half_open() {
        let roi = Roi3D::new((0.0, 51.2), (-25.6, 25.6), (-3.0, 2.0)).unwrap();
        assert!(roi.contains(0.0, 0.0, 0.0));
        assert!(roi.contains(0.0, -25.6, -3.0));
        assert!(!roi.contains(51.2, 0.0, 0.0));
        assert!(!roi.contains(60.0, 0.0, 0.0));
        assert!(Roi3D::new((1.0, 1.0), (0.0, 1.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn hand_cases() {
        let a = bx(0.0, 0.0, 2.0, 2.0, 0.0);
        assert_eq!(iou_bev(&a, &a), 1.0);
        let far = bx(100.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(iou_bev(&bx(0.0, 0.0, 1.0, 1.0, 0.0), &far), 0.0);
        let b = bx(1.0, 0.0, 2.0, 2.0, 0.0);
        assert!((iou_bev(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_square_overlap() {
        // unit square vs itself rotated 45 degrees: octagon of area 2(sqrt2 - 1)
        let a = bx(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = bx(0.0, 0.0, 1.0, 1.0, PI / 4.0);
        let inter = 2.0 * (2f64.sqrt() - 1.0);
        let expected = inter / (2.0 - inter);
        assert!((iou_bev(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn iou_3d_cases() {
        let a = Box3D::new([0.0, 0.0, 0.0], 2.0, 2.0, 2.0, 0.0, 0).unwrap();
        assert_eq!(iou_3d(&a, &a), 1.0);
        let b = Box3D::new([0.0, 0.0, 1.0], 2.0, 2.0, 2.0, 0.0, 0).unwrap();
        assert!((iou_3d(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let c = Box3D::new([0.0, 0.0, 2.0], 2.0, 2.0, 2.0, 0.0, 0).unwrap();
        assert_eq!(iou_3d(&a, &c), 0.0);
    }

    #[test]
    fn bottom_center_conversion() {
        let b = Box3D::from_bottom([0.0, 0.0, -1.78], 1.6, 3.9, 1.56, 0.0, 0).unwrap();
        assert!((b.cz - (-1.0)).abs() < 1e-12);
        assert!((b.z_bottom() + 1.78).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_dims() {
        assert!(Box3D::new([0.0; 3], 0.0, 1.0, 1.0, 0.0, 0).is_err());
        assert!(Box3D::new([0.0; 3], 1.0, -1.0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn corners_follow_heading() {
        let b = bx(0.0, 0.0, 1.0, 4.0, PI / 2.0);
        let xs: Vec<f64> = b.bev_corners().iter().map(|c| c[0].abs()).collect();
        let ys: Vec<f64> = b.bev_corners().iter().map(|c| c[1].abs()).collect();
        assert!(xs.iter().all(|x| (x - 0.5).abs() < 1e-12));
        assert!(ys.iter().all(|y| (y - 2.0).abs() < 1e-12));
        assert!(b.contains_point(0.0, 1.9, 0.0));
        assert!(!b.contains_point(1.9, 0.0, 0.0));
    }
}
