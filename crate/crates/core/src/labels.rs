//! JSON-lines box records shared by ground-truth labels and detections.
//!
//! One object per line:
//! `{"frame": str, "class": str, "x", "y", "z", "w", "l", "h", "theta", "z_ref": "bottom"|"center"}`
//! with an additional `"score"` for detections.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Box3D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ZRef {
    #[default]
    Bottom,
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub frame: String,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub theta: f64,
    #[serde(default)]
    pub z_ref: ZRef,
    /// Radar points inside the box, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_points: Option<usize>,
}

/// A parsed record with its class resolved and z converted to the volumetric center.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub frame: String,
    pub bbox: Box3D,
    pub score: Option<f64>,
    pub z_ref: ZRef,
    pub num_points: Option<usize>,
}

/// Case-insensitive class lookup.
pub fn class_index(classes: &[String], name: &str) -> Option<usize> {
    classes.iter().position(|c| c.eq_ignore_ascii_case(name))
}

impl BoxRecord {
    pub fn from_box(frame: &str, class: &str, b: &Box3D, score: Option<f64>, z_ref: ZRef) -> Self {
        let z = match z_ref {
            ZRef::Bottom => b.z_bottom(),
            ZRef::Center => b.cz,
        };
        Self {
            frame: frame.to_string(),
            class: class.to_string(),
            score,
            x: b.cx,
            y: b.cy,
            z,
            w: b.w,
            l: b.l,
            h: b.h,
            theta: b.theta,
            z_ref,
            num_points: None,
        }
    }

    pub fn to_box(&self, class_id: usize) -> Result<Box3D> {
        match self.z_ref {
            ZRef::Bottom => Box3D::from_bottom([self.x, self.y, self.z], self.w, self.l, self.h, self.theta, class_id),
            ZRef::Center => Box3D::new([self.x, self.y, self.z], self.w, self.l, self.h, self.theta, class_id),
        }
    }
}

/// Parse JSON lines. Blank lines are skipped; records whose class is not in
/// `classes` are dropped.
pub fn parse_records(text: &str, classes: &[String]) -> Result<Vec<Labeled>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: BoxRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let Some(class_id) = class_index(classes, &rec.class) else {
            continue;
        };
        let bbox = rec.to_box(class_id).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(s) = rec.score {
            if !s.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("non-finite score {s}"),
                });
            }
        }
        out.push(Labeled {
            frame: rec.frame,
            bbox,
            score: rec.score,
            z_ref: rec.z_ref,
            num_points: rec.num_points,
        });
    }
    Ok(out)
}

pub fn read_records(path: impl AsRef<Path>, classes: &[String]) -> Result<Vec<Labeled>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, classes)
}

pub fn to_jsonl(records: &[BoxRecord]) -> Result<String> {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{}", serde_json::to_string(r)?);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> Vec<String> {
        vec!["Car".into(), "Pedestrian".into(), "Cyclist".into()]
    }

    #[test]
    fn bottom_reference_is_converted() {
        let line = r#"{"frame":"00001","class":"car","x":10,"y":1,"z":-1.78,"w":1.6,"l":3.9,"h":1.56,"theta":0.1,"z_ref":"bottom"}"#;
        let recs = parse_records(line, &classes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].bbox.class_id, 0);
        assert!((recs[0].bbox.cz + 1.0).abs() < 1e-12);
        assert_eq!(recs[0].z_ref, ZRef::Bottom);
    }

    #[test]
    fn center_reference_kept() {
        let line = r#"{"frame":"a","class":"Cyclist","x":0,"y":0,"z":0.5,"w":0.6,"l":1.76,"h":1.73,"theta":0,"z_ref":"center"}"#;
        let recs = parse_records(line, &classes()).unwrap();
        assert_eq!(recs[0].bbox.cz, 0.5);
        assert_eq!(recs[0].bbox.class_id, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "\n{\"frame\":\"a\"}\n";
        match parse_records(text, &classes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_classes_dropped() {
        let line = r#"{"frame":"a","class":"DontCare","x":0,"y":0,"z":0,"w":1,"l":1,"h":1,"theta":0,"z_ref":"center"}"#;
        assert!(parse_records(line, &classes()).unwrap().is_empty());
    }

    #[test]
    fn writer_roundtrip() {
        let b = Box3D::new([3.0, -2.0, -0.7], 0.6, 0.8, 1.69, 1.0, 1).unwrap();
        let rec = BoxRecord::from_box("f0", "Pedestrian", &b, Some(0.9), ZRef::Bottom);
        let text = to_jsonl(&[rec]).unwrap();
        let back = parse_records(&text, &classes()).unwrap();
        assert!((back[0].bbox.cz - b.cz).abs() < 1e-12);
        assert_eq!(back[0].score, Some(0.9));
    }
}
