//! Named dataset profiles and the pipeline configuration built from them.
//!
//! A configuration file is JSON. It may name a base `profile` and override any
//! subset of fields; objects merge key by key and every other value replaces
//! the profile's.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::{EvalConfig, Region};
use crate::geometry::Roi3D;
use crate::kde::{KdeConfig, DEFAULT_EPSILON};
use crate::losses::LossWeights;
use crate::pillars::PillarConfig;
use crate::schema::FeatureSchema;
use crate::targets::{AnchorSpec, IouMetric};
use crate::voxels::{Reduce, VoxelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PillarSettings {
    pub cell_x: f64,
    pub cell_y: f64,
    pub max_points: usize,
    /// Append normalized density bands to each point's raw features.
    #[serde(default)]
    pub append_density: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSettings {
    pub cell_x: f64,
    pub cell_y: f64,
    pub cell_z: f64,
    #[serde(default)]
    pub reduce: Reduce,
}

/// Pseudo-image channel counts of the fused map, carried as export metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub c1: usize,
    pub c2_1: usize,
    pub c2_2: usize,
}

impl ChannelMeta {
    pub fn fused(&self) -> usize {
        self.c1 + self.c2_1 + self.c2_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub profile: String,
    pub roi: Roi3D,
    pub schema: FeatureSchema,
    pub bandwidths: Vec<f64>,
    /// Kernel fields; must contain x, y, z.
    pub kernel_dims: Vec<String>,
    pub epsilon: f64,
    pub exclude_self: bool,
    pub pillar: PillarSettings,
    pub voxel: VoxelSettings,
    pub anchors: Vec<AnchorSpec>,
    /// Pillar cells per anchor cell along each axis.
    pub anchor_downsample: usize,
    pub match_metric: IouMetric,
    pub eval: EvalConfig,
    pub loss: LossWeights,
    pub channels: ChannelMeta,
    pub seed: u64,
}

fn anchor(class_id: usize, name: &str, w: f64, l: f64, h: f64, z_bottom: f64, thr: (f64, f64)) -> AnchorSpec {
    AnchorSpec {
        class_id,
        name: name.into(),
        w,
        l,
        h,
        z_bottom,
        rotations: vec![0.0, FRAC_PI_2],
        match_thr: thr.0,
        unmatch_thr: thr.1,
    }
}

const VEHICLE_THR: (f64, f64) = (0.6, 0.45);
const SMALL_THR: (f64, f64) = (0.5, 0.35);

impl PipelineConfig {
    pub fn vod() -> Self {
        let schema = FeatureSchema::vod();
        let classes = ["Car", "Pedestrian", "Cyclist"];
        Self {
            profile: "vod".into(),
            roi: Roi3D::new((0.0, 51.2), (-25.6, 25.6), (-3.0, 2.0)).expect("valid region"),
            kernel_dims: KdeConfig::for_schema(&schema, 1.0).kernel_dims,
            schema,
            bandwidths: vec![1.5, 2.0],
            epsilon: DEFAULT_EPSILON,
            exclude_self: true,
            pillar: PillarSettings {
                cell_x: 0.16,
                cell_y: 0.16,
                max_points: 32,
                append_density: false,
            },
            voxel: VoxelSettings {
                cell_x: 0.16,
                cell_y: 0.16,
                cell_z: 0.24,
                reduce: Reduce::Mean,
            },
            // (w, l, h, z_bottom) per class
            anchors: vec![
                anchor(0, "Car", 1.6, 3.9, 1.56, -1.78, VEHICLE_THR),
                anchor(1, "Pedestrian", 0.6, 0.8, 1.73, -0.6, SMALL_THR),
                anchor(2, "Cyclist", 0.6, 1.76, 1.73, -0.6, SMALL_THR),
            ],
            anchor_downsample: 2,
            match_metric: IouMetric::Bev,
            eval: EvalConfig {
                classes: classes.iter().map(|s| s.to_string()).collect(),
                thresholds: vec![0.5, 0.25, 0.25],
                regions: vec![Region::entire(), Region::corridor_unset()],
                recall_positions: 40,
                max_range_m: None,
                require_points_in_gt: false,
            },
            loss: LossWeights::defaults(classes.len()),
            channels: ChannelMeta { c1: 64, c2_1: 1, c2_2: 1 },
            seed: 0,
        }
    }

    pub fn tj4d() -> Self {
        let schema = FeatureSchema::tj4d();
        let classes = ["Car", "Pedestrian", "Cyclist", "Truck"];
        let vod = Self::vod();
        Self {
            profile: "tj4d".into(),
            roi: Roi3D::new((0.0, 69.12), (-39.68, 39.68), (-4.0, 2.0)).expect("valid region"),
            kernel_dims: KdeConfig::for_schema(&schema, 1.0).kernel_dims,
            schema,
            bandwidths: vec![0.6, 1.0],
            // (w, l, h, z_bottom) per class
            anchors: vec![
                anchor(0, "Car", 1.84, 4.56, 1.70, -1.363, VEHICLE_THR),
                anchor(1, "Pedestrian", 0.6, 0.8, 1.69, -1.163, SMALL_THR),
                anchor(2, "Cyclist", 0.78, 1.77, 1.60, -1.353, SMALL_THR),
                anchor(3, "Truck", 2.66, 10.76, 3.47, -1.403, VEHICLE_THR),
            ],
            eval: EvalConfig {
                classes: classes.iter().map(|s| s.to_string()).collect(),
                thresholds: vec![0.5, 0.25, 0.25, 0.5],
                regions: vec![Region::entire()],
                recall_positions: 40,
                max_range_m: Some(70.0),
                require_points_in_gt: false,
            },
            loss: LossWeights::defaults(classes.len()),
            ..vod
        }
    }

    /// `vod`, `tj4d`, or `custom` (the VoD values, relabeled, as a starting point).
    pub fn named(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "vod" => Ok(Self::vod()),
            "tj4d" => Ok(Self::tj4d()),
            "custom" => Ok(Self {
                profile: "custom".into(),
                ..Self::vod()
            }),
            other => Err(Error::Config(format!("unknown profile `{other}` (expected vod, tj4d or custom)"))),
        }
    }

    /// Apply a JSON override document on top of `self`.
    pub fn merged(&self, overrides: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overrides);
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a config document: its `profile` key (default `vod`) picks the
    /// base, the remaining keys override it.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if !doc.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        let name = doc.get("profile").and_then(Value::as_str).unwrap_or("vod");
        Self::named(name)?.merged(&doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.roi.validate()?;
        if self.bandwidths.is_empty() {
            return Err(Error::Config("at least one KDE bandwidth is required".into()));
        }
        for cfg in self.kde_configs() {
            cfg.validate()?;
            for d in &cfg.kernel_dims {
                self.schema.require(d)?;
            }
        }
        self.pillar_config().canvas()?;
        self.voxel_config().dims()?;
        if self.anchor_downsample == 0 {
            return Err(Error::Config("anchor downsample factor must be at least 1".into()));
        }
        self.anchor_canvas()?;
        for a in &self.anchors {
            a.validate()?;
            if a.class_id >= self.eval.classes.len() {
                return Err(Error::Config(format!("anchor `{}` has class id {} without an eval class", a.name, a.class_id)));
            }
        }
        self.eval.validate()?;
        self.loss.validate()?;
        if self.loss.alpha.len() != self.eval.classes.len() {
            return Err(Error::Config("one focal alpha per class is required".into()));
        }
        Ok(())
    }

    pub fn kde_configs(&self) -> Vec<KdeConfig> {
        self.bandwidths
            .iter()
            .map(|&r| KdeConfig {
                epsilon: self.epsilon,
                exclude_self: self.exclude_self,
                ..KdeConfig::new(r, self.kernel_dims.clone())
            })
            .collect()
    }

    pub fn pillar_config(&self) -> PillarConfig {
        PillarConfig {
            cell_x: self.pillar.cell_x,
            cell_y: self.pillar.cell_y,
            max_points: self.pillar.max_points,
            roi: self.roi,
            seed: self.seed,
        }
    }

    pub fn voxel_config(&self) -> VoxelConfig {
        VoxelConfig {
            cell_x: self.voxel.cell_x,
            cell_y: self.voxel.cell_y,
            cell_z: self.voxel.cell_z,
            roi: self.roi,
            reduce: self.voxel.reduce,
        }
    }

    /// Anchor lattice `(H, W)`: the pillar canvas divided by the downsample factor.
    pub fn anchor_canvas(&self) -> Result<(usize, usize)> {
        let (h, w) = self.pillar_config().canvas()?;
        let k = self.anchor_downsample.max(1);
        if h % k != 0 || w % k != 0 {
            return Err(Error::Config(format!("canvas {h}x{w} is not divisible by anchor downsample {k}")));
        }
        Ok((h / k, w / k))
    }

    pub fn class_names(&self) -> &[String] {
        &self.eval.classes
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn profiles_validate() {
        PipelineConfig::vod().validate().unwrap();
        PipelineConfig::tj4d().validate().unwrap();
        PipelineConfig::named("custom").unwrap().validate().unwrap();
        assert!(PipelineConfig::named("kitti").is_err());
    }

    #[test]
    fn canvases() {
        let v = PipelineConfig::vod();
        assert_eq!(v.pillar_config().canvas().unwrap(), (320, 320));
        assert_eq!(v.anchor_canvas().unwrap(), (160, 160));
        assert_eq!(v.voxel_config().dims().unwrap(), (21, 320, 320));
        let t = PipelineConfig::tj4d();
        assert_eq!(t.pillar_config().canvas().unwrap(), (496, 432));
        assert_eq!(t.voxel_config().dims().unwrap(), (25, 496, 432));
    }

    #[test]
    fn overrides_merge() {
        let cfg = PipelineConfig::vod()
            .merged(&json!({"bandwidths": [0.6, 1.0], "pillar": {"max_points": 16}}))
            .unwrap();
        assert_eq!(cfg.bandwidths, vec![0.6, 1.0]);
        assert_eq!(cfg.pillar.max_points, 16);
        assert_eq!(cfg.pillar.cell_x, 0.16);
        assert_eq!(cfg.kde_configs()[1].radius, 1.0);
    }

    #[test]
    fn file_profile_selects_base() {
        let cfg = PipelineConfig::from_json_str(r#"{"profile": "tj4d", "seed": 9}"#).unwrap();
        assert_eq!(cfg.schema, FeatureSchema::tj4d());
        assert_eq!(cfg.seed, 9);
        let err = PipelineConfig::from_json_str(r#"{"bandwidths": []}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn roundtrip_json() {
        let cfg = PipelineConfig::tj4d();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn channel_metadata() {
        assert_eq!(PipelineConfig::vod().channels.fused(), 66);
    }
}
