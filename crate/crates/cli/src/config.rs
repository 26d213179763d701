use std::path::PathBuf;

use clap::{Args, ValueEnum};
use radar_mrf::targets::IouMetric;
use radar_mrf::voxels::Reduce;
use radar_mrf::PipelineConfig;
use serde_json::Value;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Profile {
    Vod,
    Tj4d,
    Custom,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReduceArg {
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Bev,
    #[value(name = "3d")]
    ThreeD,
}

/// Pipeline configuration. Precedence: flag, then config file, then profile.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// Dataset profile supplying the defaults [default: the config file's, else vod]
    #[arg(long, value_enum, global = true)]
    pub profile: Option<Profile>,

    /// JSON config file overriding profile values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for pillar subsampling and synthetic scenes
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// KDE bandwidths in meters, comma separated
    #[arg(long, global = true, value_delimiter = ',', value_name = "R,...", allow_negative_numbers = true)]
    pub bandwidths: Option<Vec<f64>>,

    /// Fields entering the KDE kernel, comma separated (must include x,y,z)
    #[arg(long, global = true, value_delimiter = ',', value_name = "FIELD,...")]
    pub kernel_dims: Option<Vec<String>>,

    /// Variance guard of the density normalization
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,

    /// Maximum points kept per pillar
    #[arg(long, global = true)]
    pub max_points: Option<usize>,

    /// Append normalized densities to the pillar point features
    #[arg(long, global = true)]
    pub append_density: bool,

    /// Reduction of densities within a voxel
    #[arg(long, global = true, value_enum)]
    pub reduce: Option<ReduceArg>,

    /// Overlap measure used for anchor matching
    #[arg(long, global = true, value_enum)]
    pub match_metric: Option<MetricArg>,

    /// Override any config value by dotted path, e.g. `eval.recall_positions=11`
    /// or `anchors.0.w=1.7`. The value is parsed as JSON, else taken as a string.
    /// Applied after the config file and before the dedicated flags above.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    pub sets: Vec<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, Failure> {
        let doc = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
                if !v.is_object() {
                    return Err(Failure::config(format!("{}: config must be a JSON object", path.display())));
                }
                Some(v)
            }
            None => None,
        };
        let name = match (self.profile, &doc) {
            (Some(Profile::Vod), _) => "vod",
            (Some(Profile::Tj4d), _) => "tj4d",
            (Some(Profile::Custom), _) => "custom",
            (None, Some(d)) => d.get("profile").and_then(Value::as_str).unwrap_or("vod"),
            (None, None) => "vod",
        }
        .to_string();
        let mut cfg = PipelineConfig::named(&name).map_err(|e| Failure::config(e.to_string()))?;
        if let Some(d) = &doc {
            cfg = cfg.merged(d).map_err(|e| Failure::config(format!("config file: {e}")))?;
            cfg.profile = name;
        }
        if !self.sets.is_empty() {
            cfg = apply_sets(&cfg, &self.sets)?;
        }
        self.apply(&mut cfg);
        cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = &self.bandwidths {
            cfg.bandwidths = b.clone();
        }
        if let Some(k) = &self.kernel_dims {
            cfg.kernel_dims = k.clone();
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(n) = self.max_points {
            cfg.pillar.max_points = n;
        }
        if self.append_density {
            cfg.pillar.append_density = true;
        }
        if let Some(r) = self.reduce {
            cfg.voxel.reduce = match r {
                ReduceArg::Mean => Reduce::Mean,
                ReduceArg::Max => Reduce::Max,
            };
        }
        if let Some(m) = self.match_metric {
            cfg.match_metric = match m {
                MetricArg::Bev => IouMetric::Bev,
                MetricArg::ThreeD => IouMetric::ThreeD,
            };
        }
    }
}

fn apply_sets(cfg: &PipelineConfig, sets: &[String]) -> Result<PipelineConfig, Failure> {
    let mut doc = serde_json::to_value(cfg).map_err(|e| Failure::internal(e.to_string()))?;
    for item in sets {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("--set `{item}`: expected PATH=VALUE")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut slot = &mut doc;
        for key in path.split('.') {
            slot = match slot {
                Value::Object(m) => m.get_mut(key),
                Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| Failure::config(format!("--set `{item}`: no config value at `{path}`")))?;
        }
        *slot = value;
    }
    serde_json::from_value(doc).map_err(|e| Failure::config(format!("--set: {e}")))
}
