//! Seeded synthetic radar scenes: Gaussian point clusters inside boxes plus
//! uniform clutter, with per-point provenance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{Box3D, Roi3D};
use crate::schema::FeatureSchema;

const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub class_id: usize,
    pub w: (f64, f64),
    pub l: (f64, f64),
    pub h: (f64, f64),
    /// Inclusive point-count range.
    pub points: (usize, usize),
    /// Intra-cluster standard deviation, meters.
    pub std: f64,
    pub doppler_mean: f64,
    pub doppler_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub roi: Roi3D,
    pub schema: FeatureSchema,
    pub objects: Vec<ObjectSpec>,
    /// Inclusive clutter-count range.
    pub clutter: (usize, usize),
    pub clutter_doppler_std: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Object(usize),
    Clutter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cloud: PointCloud,
    pub boxes: Vec<Box3D>,
    pub provenance: Vec<Provenance>,
}

fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if !(r.0 > 0.0 && r.0 <= r.1) {
        return Err(Error::Config(format!("synthetic {name} range {r:?} is invalid")));
    }
    Ok(())
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.roi.validate()?;
        if self.clutter.0 > self.clutter.1 {
            return Err(Error::Config(format!("clutter range {:?} is invalid", self.clutter)));
        }
        if !(self.clutter_doppler_std > 0.0) {
            return Err(Error::Config("clutter Doppler std must be positive".into()));
        }
        let [ex, ey, ez] = self.roi.extent();
        for o in &self.objects {
            check_range("width", o.w)?;
            check_range("length", o.l)?;
            check_range("height", o.h)?;
            if o.points.0 > o.points.1 {
                return Err(Error::Config(format!("point range {:?} is invalid", o.points)));
            }
            if !(o.std > 0.0) || !(o.doppler_std > 0.0) {
                return Err(Error::Config("cluster spreads must be positive".into()));
            }
            let diag = o.w.1.hypot(o.l.1);
            if diag >= ex.min(ey) || o.h.1 >= ez {
                return Err(Error::Config("object does not fit inside the region".into()));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        r.0
    } else {
        rng.random_range(r.0..r.1)
    }
}

/// Auxiliary feature value for one point, by field name.
fn auxiliary(name: &str, object: bool, doppler: f64, rng: &mut ChaCha8Rng) -> f64 {
    let gauss = |rng: &mut ChaCha8Rng, m: f64, s: f64| Normal::new(m, s).expect("positive std").sample(rng);
    match name {
        "v_r" | "v_rc" => doppler,
        "rcs" => {
            if object {
                gauss(rng, 5.0, 5.0)
            } else {
                gauss(rng, 0.0, 5.0)
            }
        }
        "snr" => {
            if object {
                gauss(rng, 15.0, 5.0)
            } else {
                gauss(rng, 8.0, 3.0)
            }
        }
        "time" => rng.random_range(0..5) as f64,
        _ => 0.0,
    }
}

/// Generate a scene. The same spec always yields bitwise-identical output.
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let schema = &spec.schema;
    let c = schema.len();
    let mut values = Vec::new();
    let mut boxes = Vec::with_capacity(spec.objects.len());
    let mut provenance = Vec::new();
    let roi = &spec.roi;

    for (k, o) in spec.objects.iter().enumerate() {
        let w = uniform(&mut rng, o.w);
        let l = uniform(&mut rng, o.l);
        let h = uniform(&mut rng, o.h);
        let margin = 0.5 * w.hypot(l);
        let cx = rng.random_range(roi.x_min + margin..roi.x_max - margin);
        let cy = rng.random_range(roi.y_min + margin..roi.y_max - margin);
        let cz = rng.random_range(roi.z_min + 0.5 * h..roi.z_max - 0.5 * h);
        let theta = rng.random_range(-PI..PI);
        let bbox = Box3D::new([cx, cy, cz], w, l, h, theta, o.class_id)?;
        let count = rng.random_range(o.points.0..=o.points.1);
        let spread = Normal::new(0.0, o.std).expect("positive std");
        let dop = Normal::new(o.doppler_mean, o.doppler_std).expect("positive std");
        let half = [0.5 * l, 0.5 * w, 0.5 * h].map(|e| e * (1.0 - 1e-9));
        let (s, co) = bbox.theta.sin_cos();
        for _ in 0..count {
            let mut local = [0.0; 3];
            for attempt in 0..MAX_ATTEMPTS {
                local = [spread.sample(&mut rng), spread.sample(&mut rng), spread.sample(&mut rng)];
                if (0..3).all(|a| local[a].abs() <= half[a]) {
                    break;
                }
                if attempt + 1 == MAX_ATTEMPTS {
                    for a in 0..3 {
                        local[a] = local[a].clamp(-half[a], half[a]);
                    }
                }
            }
            let x = cx + co * local[0] - s * local[1];
            let y = cy + s * local[0] + co * local[1];
            let z = cz + local[2];
            let doppler = dop.sample(&mut rng);
            values.extend_from_slice(&[x, y, z]);
            for f in &schema.fields()[3..] {
                values.push(auxiliary(&f.name, true, doppler, &mut rng));
            }
            provenance.push(Provenance::Object(k));
        }
        boxes.push(bbox);
    }

    let clutter = rng.random_range(spec.clutter.0..=spec.clutter.1);
    let dop = Normal::new(0.0, spec.clutter_doppler_std).expect("positive std");
    for _ in 0..clutter {
        let x = rng.random_range(roi.x_min..roi.x_max);
        let y = rng.random_range(roi.y_min..roi.y_max);
        let z = rng.random_range(roi.z_min..roi.z_max);
        let doppler = dop.sample(&mut rng);
        values.extend_from_slice(&[x, y, z]);
        for f in &schema.fields()[3..] {
            values.push(auxiliary(&f.name, false, doppler, &mut rng));
        }
        provenance.push(Provenance::Clutter);
    }
    debug_assert_eq!(values.len(), provenance.len() * c);
    Ok(Scene {
        cloud: PointCloud::new(schema.clone(), values)?,
        boxes,
        provenance,
    })
}

/// Car / pedestrian / cyclist sized clusters, for the three-class layout.
pub fn typical_objects() -> [ObjectSpec; 3] {
    [
        ObjectSpec {
            class_id: 0,
            w: (1.5, 1.9),
            l: (3.6, 4.6),
            h: (1.4, 1.7),
            points: (20, 60),
            std: 0.8,
            doppler_mean: 4.0,
            doppler_std: 0.5,
        },
        ObjectSpec {
            class_id: 1,
            w: (0.5, 0.7),
            l: (0.6, 0.9),
            h: (1.5, 1.8),
            points: (20, 40),
            std: 0.3,
            doppler_mean: 1.2,
            doppler_std: 0.3,
        },
        ObjectSpec {
            class_id: 2,
            w: (0.5, 0.8),
            l: (1.6, 1.9),
            h: (1.5, 1.8),
            points: (20, 40),
            std: 0.4,
            doppler_mean: 3.0,
            doppler_std: 0.4,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(objects: Vec<ObjectSpec>, clutter: (usize, usize), seed: u64) -> SceneSpec {
        SceneSpec {
            roi: Roi3D::new((0.0, 51.2), (-25.6, 25.6), (-3.0, 2.0)).unwrap(),
            schema: FeatureSchema::vod(),
            objects,
            clutter,
            clutter_doppler_std: 3.0,
            seed,
        }
    }

    #[test]
    fn empty_scene() {
        let s = gen_scene(&spec(vec![], (0, 0), 1)).unwrap();
        assert!(s.cloud.is_empty());
        assert!(s.boxes.is_empty());
    }

    #[test]
    fn single_object_points_inside() {
        let mut o = typical_objects()[0].clone();
        o.points = (50, 50);
        let s = gen_scene(&spec(vec![o], (0, 0), 3)).unwrap();
        assert_eq!(s.cloud.len(), 50);
        assert!(s.provenance.iter().all(|p| *p == Provenance::Object(0)));
        for i in 0..s.cloud.len() {
            let [x, y, z] = s.cloud.xyz(i);
            assert!(s.boxes[0].contains_point(x, y, z));
        }
    }

    #[test]
    fn seeded_determinism() {
        let sp = spec(typical_objects().to_vec(), (50, 80), 42);
        let a = gen_scene(&sp).unwrap();
        let b = gen_scene(&sp).unwrap();
        assert_eq!(a, b);
        let bits_a: Vec<u64> = a.cloud.values().iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.cloud.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
        let c = gen_scene(&SceneSpec { seed: 43, ..sp }).unwrap();
        assert_ne!(a.cloud, c.cloud);
    }

    #[test]
    fn counts_within_ranges() {
        for seed in 0..20 {
            let sp = spec(typical_objects().to_vec(), (50, 80), seed);
            let s = gen_scene(&sp).unwrap();
            let clutter = s.provenance.iter().filter(|p| **p == Provenance::Clutter).count();
            assert!((50..=80).contains(&clutter));
            for (k, o) in sp.objects.iter().enumerate() {
                let n = s.provenance.iter().filter(|p| **p == Provenance::Object(k)).count();
                assert!((o.points.0..=o.points.1).contains(&n));
            }
            s.cloud.all_inside(&sp.roi).unwrap();
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut o = typical_objects()[0].clone();
        o.std = 0.0;
        assert!(gen_scene(&spec(vec![o], (0, 0), 1)).is_err());
        assert!(gen_scene(&spec(vec![], (5, 1), 1)).is_err());
    }
}
