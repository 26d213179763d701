#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radar_mrf::geometry::Box3D;
use radar_mrf::schema::FeatureSchema;
use radar_mrf::PointCloud;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform VoD-schema cloud in a `side`-meter cube with Doppler in [-5, 5].
pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, side: f64) -> PointCloud {
    let schema = FeatureSchema::vod();
    let mut values = Vec::with_capacity(n * schema.len());
    for _ in 0..n {
        values.push(rng.random_range(0.0..side));
        values.push(rng.random_range(-0.5 * side..0.5 * side));
        values.push(rng.random_range(-2.0..1.0));
        values.push(rng.random_range(-10.0..20.0));
        values.push(rng.random_range(-5.0..5.0));
        values.push(rng.random_range(-5.0..5.0));
        values.push(rng.random_range(0..5) as f64);
    }
    PointCloud::new(schema, values).unwrap()
}

pub fn random_box(rng: &mut ChaCha8Rng, spread: f64) -> Box3D {
    Box3D::new(
        [
            rng.random_range(-spread..spread),
            rng.random_range(-spread..spread),
            rng.random_range(-1.0..1.0),
        ],
        rng.random_range(0.3..3.0),
        rng.random_range(0.3..5.0),
        rng.random_range(0.5..2.5),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        0,
    )
    .unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}
