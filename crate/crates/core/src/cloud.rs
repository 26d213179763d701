//! Radar point clouds and the float32 record format.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Roi3D;
use crate::schema::FeatureSchema;

/// Row-major `N_p x C` matrix of point features described by a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    schema: FeatureSchema,
    values: Vec<f64>,
}

impl PointCloud {
    pub fn new(schema: FeatureSchema, values: Vec<f64>) -> Result<Self> {
        let c = schema.len();
        if values.len() % c != 0 {
            return Err(Error::Shape(format!(
                "{} values is not a multiple of the {c}-field schema",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / c,
                field: schema.fields()[pos % c].name.clone(),
            });
        }
        Ok(Self { schema, values })
    }

    pub fn empty(schema: FeatureSchema) -> Self {
        Self {
            schema,
            values: Vec::new(),
        }
    }

    /// Build from rows; each row must match the schema length.
    pub fn from_rows<R: AsRef<[f64]>>(schema: FeatureSchema, rows: &[R]) -> Result<Self> {
        let c = schema.len();
        let mut values = Vec::with_capacity(rows.len() * c);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != c {
                return Err(Error::Shape(format!(
                    "row {i} has {} values, schema has {c}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(schema, values)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_fields(&self) -> usize {
        self.schema.len()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.schema.len();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.schema.len())
    }

    #[inline]
    pub fn xyz(&self, i: usize) -> [f64; 3] {
        let r = self.row(i);
        [r[0], r[1], r[2]]
    }

    /// One column, by field name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.schema.require(name)?;
        Ok(self.rows().map(|r| r[k]).collect())
    }

    /// New cloud with rows taken in the order given.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.num_fields());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            schema: self.schema.clone(),
            values,
        }
    }

    /// Concatenate another cloud with the same schema.
    pub fn extend(&mut self, other: &PointCloud) -> Result<()> {
        if other.schema != self.schema {
            return Err(Error::Schema("cannot concatenate clouds with different schemas".into()));
        }
        self.values.extend_from_slice(&other.values);
        Ok(())
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.num_fields() {
            return Err(Error::Shape(format!(
                "row has {} values, schema has {}",
                row.len(),
                self.num_fields()
            )));
        }
        if let Some(k) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: self.len(),
                field: self.schema.fields()[k].name.clone(),
            });
        }
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn all_inside(&self, roi: &Roi3D) -> Result<()> {
        for i in 0..self.len() {
            let [x, y, z] = self.xyz(i);
            if !roi.contains(x, y, z) {
                return Err(Error::OutsideRoi { index: i, x, y, z });
            }
        }
        Ok(())
    }
}

/// Keep exactly the points inside the half-open region, preserving order.
pub fn filter_roi(pc: &PointCloud, roi: &Roi3D) -> PointCloud {
    let keep: Vec<usize> = (0..pc.len())
        .filter(|&i| {
            let [x, y, z] = pc.xyz(i);
            roi.contains(x, y, z)
        })
        .collect();
    pc.select(&keep)
}

/// Read little-endian float32 records laid out per `schema`.
pub fn load_pointcloud(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_records(&bytes, schema).map_err(|e| match e {
        Error::SizeMismatch { bytes, fields, .. } => Error::SizeMismatch {
            path: path.to_path_buf(),
            bytes,
            fields,
        },
        other => other,
    })
}

pub fn decode_records(bytes: &[u8], schema: &FeatureSchema) -> Result<PointCloud> {
    let record = 4 * schema.len();
    if bytes.len() % record != 0 {
        return Err(Error::SizeMismatch {
            path: PathBuf::new(),
            bytes: bytes.len() as u64,
            fields: schema.len(),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    PointCloud::new(schema.clone(), values)
}

pub fn encode_records(pc: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(pc.values().len() * 4);
    for v in pc.values() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

/// Sidecar schema path: `<stem>.bin` -> `<stem>.schema.json`.
pub fn schema_path(bin: &Path) -> PathBuf {
    bin.with_extension("schema.json")
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<FeatureSchema> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Load `<stem>.bin` using its `<stem>.schema.json` sidecar, falling back to
/// `default_schema` when no sidecar exists.
pub fn load_scan(bin: impl AsRef<Path>, default_schema: Option<&FeatureSchema>) -> Result<PointCloud> {
    let bin = bin.as_ref();
    let sidecar = schema_path(bin);
    let schema = if sidecar.exists() {
        load_schema(&sidecar)?
    } else if let Some(s) = default_schema {
        s.clone()
    } else {
        return Err(Error::Schema(format!(
            "no schema sidecar {} and no default schema",
            sidecar.display()
        )));
    };
    load_pointcloud(bin, &schema)
}

/// Write `<stem>.bin` and its schema sidecar.
pub fn save_scan(bin: impl AsRef<Path>, pc: &PointCloud) -> Result<()> {
    let bin = bin.as_ref();
    crate::io::write_atomic(bin, &encode_records(pc))?;
    let schema = serde_json::to_vec_pretty(pc.schema())?;
    crate::io::write_atomic(&schema_path(bin), &schema)
}
