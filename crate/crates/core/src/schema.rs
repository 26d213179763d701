//! Per-point feature layout of a radar scan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub unit: String,
}

impl Field {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

/// Ordered list of named point fields. The first three are always `x`, `y`, `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct FeatureSchema {
    fields: Vec<Field>,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    fields: Vec<Field>,
}

impl TryFrom<SchemaFile> for FeatureSchema {
    type Error = Error;

    fn try_from(file: SchemaFile) -> Result<Self> {
        FeatureSchema::new(file.fields)
    }
}

impl From<FeatureSchema> for SchemaFile {
    fn from(schema: FeatureSchema) -> Self {
        SchemaFile {
            fields: schema.fields,
        }
    }
}

impl FeatureSchema {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if fields.len() < 3 {
            return Err(Error::Schema(format!(
                "need at least x, y, z; got {} fields",
                fields.len()
            )));
        }
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            if fields[i].name != *axis {
                return Err(Error::Schema(format!(
                    "field {i} must be `{axis}`, found `{}`",
                    fields[i].name
                )));
            }
        }
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("duplicate field `{}`", f.name)));
            }
        }
        Ok(Self { fields })
    }

    /// Seven-field multi-scan layout: position, RCS, radial and compensated
    /// radial velocity, scan index.
    pub fn vod() -> Self {
        Self::new(vec![
            Field::new("x", "m"),
            Field::new("y", "m"),
            Field::new("z", "m"),
            Field::new("rcs", "dB"),
            Field::new("v_r", "m/s"),
            Field::new("v_rc", "m/s"),
            Field::new("time", "scan"),
        ])
        .expect("static schema")
    }

    /// Five-field layout: position, radial velocity, SNR.
    pub fn tj4d() -> Self {
        Self::new(vec![
            Field::new("x", "m"),
            Field::new("y", "m"),
            Field::new("z", "m"),
            Field::new("v_r", "m/s"),
            Field::new("snr", "dB"),
        ])
        .expect("static schema")
    }

    /// Position-only layout.
    pub fn xyz() -> Self {
        Self::new(vec![
            Field::new("x", "m"),
            Field::new("y", "m"),
            Field::new("z", "m"),
        ])
        .expect("static schema")
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownField(name.to_string()))
    }

    /// First velocity-like field (unit `m/s`), used as the default Doppler
    /// kernel dimension.
    pub fn doppler_field(&self) -> Option<&str> {
        self.fields
            .iter()
            .skip(3)
            .find(|f| f.unit == "m/s")
            .map(|f| f.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_missing_axes() {
        let err = FeatureSchema::new(vec![Field::new("y", "m"), Field::new("x", "m"), Field::new("z", "m")]);
        assert!(err.is_err());
        assert!(FeatureSchema::new(vec![Field::new("x", "m")]).is_err());
    }

    #[test]
    fn rejects_duplicates() {
        let fields = vec![
            Field::new("x", "m"),
            Field::new("y", "m"),
            Field::new("z", "m"),
            Field::new("v_r", "m/s"),
            Field::new("v_r", "m/s"),
        ];
        assert!(matches!(FeatureSchema::new(fields), Err(Error::Schema(_))));
    }

    #[test]
    fn dataset_layouts() {
        assert_eq!(FeatureSchema::vod().len(), 7);
        assert_eq!(FeatureSchema::tj4d().len(), 5);
        assert_eq!(FeatureSchema::vod().doppler_field(), Some("v_r"));
        assert_eq!(FeatureSchema::tj4d().doppler_field(), Some("v_r"));
        assert_eq!(FeatureSchema::xyz().doppler_field(), None);
    }

    #[test]
    fn json_roundtrip_validates() {
        let json = serde_json::to_string(&FeatureSchema::tj4d()).unwrap();
        let back: FeatureSchema = serde_json::from_str(&json).unwrap();
        assert_eq!(back, FeatureSchema::tj4d());
        let bad = r#"{"fields":[{"name":"x","unit":"m"}]}"#;
        assert!(serde_json::from_str::<FeatureSchema>(bad).is_err());
    }
}
