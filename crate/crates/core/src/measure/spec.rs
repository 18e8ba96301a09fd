//! JSON description of a measure.
//!
//! ```json
//! {"atoms": [[-1.0, 0.5], [1.0, 0.5]]}
//! {"density": [{"grid": [0.0, 1.0], "values": [1.0, 1.0]}]}
//! {"preset": "semicircle", "params": {"sigma": 1.0}}
//! ```
//!
//! Presets: `semicircle` (`sigma`), `two-point` (`a`), `uniform` (`lo`, `hi`),
//! `point-mass` (`location`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Atom, DensityPiece, Measure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub density: Vec<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl MeasureSpec {
    pub fn preset(name: &str, params: &[(&str, f64)]) -> Self {
        Self { preset: Some(name.to_string()), params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(), ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("measure spec: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn param(&self, key: &str) -> Result<f64> {
        self.params.get(key).copied().ok_or_else(|| Error::Config(format!("preset {:?} needs parameter {key:?}", self.preset)))
    }

    pub fn build(&self) -> Result<Measure<f64>> {
        if let Some(name) = &self.preset {
            if !self.atoms.is_empty() || !self.density.is_empty() {
                return Err(Error::Config("a preset cannot be combined with atoms or density".into()));
            }
            return match name.as_str() {
                "semicircle" => Measure::semicircle(self.param("sigma")?),
                "two-point" => Measure::two_point(self.param("a")?),
                "uniform" => Measure::uniform(self.param("lo")?, self.param("hi")?),
                "point-mass" => Ok(Measure::point_mass(self.param("location")?)),
                other => Err(Error::Config(format!("unknown preset {other:?}"))),
            };
        }
        let atoms = self.atoms.iter().map(|&(location, weight)| Atom { location, weight }).collect();
        let pieces = self.density.iter().map(|d| DensityPiece::new(d.grid.clone(), d.values.clone())).collect::<Result<Vec<_>>>()?;
        Measure::new(atoms, pieces, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_presets_and_explicit_components() {
        let m = MeasureSpec::from_json(r#"{"preset": "two-point", "params": {"a": 1.0}}"#).unwrap().build().unwrap();
        assert_eq!(m.right_edge(), 1.0);
        let m = MeasureSpec::from_json(r#"{"preset": "semicircle", "params": {"sigma": 0.5}}"#).unwrap().build().unwrap();
        assert_eq!(m.right_edge(), 1.0);
        let m = MeasureSpec::from_json(r#"{"atoms": [[2.0, 0.5]], "density": [{"grid": [0.0, 1.0], "values": [1.0, 0.0]}]}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!((m.left_edge(), m.right_edge()), (0.0, 2.0));
    }

    #[test]
    fn rejects_malformed_specs() {
        assert!(MeasureSpec::from_json(r#"{"preset": "cauchy"}"#).unwrap().build().is_err());
        assert!(MeasureSpec::from_json(r#"{"preset": "uniform", "params": {"lo": 0}}"#).unwrap().build().is_err());
        assert!(MeasureSpec::from_json(r#"{"atom": []}"#).is_err());
        assert!(MeasureSpec::from_json(r#"{"atoms": [[0.0, 0.4]]}"#).unwrap().build().is_err());
    }
}
