use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EMBEDDED: &str = include_str!("../../data/reference_objectives.json");

/// Reference AC objective values in $/h, keyed by canonical case name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceObjectives {
    values: BTreeMap<String, f64>,
}

impl ReferenceObjectives {
    /// Values shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED).expect("embedded reference data is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, f64> = serde_json::from_str(text)?;
        let mut values = BTreeMap::new();
        for (name, value) in raw {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::validation(format!("reference objective for {name} must be positive")));
            }
            values.insert(canonical_case_name(&name), value);
        }
        Ok(ReferenceObjectives { values })
    }

    pub fn get(&self, case_name: &str) -> Option<f64> {
        self.values.get(&canonical_case_name(case_name)).copied()
    }

    /// Entries of `other` take precedence.
    pub fn merged_with(&self, other: &ReferenceObjectives) -> Self {
        let mut values = self.values.clone();
        values.extend(other.values.iter().map(|(k, v)| (k.clone(), *v)));
        ReferenceObjectives { values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Strips directories, the `.m` extension and the `pglib_opf_` prefix.
pub fn canonical_case_name(name: &str) -> String {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    let base = base.strip_suffix(".m").unwrap_or(base);
    base.strip_prefix("pglib_opf_").unwrap_or(base).to_string()
}
