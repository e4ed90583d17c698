//! Versioned JSON files. Every file carries `"opineq-schema": 1` next to its
//! own fields.

use std::fs;
use std::path::Path;

use opineq_core::bounds::{InequalityInstance, InstanceData};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{HarnessError, Result};

pub const SCHEMA_KEY: &str = "opineq-schema";
pub const SCHEMA_VERSION: u64 = 1;

/// Serializes `body` with the schema key added at the top level.
pub fn to_json<T: Serialize>(body: &T) -> Result<String> {
    let json_err = |source| HarnessError::Json {
        path: "<memory>".into(),
        source,
    };
    let mut v = serde_json::to_value(body).map_err(json_err)?;
    match &mut v {
        Value::Object(map) => {
            map.insert(SCHEMA_KEY.into(), SCHEMA_VERSION.into());
        }
        _ => return Err(HarnessError::Spec("top-level JSON value must be an object".into())),
    }
    serde_json::to_string_pretty(&v).map_err(json_err)
}

/// Parses a schema-tagged document. `origin` names the source in errors.
pub fn from_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let json_err = |source| HarnessError::Json {
        path: origin.into(),
        source,
    };
    let mut v: Value = serde_json::from_str(text).map_err(json_err)?;
    let map = v
        .as_object_mut()
        .ok_or_else(|| HarnessError::Spec(format!("{origin}: top-level JSON value must be an object")))?;
    match map.remove(SCHEMA_KEY) {
        None => return Err(HarnessError::Spec(format!("{origin}: missing \"{SCHEMA_KEY}\""))),
        Some(s) => match s.as_u64() {
            Some(SCHEMA_VERSION) => {}
            Some(other) => return Err(HarnessError::Schema(other)),
            None => return Err(HarnessError::Spec(format!("{origin}: \"{SCHEMA_KEY}\" must be an integer"))),
        },
    }
    serde_json::from_value(v).map_err(json_err)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text, &path.display().to_string())
}

pub fn write_json<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    let text = to_json(body)?;
    fs::write(path, text + "\n").map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads an instance file and rechecks every invariant.
pub fn read_instance(path: &Path, envelope_grid: usize) -> Result<InequalityInstance<f64>> {
    let data: InstanceData<f64> = read_json(path)?;
    Ok(data.build(envelope_grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Doc {
        a: Vec<[f64; 2]>,
        name: String,
    }

    #[test]
    fn round_trip_and_version() {
        let d = Doc {
            a: vec![[1.0, -0.5]],
            name: "x".into(),
        };
        let s = to_json(&d).unwrap();
        assert!(s.contains("\"opineq-schema\": 1"));
        let back: Doc = from_json(&s, "mem").unwrap();
        assert_eq!(back, d);

        let bad = s.replace("\"opineq-schema\": 1", "\"opineq-schema\": 2");
        assert!(matches!(from_json::<Doc>(&bad, "mem"), Err(HarnessError::Schema(2))));
        let missing = r#"{"a": [], "name": "y"}"#;
        assert!(from_json::<Doc>(missing, "mem").unwrap_err().to_string().contains("opineq-schema"));
    }
}
