//! Option merging (flag, then config file, then default) and the config hash.

use derand_core::{LabError, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub struct Params {
    file: Map<String, Value>,
    effective: Map<String, Value>,
}

impl Params {
    pub fn new(file: Map<String, Value>) -> Params {
        Params {
            file,
            effective: Map::new(),
        }
    }

    /// Reads a config file: a flat JSON object keyed by flag name.
    pub fn load(text: &str) -> Result<Params> {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => Ok(Params::new(m)),
            Ok(_) => Err(LabError::Parse(
                "config file must hold a JSON object".into(),
            )),
            Err(e) => Err(LabError::Parse(format!("config file: {e}"))),
        }
    }

    pub fn get<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => serde_json::from_value(raw.clone())
                    .map_err(|e| LabError::Parse(format!("config key {key}: {e}")))?,
                None => default,
            },
        };
        self.effective
            .insert(key.to_string(), serde_json::to_value(&v).unwrap());
        Ok(v)
    }

    /// Like `get` without a default; missing everywhere is a usage error.
    pub fn need<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => serde_json::from_value(raw.clone())
                    .map_err(|e| LabError::Parse(format!("config key {key}: {e}")))?,
                None => return Err(LabError::Parameter(format!("--{key} is required"))),
            },
        };
        self.effective
            .insert(key.to_string(), serde_json::to_value(&v).unwrap());
        Ok(v)
    }

    /// Flag or config value when either is present.
    pub fn optional<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>> {
        if flag.is_none() && !self.file.contains_key(key) {
            return Ok(None);
        }
        self.need(key, flag).map(Some)
    }

    /// Records a value that came from elsewhere (file contents, derived settings).
    pub fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        self.effective
            .insert(key.to_string(), serde_json::to_value(v).unwrap());
    }

    pub fn effective(&self) -> &Map<String, Value> {
        &self.effective
    }
}

/// sha256 over the canonical (key-sorted) JSON of the command and its settings.
pub fn config_hash(command: &str, settings: &Map<String, Value>) -> String {
    let doc = serde_json::json!({ "command": command, "settings": settings });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

/// A numeric sweep axis: `a..b`, `a..=b`, a comma list, or a single value.
pub fn parse_axis(spec: &str) -> Result<Vec<u64>> {
    let bad = || LabError::Parse(format!("bad range {spec:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = spec.split_once("..=") {
        let (a, b) = (num(a)?, num(b)?);
        return Ok(if a > b { vec![] } else { (a..=b).collect() });
    }
    if let Some((a, b)) = spec.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    spec.split(',').map(num).collect()
}

pub fn is_ranged(spec: &str) -> bool {
    spec.contains("..") || spec.contains(',')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes() {
        assert_eq!(parse_axis("2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_axis("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_axis("1,2,4").unwrap(), vec![1, 2, 4]);
        assert_eq!(parse_axis("3..3").unwrap(), Vec::<u64>::new());
        assert!(parse_axis("x..3").is_err());
    }

    #[test]
    fn precedence() {
        let mut p = Params::load(r#"{"samples": 50, "n": 7}"#).unwrap();
        assert_eq!(p.get("samples", Some(9u64), 1).unwrap(), 9);
        assert_eq!(p.get("n", None, 1u64).unwrap(), 7);
        assert_eq!(p.get("d", None, 2u32).unwrap(), 2);
        let h = config_hash("x", p.effective());
        assert_eq!(h.len(), 64);
        assert_ne!(h, config_hash("y", p.effective()));
    }
}
