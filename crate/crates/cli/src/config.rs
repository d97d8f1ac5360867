use std::fs;
use std::path::Path;

use chanpred_core::harness::ScenarioConfig;
use chanpred_core::predictor::TrainConfig;
use chanpred_core::{Error, Result};
use serde::de::DeserializeOwned;

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn train_config(path: Option<&Path>) -> Result<TrainConfig> {
    let cfg: TrainConfig = load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn scenario_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse values {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(num).collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    } else {
        let v: Vec<f64> = spec.split(',').map(num).collect::<Result<_>>()?;
        if v.is_empty() {
            return Err(bad());
        }
        Ok(v)
    }
}
