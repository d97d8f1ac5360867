use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../assets/tdl_profiles.json");

pub const DEFAULT_DELAY_SPREAD_S: f64 = 30e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    #[allow(dead_code)]
    source: String,
    #[allow(dead_code)]
    #[serde(default)]
    note: String,
    delay_spread_s: f64,
    profiles: BTreeMap<String, ProfileEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileEntry {
    #[allow(dead_code)]
    table: String,
    taps: Vec<TapRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TapRow {
    delay: f64,
    power_db: f64,
    los: bool,
    #[serde(default)]
    k_db: Option<f64>,
}

/// One resolvable path after merging co-located table rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TdlTap {
    pub normalized_delay: f64,
    pub delay_s: f64,
    /// Linear power, normalized so all taps sum to one.
    pub power: f64,
    pub is_los: bool,
    /// Rician K (dB) of a LoS tap.
    pub rician_k_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdlProfile {
    pub name: String,
    pub taps: Vec<TdlTap>,
    pub delay_spread_s: f64,
}

impl TdlProfile {
    /// Builds a profile directly from `(delay_s, linear power)` Rayleigh taps.
    pub fn rayleigh(name: &str, taps: &[(f64, f64)]) -> Self {
        let total: f64 = taps.iter().map(|t| t.1).sum();
        TdlProfile {
            name: name.to_owned(),
            taps: taps
                .iter()
                .map(|&(d, p)| TdlTap {
                    normalized_delay: d,
                    delay_s: d,
                    power: p / total,
                    is_los: false,
                    rician_k_db: None,
                })
                .collect(),
            delay_spread_s: 1.0,
        }
    }

    pub fn has_los(&self) -> bool {
        self.taps.iter().any(|t| t.is_los)
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.power).sum()
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn build(name: &str, entry: &ProfileEntry, delay_spread_s: f64) -> Result<TdlProfile> {
    let cfg = |msg: String| Error::Config(format!("profile {name}: {msg}"));
    if entry.taps.is_empty() {
        return Err(cfg("no taps".into()));
    }
    if entry.taps[0].delay != 0.0 {
        return Err(cfg("first tap delay must be 0".into()));
    }
    if entry.taps.iter().filter(|t| t.los).count() > 1 {
        return Err(cfg("more than one LoS row".into()));
    }
    // merge rows sharing a delay: LoS power + diffuse power form a Rician tap
    let mut taps: Vec<(f64, f64, f64, bool)> = Vec::new(); // delay, diffuse, los, is_los
    for row in &entry.taps {
        if row.delay < 0.0 {
            return Err(cfg(format!("negative delay {}", row.delay)));
        }
        let p = db_to_lin(row.power_db);
        let slot = match taps.iter_mut().find(|t| t.0 == row.delay) {
            Some(s) => s,
            None => {
                taps.push((row.delay, 0.0, 0.0, false));
                taps.last_mut().expect("just pushed")
            }
        };
        if row.los {
            slot.2 += p;
            slot.3 = true;
        } else {
            slot.1 += p;
        }
    }
    if let Some(los_row) = entry.taps.iter().find(|t| t.los) {
        let tap = taps.iter().find(|t| t.3).expect("LoS row merged");
        if tap.1 <= 0.0 {
            return Err(cfg("LoS row without a diffuse row at the same delay".into()));
        }
        let k_db = 10.0 * (tap.2 / tap.1).log10();
        if let Some(k) = los_row.k_db {
            if (k - k_db).abs() > 0.01 {
                return Err(cfg(format!("stated K {k} dB disagrees with row powers ({k_db:.3} dB)")));
            }
        }
    }
    let total: f64 = taps.iter().map(|t| t.1 + t.2).sum();
    Ok(TdlProfile {
        name: name.to_owned(),
        taps: taps
            .into_iter()
            .map(|(d, diffuse, los, is_los)| TdlTap {
                normalized_delay: d,
                delay_s: d * delay_spread_s,
                power: (diffuse + los) / total,
                is_los,
                rician_k_db: is_los.then(|| 10.0 * (los / diffuse).log10()),
            })
            .collect(),
        delay_spread_s,
    })
}

fn load_from_str(text: &str, name: &str) -> Result<TdlProfile> {
    let file: ProfileFile =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("profile data: {e}")))?;
    let entry = file.profiles.get(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown channel profile {name:?} (known: {})",
            file.profiles.keys().cloned().collect::<Vec<_>>().join(", ")
        ))
    })?;
    build(name, entry, file.delay_spread_s)
}

/// Loads a profile from the bundled table data.
pub fn load_profile(name: &str) -> Result<TdlProfile> {
    load_from_str(BUNDLED, name)
}

/// Loads a profile from an external data file with the bundled schema.
pub fn load_profile_from(path: &Path, name: &str) -> Result<TdlProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_from_str(&text, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tdl_c_has_los_first_tap() {
        let p = load_profile("NTN-TDL-C").unwrap();
        assert!(p.taps[0].is_los);
        assert_eq!(p.taps.len(), 2);
        assert!((p.taps[0].rician_k_db.unwrap() - 10.224).abs() < 1e-9);
        assert!((p.taps[1].delay_s - 14.8124 * 30e-9).abs() < 1e-18);
    }

    #[test]
    fn tdl_a_is_nlos() {
        let p = load_profile("NTN-TDL-A").unwrap();
        assert!(!p.has_los());
        assert_eq!(p.taps.len(), 3);
        assert_eq!(p.taps[0].delay_s, 0.0);
    }

    #[test]
    fn powers_normalized() {
        for name in ["NTN-TDL-A", "NTN-TDL-C"] {
            assert!((load_profile(name).unwrap().total_power() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_profile_is_config_error() {
        assert!(matches!(load_profile("NTN-TDL-Z"), Err(Error::Config(_))));
    }

    #[test]
    fn inconsistent_k_rejected() {
        let text = r#"{"source":"x","delay_spread_s":1e-9,"profiles":{"P":{"table":"t","taps":[
            {"delay":0.0,"power_db":0.0,"los":true,"k_db":3.0},
            {"delay":0.0,"power_db":-10.0,"los":false}]}}}"#;
        assert!(load_from_str(text, "P").is_err());
    }
}
