//! Sectioned `key = value` scenario files with unit-suffixed values.
//!
//! A file holds the singleton sections `[system]`, `[antenna]`,
//! `[receiver]`, `[sweep]` and `[run]`, plus any number of `[curve]`
//! sections. Curve sections carry a `label` and dotted overrides such as
//! `system.bs_density = 500 per-km2` that apply on top of the base
//! sections for that curve only. `#` starts a comment anywhere on a line.
//!
//! Values are a number plus an optional unit token. Bare numbers are
//! linear SI units (watts, radians, hertz, meters, per square meter);
//! the accepted suffixes per dimension are listed on the reader
//! functions below.

use harvest_core::units;
use std::collections::BTreeMap;
use thiserror::Error;

/// Non-curve sections a scenario file may contain.
pub const SECTIONS: [&str; 5] = ["system", "antenna", "receiver", "sweep", "run"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{key}: {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn value(key: &str, msg: impl Into<String>) -> Self {
        ConfigError::Value {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

/// One `[curve]` block: a label plus dotted overrides in file order.
#[derive(Debug, Clone, Default)]
pub struct RawCurve {
    pub label: Option<String>,
    pub overrides: Vec<(String, String)>,
}

/// Parsed but untyped configuration: base keys as `section.key` plus the
/// curve blocks. Typed interpretation happens in [`crate::scenario`].
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub base: BTreeMap<String, String>,
    pub curves: Vec<RawCurve>,
}

impl RawConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.base.get(key).map(String::as_str)
    }
}

fn known_section(name: &str) -> bool {
    SECTIONS.contains(&name)
}

fn check_dotted(key: &str) -> Result<(), ConfigError> {
    match key.split_once('.') {
        Some((section, rest)) if known_section(section) && !rest.is_empty() => Ok(()),
        Some((section, _)) if !known_section(section) => Err(ConfigError::value(
            key,
            format!("unknown section `{section}` (expected one of {SECTIONS:?})"),
        )),
        _ => Err(ConfigError::value(key, "expected `section.key`")),
    }
}

/// Parse a scenario file.
pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    let mut cfg = RawConfig::default();
    // Section context: None before any header, Some("curve") inside the
    // latest curve block, otherwise the current base section.
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("unterminated section header `{content}`"),
                });
            };
            let name = name.trim().to_ascii_lowercase();
            if name == "curve" {
                cfg.curves.push(RawCurve::default());
            } else if !known_section(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("unknown section [{name}] (expected one of {SECTIONS:?} or [curve])"),
                });
            }
            section = Some(name);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                msg: "empty key or value".into(),
            });
        }
        match section.as_deref() {
            None => {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("key `{key}` appears before any [section] header"),
                });
            }
            Some("curve") => {
                let curve = cfg.curves.last_mut().expect("inside a curve block");
                if key == "label" {
                    curve.label = Some(value);
                } else {
                    check_dotted(&key).map_err(|e| ConfigError::Syntax {
                        line,
                        msg: e.to_string(),
                    })?;
                    curve.overrides.push((key, value));
                }
            }
            Some(sec) => {
                cfg.base.insert(format!("{sec}.{key}"), value);
            }
        }
    }
    Ok(cfg)
}

/// Apply `--set section.key=value` assignments on top of the base
/// sections (curve overrides still win for their curve).
pub fn apply_set(cfg: &mut RawConfig, assignments: &[String]) -> Result<(), ConfigError> {
    for assignment in assignments {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Invalid(format!(
                "--set expects section.key=value, got `{assignment}`"
            )));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        check_dotted(&key)?;
        if value.is_empty() {
            return Err(ConfigError::value(&key, "empty value"));
        }
        cfg.base.insert(key, value);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Unit-suffixed value readers
// ---------------------------------------------------------------------------

fn split_unit(raw: &str) -> Result<(f64, Option<String>), String> {
    let mut parts = raw.split_whitespace();
    let number = parts.next().ok_or("empty value")?;
    let unit = parts.next().map(str::to_ascii_lowercase);
    if parts.next().is_some() {
        return Err(format!("expected `number [unit]`, got `{raw}`"));
    }
    let value: f64 = number
        .parse()
        .map_err(|_| format!("`{number}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{number}` is not finite"));
    }
    Ok((value, unit))
}

/// Power in watts. Suffixes: `w`, `mw`, `uw`, `dbm`, `dbw`; bare = watts.
/// A bare `db` suffix is rejected as ambiguous for powers.
pub fn power_watts(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit.as_deref() {
        None | Some("w") => Ok(value),
        Some("mw") => Ok(value * 1e-3),
        Some("uw") => Ok(value * 1e-6),
        Some("dbm") => Ok(units::dbm_to_watts(value)),
        Some("dbw") => Ok(units::dbw_to_watts(value)),
        Some("db") => Err("`db` is ambiguous for powers; use `dbm` or `dbw`".into()),
        Some(u) => Err(format!("unknown power unit `{u}`")),
    }
}

/// Linear gain or ratio. Suffix `db` converts; bare = linear.
pub fn ratio_linear(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit.as_deref() {
        None => Ok(value),
        Some("db") => Ok(units::db_to_linear(value)),
        Some(u) => Err(format!("unknown ratio unit `{u}`")),
    }
}

/// Angle in radians. Suffixes: `deg`, `rad`; bare = radians.
pub fn angle_radians(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit.as_deref() {
        None | Some("rad") => Ok(value),
        Some("deg") => Ok(value.to_radians()),
        Some(u) => Err(format!("unknown angle unit `{u}`")),
    }
}

/// Frequency in hertz. Suffixes: `hz`, `khz`, `mhz`, `ghz`; bare = hertz.
pub fn frequency_hz(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit.as_deref() {
        None | Some("hz") => Ok(value),
        Some("khz") => Ok(value * 1e3),
        Some("mhz") => Ok(value * 1e6),
        Some("ghz") => Ok(value * 1e9),
        Some(u) => Err(format!("unknown frequency unit `{u}`")),
    }
}

/// Length in meters. Suffixes: `m`, `km`; bare = meters.
pub fn length_m(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit.as_deref() {
        None | Some("m") => Ok(value),
        Some("km") => Ok(value * 1e3),
        Some(u) => Err(format!("unknown length unit `{u}`")),
    }
}

/// Node density per square meter. Suffixes: `per-m2`, `per-km2`;
/// bare = per square meter.
pub fn density_per_m2(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit.as_deref() {
        None | Some("per-m2") => Ok(value),
        Some("per-km2") => Ok(value * 1e-6),
        Some(u) => Err(format!("unknown density unit `{u}`")),
    }
}

/// Dimensionless number, no suffix allowed.
pub fn bare_f64(raw: &str) -> Result<f64, String> {
    let (value, unit) = split_unit(raw)?;
    match unit {
        None => Ok(value),
        Some(u) => Err(format!("no unit expected, got `{u}`")),
    }
}

/// Nonnegative integer, no suffix.
pub fn bare_u64(raw: &str) -> Result<u64, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("`{raw}` is not a nonnegative integer"))
}

/// Positive integer fitting in u32, no suffix.
pub fn bare_u32(raw: &str) -> Result<u32, String> {
    let n: u32 = raw
        .trim()
        .parse()
        .map_err(|_| format!("`{raw}` is not a nonnegative integer"))?;
    if n == 0 {
        return Err("must be at least 1".into());
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use harvest_core::units;

    #[test]
    fn parses_sections_comments_and_curves() {
        let text = "\
# leading comment
[system]
tx_power = 20.0   # watts
bs_density = 100 per-km2

[run]
mode = energy-connected

[curve]
label = narrow
antenna.main_gain = 10 db

[curve]
label = wide
";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.get("system.tx_power"), Some("20.0"));
        assert_eq!(cfg.get("system.bs_density"), Some("100 per-km2"));
        assert_eq!(cfg.get("run.mode"), Some("energy-connected"));
        assert_eq!(cfg.curves.len(), 2);
        assert_eq!(cfg.curves[0].label.as_deref(), Some("narrow"));
        assert_eq!(
            cfg.curves[0].overrides,
            vec![("antenna.main_gain".to_string(), "10 db".to_string())]
        );
        assert!(cfg.curves[1].overrides.is_empty());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("[system\n").is_err());
        assert!(parse("[made-up]\n").is_err());
        assert!(parse("stray = 1\n").is_err());
        assert!(parse("[system]\nnot a pair\n").is_err());
        assert!(parse("[curve]\nbadkey = 1\n").is_err());
        assert!(parse("[curve]\nnope.main_gain = 1\n").is_err());
    }

    #[test]
    fn set_overrides_base_keys() {
        let mut cfg = parse("[system]\ntx_power = 20\n").unwrap();
        apply_set(&mut cfg, &["system.tx_power=40".into()]).unwrap();
        assert_eq!(cfg.get("system.tx_power"), Some("40"));
        assert!(apply_set(&mut cfg, &["tx_power=40".into()]).is_err());
        assert!(apply_set(&mut cfg, &["system.x".into()]).is_err());
    }

    #[test]
    fn unit_suffixes_convert() {
        assert_eq!(power_watts("20.0").unwrap(), 20.0);
        assert_eq!(power_watts("5 mw").unwrap(), 5e-3);
        assert!((power_watts("-35 dbm").unwrap() - units::dbm_to_watts(-35.0)).abs() < 1e-20);
        assert!((power_watts("-70 dbw").unwrap() - 1e-7).abs() < 1e-19);
        assert!(power_watts("3 db").is_err());

        assert_eq!(ratio_linear("0.1").unwrap(), 0.1);
        assert!((ratio_linear("10 db").unwrap() - 10.0).abs() < 1e-12);

        assert!((angle_radians("30 deg").unwrap() - 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(frequency_hz("28 ghz").unwrap(), 28e9);
        assert_eq!(length_m("2 km").unwrap(), 2e3);
        assert_eq!(density_per_m2("100 per-km2").unwrap(), 1e-4);
        assert!(bare_f64("1 w").is_err());
        assert_eq!(bare_u64("10000").unwrap(), 10_000);
        assert!(bare_u32("0").is_err());
    }
}
