//! Readers (and the matching writer) for ship data, hindcast grids, ship
//! particulars and the pipeline configuration.

mod config;
mod grid;
mod particulars;
mod ship;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};

use crate::error::{Error, Result};
use crate::model::Timestamp;
use crate::tables::KNOT;

pub use config::{parse_stage_list, DraftMethod, PipelineConfig, Stage};
pub use grid::{load_hindcast, parse_hindcast, DirectionConvention, GridVariable, HindcastGrid};
pub use particulars::{load_particulars, parse_particulars, DEFAULT_RPM_THRESHOLD, DEFAULT_SOG_THRESHOLD};
pub use ship::{load_schema, load_ship_csv, read_ship_csv, write_ship_csv, UnitMap};

/// Parses ISO-8601 UTC timestamps. Offsets are honoured; naive values are
/// taken as UTC. Sub-second parts are truncated.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    let trimmed = s.trim_end_matches('Z');
    NAIVE
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(trimmed, f).ok())
        .map(|n| Utc.from_utc_datetime(&n).timestamp())
}

pub fn format_timestamp(t: Timestamp) -> String {
    match DateTime::<Utc>::from_timestamp(t, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => t.to_string(),
    }
}

/// Multiplicative factor converting `unit` into the internal unit.
pub fn unit_factor(unit: &str) -> Result<f64> {
    let u = unit.trim().to_ascii_lowercase();
    Ok(match u.as_str() {
        "" | "si" | "m/s" | "w" | "m" | "deg" | "degree" | "degrees" | "rpm" | "n*m" | "nm"
        | "n.m" | "m3" | "m2" | "-" => 1.0,
        "knot" | "knots" | "kn" | "kt" | "kts" => KNOT,
        "km/h" | "kmh" => 1.0 / 3.6,
        "kw" => 1e3,
        "mw" => 1e6,
        "kn*m" | "knm" | "kn.m" => 1e3,
        "rev/s" | "rps" => 60.0,
        "cm" => 0.01,
        other => return Err(Error::InvalidParameter(format!("unknown unit `{other}`"))),
    })
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub(crate) fn parse_key_values(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, idx + 1, format!("expected `key = value`, got `{line}`")))?;
        out.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_f64(path: &Path, line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("`{key}` expects a number, got `{v}`")))
}

/// `a:b, c:d` pairs.
pub(crate) fn parse_pairs(path: &Path, line: usize, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::parse(path, line, format!("expected `x:y`, got `{p}`")))?;
            Ok((parse_f64(path, line, "pair", a)?, parse_f64(path, line, "pair", b)?))
        })
        .collect()
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Column → source unit as given in a config file.
pub fn unit_map_from(pairs: &BTreeMap<String, String>) -> Result<UnitMap> {
    let mut map = UnitMap::new();
    for (col, unit) in pairs {
        map.insert(col.clone(), unit.clone())?;
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_parse_and_format() {
        assert_eq!(parse_timestamp("1970-01-01T00:15:00Z"), Some(900));
        assert_eq!(parse_timestamp("1970-01-01 00:15:00"), Some(900));
        assert_eq!(parse_timestamp("1970-01-01T01:15:00+01:00"), Some(900));
        assert_eq!(parse_timestamp("garbage"), None);
        assert_eq!(format_timestamp(900), "1970-01-01T00:15:00Z");
    }

    #[test]
    fn knots_factor() {
        // 1 knot = 1852 m per hour.
        assert!((unit_factor("knots").unwrap() * 3600.0 - 1852.0).abs() < 1e-9);
        assert!(unit_factor("furlongs").is_err());
    }
}
