use crate::error::{Error, Result};
use crate::model::{QualityFlag, VariableSpec, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::tables::ShipType;
use crate::vars;

use super::{haversine, valid_position, EARTH_RADIUS};

/// Speeds below this (m/s) are not used as the denominator of the relative
/// mismatch.
const SPEED_FLOOR: f64 = 0.5;
/// Below this spacing (s) the single-leg implied speed is too noisy and the
/// window trend is used instead.
const SHORT_INTERVAL: i64 = 60;

/// Service speed range (m/s) for a ship type given by name.
pub fn service_speed_range_for(ship_type: &str) -> Result<(f64, f64)> {
    Ok(ship_type.parse::<ShipType>()?.service_speed_range())
}

/// Compares each reported sog with the speed implied by the great-circle
/// distance to its neighbours. A sample disagreeing with every adjacent leg
/// by more than `tolerance` (relative) is flagged `irrational_speed` and its
/// sog replaced by the nearest unflagged sample within `window`; originals
/// are kept in `raw_sog`.
pub fn ais_speed_consistency(
    ds: &VoyageDataset,
    tolerance: f64,
    window: usize,
) -> Result<(VoyageDataset, StageEntry)> {
    if !(tolerance > 0.0) || window == 0 {
        return Err(Error::InvalidParameter("tolerance and window must be positive".into()));
    }
    let mut entry = StageEntry::new("ais");
    let sog = ds.real(vars::SOG).ok_or_else(|| Error::MissingVariable(vars::SOG.into()))?;
    for v in [vars::LATITUDE, vars::LONGITUDE] {
        ds.real(v).ok_or_else(|| Error::MissingVariable(v.into()))?;
    }
    let ts = ds.timestamps();
    let pos: Vec<(usize, (f64, f64))> = (0..ds.len()).filter_map(|i| valid_position(ds, i).map(|p| (i, p))).collect();
    let leg_speed = |a: usize, b: usize| {
        let ((ia, (la, lo)), (ib, (lb, lb2))) = (pos[a], pos[b]);
        let dt = (ts[ib] - ts[ia]) as f64;
        (dt > 0.0).then(|| haversine(la, lo, lb, lb2, EARTH_RADIUS) / dt)
    };
    let mismatch = |s: f64, implied: f64| (s - implied).abs() / implied.max(SPEED_FLOOR);

    let half = window / 2;
    let mut bad = vec![false; ds.len()];
    let mut observed = vec![None; ds.len()];
    for k in 0..pos.len() {
        let i = pos[k].0;
        let Some(s) = sog[i] else { continue };
        let short = [k.checked_sub(1), (k + 1 < pos.len()).then_some(k + 1)]
            .into_iter()
            .flatten()
            .any(|j| (ts[i] - ts[pos[j].0]).abs() < SHORT_INTERVAL);
        let implied: Vec<f64> = if short {
            // Mean speed over the surrounding window of positions.
            let (a, b) = (k.saturating_sub(half), (k + half).min(pos.len() - 1));
            let dist: f64 = (a..b)
                .map(|j| {
                    let ((_, (la, lo)), (_, (lb, lb2))) = (pos[j], pos[j + 1]);
                    haversine(la, lo, lb, lb2, EARTH_RADIUS)
                })
                .sum();
            let dt = (ts[pos[b].0] - ts[pos[a].0]) as f64;
            if dt > 0.0 {
                vec![dist / dt]
            } else {
                vec![]
            }
        } else {
            [k.checked_sub(1).and_then(|j| leg_speed(j, k)), (k + 1 < pos.len()).then(|| leg_speed(k, k + 1)).flatten()]
                .into_iter()
                .flatten()
                .collect()
        };
        if implied.is_empty() {
            continue;
        }
        let best = implied.iter().map(|&v| mismatch(s, v)).fold(f64::INFINITY, f64::min);
        if best > tolerance {
            bad[i] = true;
            observed[i] = Some((s, implied.iter().sum::<f64>() / implied.len() as f64));
        }
    }

    let mut out = ds.clone();
    let mut new_sog = sog.to_vec();
    let (mut flagged, mut unreplaced) = (0usize, 0usize);
    for i in 0..ds.len() {
        let Some((s, implied)) = observed[i] else { continue };
        flagged += 1;
        out.flag(i, QualityFlag::IrrationalSpeed);
        entry.count_flag(QualityFlag::IrrationalSpeed);
        let replacement = (1..=window).find_map(|d| {
            [i.checked_sub(d), Some(i + d)]
                .into_iter()
                .flatten()
                .filter(|&j| j < ds.len() && !bad[j])
                .find_map(|j| sog[j])
        });
        new_sog[i] = replacement;
        entry.detail(Some(ts[i]), vars::SOG, Some(implied), Some(s), QualityFlag::IrrationalSpeed.as_str());
        match replacement {
            Some(r) => entry.correction(format!("sog at {} replaced: {s} -> {r}", ts[i])),
            None => {
                unreplaced += 1;
                entry.warn(format!(
                    "sog at {} has no valid neighbour; left missing (check against the service speed range)",
                    ts[i]
                ));
            }
        }
    }
    if flagged > 0 {
        let unit = ds.spec(vars::SOG).map_or("m/s".to_string(), |s| s.unit.clone());
        out.put_real(VariableSpec::linear(vars::raw(vars::SOG), unit), sog.to_vec());
        let spec = ds.spec(vars::SOG).cloned().expect("sog declared");
        out.put_real(spec, new_sog);
    }
    entry.check(
        CheckResult::new("ais_speed_consistency", flagged == 0)
            .metric("flagged", flagged as f64)
            .metric("unreplaced", unreplaced as f64),
    );
    Ok((out, entry))
}

/// Flags navigation statuses that contradict the speed: at anchor (1) or
/// moored (5) while moving faster than `port_speed_threshold`, or under way
/// (0) while stopped inside a port region.
pub fn ais_status_check(ds: &VoyageDataset, port_speed_threshold: f64) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("ais_status");
    let status = ds.real(vars::NAV_STATUS).ok_or_else(|| Error::MissingVariable(vars::NAV_STATUS.into()))?;
    let sog = ds.real(vars::SOG);
    let port = ds.text(vars::PORT);
    let has_trips = ds.trip_ids().iter().any(Option::is_some);
    let in_port = |i: usize| {
        port.and_then(|p| p[i].as_deref()).is_some_and(|s| !s.trim().is_empty()) || (has_trips && ds.trip_id(i).is_none())
    };
    let mut out = ds.clone();
    let mut n = 0usize;
    for i in 0..ds.len() {
        let (Some(st), Some(s)) = (status[i], sog.and_then(|c| c[i])) else { continue };
        let stale = ((st == 1.0 || st == 5.0) && s > port_speed_threshold) || (st == 0.0 && s == 0.0 && in_port(i));
        if stale {
            n += 1;
            out.flag(i, QualityFlag::StaleAisStatus);
            entry.count_flag(QualityFlag::StaleAisStatus);
            entry.detail(Some(ds.timestamps()[i]), vars::NAV_STATUS, None, Some(st), QualityFlag::StaleAisStatus.as_str());
        }
    }
    if n > 0 {
        entry.warn(format!("{n} samples with stale navigation status; manually entered fields (draft) are suspect"));
    }
    entry.check(CheckResult::new("ais_status", n == 0).metric("flagged", n as f64));
    Ok((out, entry))
}
