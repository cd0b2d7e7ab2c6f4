use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Timestamp, VoyageDataset};
use crate::report::StageEntry;
use crate::vars;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripMethod {
    StateVariable,
    Thresholds,
    PortNames,
}

impl FromStr for TripMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "state_variable" | "state" => Ok(TripMethod::StateVariable),
            "thresholds" | "threshold" => Ok(TripMethod::Thresholds),
            "port_names" | "ports" => Ok(TripMethod::PortNames),
            o => Err(Error::InvalidParameter(format!("unknown trip method `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trip {
    pub id: u32,
    pub start: Timestamp,
    pub end: Timestamp,
    /// Inclusive sample index range in the segmented dataset.
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripIndex {
    pub trips: Vec<Trip>,
    pub berth_legs: Vec<(Timestamp, Timestamp)>,
    pub method: TripMethod,
}

impl TripIndex {
    /// Builds the index from in-trip runs given as inclusive index ranges.
    /// Everything outside the runs becomes berth legs.
    fn from_runs(ts: &[Timestamp], runs: &[(usize, usize)], method: TripMethod) -> Self {
        let trips = runs
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| Trip {
                id: k as u32 + 1,
                start: ts[a],
                end: ts[b],
                first: a,
                last: b,
            })
            .collect();
        let mut berth_legs = Vec::new();
        let mut next = 0usize;
        for &(a, b) in runs {
            if a > next {
                berth_legs.push((ts[next], ts[a - 1]));
            }
            next = b + 1;
        }
        if next < ts.len() {
            berth_legs.push((ts[next], ts[ts.len() - 1]));
        }
        Self {
            trips,
            berth_legs,
            method,
        }
    }

    /// Trip containing `t`, if any.
    pub fn trip_at(&self, t: Timestamp) -> Option<u32> {
        self.trips.iter().find(|tr| tr.start <= t && t <= tr.end).map(|tr| tr.id)
    }

    /// Copy of `ds` with trip ids set from this index (by timestamp).
    pub fn assign(&self, ds: &VoyageDataset) -> VoyageDataset {
        let ids = ds.timestamps().iter().map(|&t| self.trip_at(t)).collect();
        let mut out = ds.clone();
        out.set_trip_ids(ids);
        out
    }
}

fn is_berth_token(s: &str) -> bool {
    let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
    matches!(norm.as_str(), "b" | "atberth" | "berth" | "moored" | "5")
}

/// Per-sample berth state from a text or numeric column, forward-filled
/// over gaps. `None` when the column is absent.
fn berth_states(ds: &VoyageDataset, variable: &str) -> Option<(Vec<bool>, usize)> {
    let raw: Vec<Option<bool>> = if let Some(col) = ds.text(variable) {
        col.iter().map(|v| v.as_deref().map(is_berth_token)).collect()
    } else {
        // AIS navigation status: 5 = moored.
        ds.real(variable)?.iter().map(|v| v.map(|x| x == 5.0)).collect()
    };
    let present = raw.iter().filter(|v| v.is_some()).count();
    let first_known = raw.iter().flatten().next().copied().unwrap_or(false);
    let mut last = first_known;
    let filled = raw
        .into_iter()
        .map(|v| {
            if let Some(b) = v {
                last = b;
            }
            last
        })
        .collect();
    Some((filled, present))
}

fn runs_of(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let a = i;
            while i + 1 < mask.len() && mask[i + 1] {
                i += 1;
            }
            runs.push((a, i));
        }
        i += 1;
    }
    runs
}

/// Trips are the gaps between maximal at-berth runs. Leading and trailing
/// non-berth runs count as trips.
pub fn segment_by_state(ds: &VoyageDataset, state_variable: &str) -> Result<TripIndex> {
    let unavailable = || Error::StateVariableUnavailable(state_variable.to_string());
    let (berth, present) = berth_states(ds, state_variable).ok_or_else(unavailable)?;
    if ds.is_empty() || (present as f64) < 0.9 * ds.len() as f64 {
        return Err(unavailable());
    }
    let underway: Vec<bool> = berth.iter().map(|b| !b).collect();
    Ok(TripIndex::from_runs(ds.timestamps(), &runs_of(&underway), TripMethod::StateVariable))
}

/// A sample is in trip when rpm or sog exceeds its threshold. Runs are
/// padded by `pad_samples` on each side and overlapping or touching runs
/// merge. When a berth state is recorded, padding never enters a berth leg.
pub fn segment_by_thresholds(
    ds: &VoyageDataset,
    rpm_threshold: f64,
    sog_threshold: f64,
    pad_samples: usize,
) -> Result<TripIndex> {
    let rpm = ds.real(vars::SHAFT_RPM).filter(|_| ds.present_count(vars::SHAFT_RPM) > 0);
    let sog = ds.real(vars::SOG).filter(|_| ds.present_count(vars::SOG) > 0);
    if rpm.is_none() && sog.is_none() {
        return Err(Error::MissingVariable(format!("{} or {}", vars::SHAFT_RPM, vars::SOG)));
    }
    let above = |col: Option<&[Option<f64>]>, i: usize, th: f64| col.and_then(|c| c[i]).is_some_and(|x| x > th);
    let mask: Vec<bool> = (0..ds.len())
        .map(|i| above(rpm, i, rpm_threshold) || above(sog, i, sog_threshold))
        .collect();
    let berth = berth_states(ds, vars::STATE)
        .or_else(|| berth_states(ds, vars::NAV_STATUS))
        .filter(|(_, present)| *present > 0)
        .map(|(b, _)| b);
    let blocked = |j: usize| berth.as_ref().is_some_and(|b| b[j]);

    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in runs_of(&mask) {
        let mut lo = a;
        while lo > 0 && a - lo < pad_samples && !blocked(lo - 1) {
            lo -= 1;
        }
        let mut hi = b;
        while hi + 1 < ds.len() && hi - b < pad_samples && !blocked(hi + 1) {
            hi += 1;
        }
        match merged.last_mut() {
            Some(prev) if lo <= prev.1 + 1 => prev.1 = prev.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    Ok(TripIndex::from_runs(ds.timestamps(), &merged, TripMethod::Thresholds))
}

/// Samples with a non-empty `port` value are in port; the runs between
/// them are trips.
pub fn segment_by_ports(ds: &VoyageDataset) -> Result<TripIndex> {
    let col = ds.text(vars::PORT).ok_or_else(|| Error::MissingVariable(vars::PORT.into()))?;
    let at_sea: Vec<bool> = col.iter().map(|v| v.as_deref().is_none_or(|s| s.trim().is_empty())).collect();
    Ok(TripIndex::from_runs(ds.timestamps(), &runs_of(&at_sea), TripMethod::PortNames))
}

/// Segments with `method` and assigns trip ids.
pub fn segment(
    ds: &VoyageDataset,
    method: TripMethod,
    state_variable: &str,
    rpm_threshold: f64,
    sog_threshold: f64,
    pad_samples: usize,
) -> Result<(VoyageDataset, TripIndex, StageEntry)> {
    let mut entry = StageEntry::new("trips");
    let index = match method {
        TripMethod::StateVariable => segment_by_state(ds, state_variable)?,
        TripMethod::Thresholds => segment_by_thresholds(ds, rpm_threshold, sog_threshold, pad_samples)?,
        TripMethod::PortNames => segment_by_ports(ds)?,
    };
    entry.check(
        crate::report::CheckResult::new("trip_count", true)
            .metric("trips", index.trips.len() as f64)
            .metric("berth_legs", index.berth_legs.len() as f64),
    );
    let out = index.assign(ds);
    Ok((out, index, entry))
}
