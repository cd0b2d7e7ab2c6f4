//! Uniform time steps, resampling and trip segmentation.

mod trips;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{QualityFlag, Sample, Timestamp, VariableKind, VoyageDataset};
use crate::report::StageEntry;
use crate::stats::{circular_mean_deg, mean};

pub use trips::{
    segment, segment_by_ports, segment_by_state, segment_by_thresholds, Trip, TripIndex, TripMethod,
};

/// Puts the series on a lattice `t0 + k * interval` anchored at the first
/// timestamp.
///
/// Each sample moves to its nearest lattice point (ties go to the earlier
/// point). When two samples land on the same point the nearer one is kept;
/// the other is dropped and reported as a dropout. Gaps get empty rows
/// flagged `missing_inserted`.
pub fn regularize(ds: &VoyageDataset, interval: i64) -> Result<(VoyageDataset, StageEntry)> {
    if interval <= 0 {
        return Err(Error::InvalidParameter("interval must be positive".into()));
    }
    let mut entry = StageEntry::new("regularize");
    let Some(&t0) = ds.timestamps().first() else {
        let mut out = ds.clone();
        out.set_sampling_interval(Some(interval));
        return Ok((out, entry));
    };

    // lattice index -> (|offset|, sample index)
    let mut slots: BTreeMap<i64, (i64, usize)> = BTreeMap::new();
    for (i, &t) in ds.timestamps().iter().enumerate() {
        let d = t - t0;
        let (q, r) = (d.div_euclid(interval), d.rem_euclid(interval));
        let k = if 2 * r <= interval { q } else { q + 1 };
        let off = (t - (t0 + k * interval)).abs();
        match slots.get(&k) {
            Some(&(prev_off, _)) if prev_off <= off => {
                report_collision(ds, &mut entry, i, t0 + k * interval);
            }
            Some(&(_, prev)) => {
                report_collision(ds, &mut entry, prev, t0 + k * interval);
                slots.insert(k, (off, i));
            }
            None => {
                slots.insert(k, (off, i));
            }
        }
    }

    let last = *slots.keys().next_back().expect("non-empty");
    let mut samples = Vec::with_capacity(last as usize + 1);
    let mut inserted = 0usize;
    let mut snapped = 0usize;
    for k in 0..=last {
        let t = t0 + k * interval;
        match slots.get(&k) {
            Some(&(_, i)) => {
                let mut s = ds.sample(i);
                if s.timestamp != t {
                    entry.detail(Some(t), "timestamp", Some(t as f64), Some(s.timestamp as f64), "snapped");
                    snapped += 1;
                    s.timestamp = t;
                }
                samples.push(s);
            }
            None => {
                inserted += 1;
                entry.count_flag(QualityFlag::MissingInserted);
                entry.detail(Some(t), "timestamp", Some(t as f64), None, QualityFlag::MissingInserted.as_str());
                samples.push(Sample::new(t).with_flag(QualityFlag::MissingInserted));
            }
        }
    }
    if snapped > 0 {
        entry.correction(format!("{snapped} timestamps snapped to the {interval} s lattice"));
    }
    if inserted > 0 {
        entry.correction(format!("{inserted} empty rows inserted"));
    }
    let out = ds.rebuild(samples, Some(interval))?;
    Ok((out, entry))
}

fn report_collision(ds: &VoyageDataset, entry: &mut StageEntry, loser: usize, lattice: Timestamp) {
    let t = ds.timestamps()[loser];
    entry.count_flag(QualityFlag::Dropout);
    entry.detail(Some(t), "timestamp", Some(lattice as f64), Some(t as f64), QualityFlag::Dropout.as_str());
    entry.warn(format!("sample at {t} collides with another on lattice point {lattice}; dropped"));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// Bin means on an epoch-aligned grid; rows carry the bin start.
    DownMean,
    /// Hold the previous value for up to one source interval.
    UpHold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngularMean {
    #[default]
    Circular,
    /// Arithmetic mean of the recorded angles. Wrong across 0/360; only
    /// useful to reproduce that fault.
    Naive,
}

pub fn resample(ds: &VoyageDataset, interval: i64, mode: ResampleMode) -> Result<(VoyageDataset, StageEntry)> {
    resample_with(ds, interval, mode, AngularMean::Circular)
}

pub fn resample_with(
    ds: &VoyageDataset,
    interval: i64,
    mode: ResampleMode,
    angular: AngularMean,
) -> Result<(VoyageDataset, StageEntry)> {
    if interval <= 0 {
        return Err(Error::InvalidParameter("interval must be positive".into()));
    }
    if ds.is_empty() {
        return Err(Error::InvalidInput("cannot resample an empty dataset".into()));
    }
    match mode {
        ResampleMode::DownMean => down_mean(ds, interval, angular),
        ResampleMode::UpHold => up_hold(ds, interval),
    }
}

fn down_mean(ds: &VoyageDataset, interval: i64, angular: AngularMean) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("resample");
    let ts = ds.timestamps();
    let bin_of = |t: Timestamp| t.div_euclid(interval) * interval;
    let first = bin_of(ts[0]);
    let last = bin_of(*ts.last().expect("non-empty"));
    let mut bins: BTreeMap<Timestamp, Vec<usize>> = BTreeMap::new();
    for (i, &t) in ts.iter().enumerate() {
        bins.entry(bin_of(t)).or_default().push(i);
    }

    let mut samples = Vec::new();
    let mut t = first;
    while t <= last {
        let mut s = Sample::new(t);
        match bins.get(&t) {
            None => {
                s.flags.insert(QualityFlag::MissingInserted);
                entry.count_flag(QualityFlag::MissingInserted);
                entry.detail(Some(t), "timestamp", None, None, QualityFlag::MissingInserted.as_str());
            }
            Some(members) => {
                for spec in ds.schema() {
                    match spec.kind {
                        VariableKind::Text => {
                            let col = ds.text(&spec.name).expect("declared");
                            if let Some(v) = members.iter().rev().find_map(|&i| col[i].clone()) {
                                s.text.insert(spec.name.clone(), v);
                            }
                        }
                        kind => {
                            let col = ds.real(&spec.name).expect("declared");
                            let xs: Vec<f64> = members.iter().filter_map(|&i| col[i]).collect();
                            let m = match (kind, angular) {
                                (VariableKind::Angular, AngularMean::Circular) => circular_mean_deg(&xs),
                                _ => mean(&xs),
                            };
                            if let Some(m) = m {
                                s.values.insert(spec.name.clone(), m);
                            }
                        }
                    }
                }
                for &i in members {
                    s.flags.extend(ds.flags(i).iter().copied());
                }
                s.trip_id = members.iter().find_map(|&i| ds.trip_id(i));
            }
        }
        samples.push(s);
        t += interval;
    }
    entry.correction(format!("{} samples averaged into {} bins of {interval} s", ts.len(), samples.len()));
    Ok((ds.rebuild(samples, Some(interval))?, entry))
}

fn up_hold(ds: &VoyageDataset, interval: i64) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("resample");
    let ts = ds.timestamps();
    let source = match ds.sampling_interval() {
        Some(s) => s,
        None => {
            let mut d: Vec<i64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
            d.sort_unstable();
            *d.get(d.len() / 2).ok_or_else(|| {
                Error::InvalidInput("source interval unknown for a single-sample dataset".into())
            })?
        }
    };
    let t0 = ts[0];
    let end = *ts.last().expect("non-empty") + source - interval;
    let mut samples = Vec::new();
    let mut src = 0usize;
    let mut t = t0;
    while t <= end.max(t0) {
        while src + 1 < ts.len() && ts[src + 1] <= t {
            src += 1;
        }
        let mut s = if ts[src] == t {
            ds.sample(src)
        } else if t - ts[src] < source {
            let mut s = ds.sample(src);
            s.timestamp = t;
            s.flags.insert(QualityFlag::MissingInserted);
            entry.detail(Some(t), "timestamp", None, Some(ts[src] as f64), "held");
            s
        } else {
            Sample::new(t).with_flag(QualityFlag::MissingInserted)
        };
        if s.flags.contains(&QualityFlag::MissingInserted) && !ds.has_flag(src, QualityFlag::MissingInserted) {
            entry.count_flag(QualityFlag::MissingInserted);
        }
        if s.timestamp != t {
            s.timestamp = t;
        }
        samples.push(s);
        t += interval;
    }
    Ok((ds.rebuild(samples, Some(interval))?, entry))
}
