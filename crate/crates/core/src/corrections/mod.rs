//! Draft and trim corrections, draft-ratio plausibility, hydrostatics and
//! the resistance-model interface.

mod hydro;
mod resistance;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hindcast::{steady_state_filter, SteadyFilterParams};
use crate::model::{QualityFlag, ShipParticulars, Timestamp, VariableSpec, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::stats::mean;
use crate::vars;

pub use hydro::{apply_hydrostatics, hydrostatics, HydrostaticTable, Hydrostatics};
pub use resistance::{
    load_coefficient_table, resistance_components, sample_state, ComponentKind, Input, ResistanceModel,
    SampleState, TableDrivenModel, AIR_DENSITY, GRAVITY, WATER_DENSITY,
};

pub const DRAFT_SENSORS: [&str; 2] = [vars::DRAFT_FORE, vars::DRAFT_AFT];

/// Fewest static samples accepted as an anchor.
const MIN_ANCHOR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSource {
    Manual,
    SteadyFilter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftChangeEvent {
    pub trip_id: u32,
    pub start: Timestamp,
    pub end: Timestamp,
    /// Per sensor, mean of the samples just before `start`.
    pub pre_mean: BTreeMap<String, f64>,
    /// Per sensor, mean of the samples just after `end`.
    pub post_mean: BTreeMap<String, f64>,
    pub source: EventSource,
}

impl DraftChangeEvent {
    pub fn manual(trip_id: u32, start: Timestamp, end: Timestamp) -> Self {
        Self {
            trip_id,
            start,
            end,
            pre_mean: BTreeMap::new(),
            post_mean: BTreeMap::new(),
            source: EventSource::Manual,
        }
    }
}

/// Mean of the last (or first) `n_avg` present static values on one side of
/// a trip. Static samples are the contiguous out-of-trip run adjacent to
/// the trip.
fn anchor(ds: &VoyageDataset, sensor: &str, indices: impl Iterator<Item = usize>, n_avg: usize) -> Option<f64> {
    let col = ds.real(sensor)?;
    let vals: Vec<f64> = indices
        .take_while(|&i| ds.trip_id(i).is_none())
        .filter_map(|i| col[i])
        .take(n_avg)
        .collect();
    (vals.len() >= MIN_ANCHOR).then(|| mean(&vals)).flatten()
}

/// Pre- and post-trip anchor means for a sensor.
pub fn trip_anchors(ds: &VoyageDataset, trip: u32, sensor: &str, n_avg: usize) -> (Option<f64>, Option<f64>) {
    let idx = ds.trip_indices(trip);
    let (Some(&a), Some(&b)) = (idx.first(), idx.last()) else {
        return (None, None);
    };
    (
        anchor(ds, sensor, (0..a).rev(), n_avg),
        anchor(ds, sensor, b + 1..ds.len(), n_avg),
    )
}

/// Linear interpolation from `pre` at `ts` to `post` at `te`.
fn linear_profile(t: Timestamp, ts: Timestamp, te: Timestamp, pre: f64, post: f64) -> f64 {
    if te == ts {
        return pre;
    }
    pre + (post - pre) * (t - ts) as f64 / (te - ts) as f64
}

fn ramp_fraction(t: Timestamp, start: Timestamp, end: Timestamp) -> f64 {
    if end == start {
        return if t >= end { 1.0 } else { 0.0 };
    }
    ((t - start) as f64 / (end - start) as f64).clamp(0.0, 1.0)
}

/// Ramp profile: linear drift between the anchors plus a ramp of height
/// `delta_k` across each event. The drift absorbs whatever the events do
/// not explain, so the profile still meets both anchors.
pub fn ramp_profile(
    t: Timestamp,
    ts: Timestamp,
    te: Timestamp,
    pre: f64,
    post: f64,
    events: &[(Timestamp, Timestamp, f64)],
) -> f64 {
    let total: f64 = events.iter().map(|e| e.2).sum();
    let base = linear_profile(t, ts, te, pre, post - total);
    base + events.iter().map(|&(a, b, d)| d * ramp_fraction(t, a, b)).sum::<f64>()
}

fn check_events(events: &[DraftChangeEvent], ts: Timestamp, te: Timestamp) -> Result<Vec<DraftChangeEvent>> {
    let mut ev = events.to_vec();
    ev.sort_by_key(|e| (e.start, e.end));
    for e in &ev {
        if e.start >= e.end || e.start < ts || e.end > te {
            return Err(Error::InvalidInput(format!(
                "draft change event [{}, {}] is not a proper interval inside the trip [{ts}, {te}]",
                e.start, e.end
            )));
        }
    }
    if let Some(w) = ev.windows(2).find(|w| w[1].start < w[0].end) {
        return Err(Error::OverlappingEvents(w[0].start, w[0].end, w[1].start, w[1].end));
    }
    Ok(ev)
}

/// Mean of up to `n_avg` present in-trip values strictly before `t` (or
/// strictly after, when `after`).
fn side_mean(ds: &VoyageDataset, idx: &[usize], sensor: &str, t: Timestamp, after: bool, n_avg: usize) -> Option<f64> {
    let col = ds.real(sensor)?;
    let ts = ds.timestamps();
    let vals: Vec<f64> = if after {
        idx.iter().filter(|&&i| ts[i] > t).filter_map(|&i| col[i]).take(n_avg).collect()
    } else {
        idx.iter().rev().filter(|&&i| ts[i] < t).filter_map(|&i| col[i]).take(n_avg).collect()
    };
    mean(&vals)
}

fn correct_trip(
    ds: &VoyageDataset,
    out: &mut VoyageDataset,
    entry: &mut StageEntry,
    trip: u32,
    events: &[DraftChangeEvent],
    n_avg: usize,
) -> Result<()> {
    let idx = ds.trip_indices(trip);
    let (Some(&a), Some(&b)) = (idx.first(), idx.last()) else {
        return Ok(());
    };
    let times = ds.timestamps();
    let (ts, te) = (times[a], times[b]);
    let events = check_events(events, ts, te)?;
    for sensor in DRAFT_SENSORS {
        let Some(col) = out.real(sensor).map(<[_]>::to_vec) else { continue };
        let (pre, post) = trip_anchors(ds, trip, sensor, n_avg);
        let (pre, post) = match (pre, post) {
            (Some(p), Some(q)) => (p, q),
            (Some(p), None) | (None, Some(p)) => {
                entry.warn(format!("trip {trip}: {sensor} has a static anchor on one side only; extended as constant"));
                (p, p)
            }
            (None, None) => {
                entry.warn(format!("trip {trip}: {sensor} has no static anchors; not corrected"));
                continue;
            }
        };
        let mut steps = Vec::new();
        for e in &events {
            let pre_e = e.pre_mean.get(sensor).copied().or_else(|| side_mean(ds, &idx, sensor, e.start, false, n_avg));
            let post_e = e.post_mean.get(sensor).copied().or_else(|| side_mean(ds, &idx, sensor, e.end, true, n_avg));
            match (pre_e, post_e) {
                (Some(p), Some(q)) => steps.push((e.start, e.end, q - p)),
                _ => entry.warn(format!("trip {trip}: event [{}, {}] lacks {sensor} samples on one side; ignored", e.start, e.end)),
            }
        }
        let mut new = col.clone();
        for &i in &idx {
            let v = ramp_profile(times[i], ts, te, pre, post, &steps);
            new[i] = Some(v);
            out.flag(i, QualityFlag::DraftCorrected);
        }
        let spec = out.spec(sensor).cloned().expect("draft declared");
        out.put_real(spec, new);
        entry.correction(format!(
            "trip {trip}: {sensor} corrected ({} events) from {pre:.3} to {post:.3}",
            steps.len()
        ));
    }
    for &i in &idx {
        if out.has_flag(i, QualityFlag::DraftCorrected) && !ds.has_flag(i, QualityFlag::DraftCorrected) {
            entry.count_flag(QualityFlag::DraftCorrected);
            entry.detail(Some(times[i]), "draft", None, None, QualityFlag::DraftCorrected.as_str());
        }
    }
    Ok(())
}

fn preserve_raw(ds: &VoyageDataset, out: &mut VoyageDataset) {
    for sensor in DRAFT_SENSORS {
        let raw = vars::raw(sensor);
        if let (Some(col), false) = (ds.real(sensor), ds.has_variable(&raw)) {
            out.put_real(VariableSpec::linear(raw, "m"), col.to_vec());
        }
    }
}

/// Replaces in-trip drafts of `trip` by the linear trend between the pre-
/// and post-trip static means.
pub fn fix_draft_simple(ds: &VoyageDataset, trip: u32, n_avg: usize) -> Result<(VoyageDataset, StageEntry)> {
    fix_draft_ramp(ds, trip, &[], n_avg)
}

/// Like [`fix_draft_simple`] but with a ramp across each draft change
/// event; each ramp height is the difference of the in-trip means over
/// `n_avg` samples after and before the event.
pub fn fix_draft_ramp(
    ds: &VoyageDataset,
    trip: u32,
    events: &[DraftChangeEvent],
    n_avg: usize,
) -> Result<(VoyageDataset, StageEntry)> {
    if n_avg == 0 {
        return Err(Error::InvalidParameter("n_avg must be at least 1".into()));
    }
    let mut entry = StageEntry::new("draft");
    let mut out = ds.clone();
    preserve_raw(ds, &mut out);
    correct_trip(ds, &mut out, &mut entry, trip, events, n_avg)?;
    Ok((out, entry))
}

/// Finds draft change operations in a trip as unsteady runs of the
/// two-stage filter on each draft sensor. Runs shorter than half a window
/// are discarded; runs from both sensors that overlap merge.
pub fn detect_draft_events(ds: &VoyageDataset, trip: u32, params: &SteadyFilterParams) -> Vec<DraftChangeEvent> {
    let idx = ds.trip_indices(trip);
    let ts = ds.timestamps();
    let times: Vec<Timestamp> = idx.iter().map(|&i| ts[i]).collect();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for sensor in DRAFT_SENSORS {
        let Some(col) = ds.real(sensor) else { continue };
        let vals: Vec<Option<f64>> = idx.iter().map(|&i| col[i]).collect();
        let marks = steady_state_filter(&times, &vals, params).unsteady;
        let mut k = 0;
        while k < marks.len() {
            if marks[k] {
                let a = k;
                while k + 1 < marks.len() && marks[k + 1] {
                    k += 1;
                }
                if k + 1 - a >= params.window / 2 {
                    // Bracket the run by one sample on each side.
                    spans.push((a.saturating_sub(1), (k + 1).min(marks.len() - 1)));
                }
            }
            k += 1;
        }
    }
    spans.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in spans {
        match merged.last_mut() {
            Some(m) if a <= m.1 => m.1 = m.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
        .into_iter()
        .map(|(a, b)| DraftChangeEvent {
            trip_id: trip,
            start: times[a],
            end: times[b],
            pre_mean: BTreeMap::new(),
            post_mean: BTreeMap::new(),
            source: EventSource::SteadyFilter,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoyageKind {
    Ballast,
    Laden,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DraftVerdict {
    Pass,
    Suspect,
    /// Deviates excessively; the candidate is reference ratio × design draft.
    Replace { candidate: f64 },
}

/// Half-width of the band around the reference ratio that passes.
pub const RATIO_PASS_BAND: f64 = 0.15;
/// Beyond this half-width the draft is a replacement candidate.
pub const RATIO_REPLACE_BAND: f64 = 0.3;

/// Reference draft ratios for a voyage kind. Types without a ballast value
/// use their single value.
pub fn reference_ratios(particulars: &ShipParticulars, kind: VoyageKind) -> Vec<f64> {
    let row = particulars.ship_type.draft_ratio_row();
    let ballast = row.ballast.unwrap_or(row.laden);
    match kind {
        VoyageKind::Ballast => vec![ballast],
        VoyageKind::Laden => vec![row.laden],
        VoyageKind::Unknown => vec![ballast, row.laden],
    }
}

/// Compares T_c / T_d with the reference ratio. For an unknown voyage kind
/// the closer of the ballast and laden references is used.
pub fn check_draft_ratio(mean_draft: f64, particulars: &ShipParticulars, kind: VoyageKind) -> DraftVerdict {
    let ratio = mean_draft / particulars.design_draft;
    let reference = reference_ratios(particulars, kind)
        .into_iter()
        .min_by(|a, b| (ratio - a).abs().total_cmp(&(ratio - b).abs()))
        .expect("at least one reference");
    // Small slack so printed values on the band edge pass.
    let dev = (ratio - reference).abs() - 1e-12;
    if dev <= RATIO_PASS_BAND {
        DraftVerdict::Pass
    } else if dev <= RATIO_REPLACE_BAND {
        DraftVerdict::Suspect
    } else {
        DraftVerdict::Replace {
            candidate: reference * particulars.design_draft,
        }
    }
}

/// Runs the ratio check on each trip's mean draft. When `replace` is set,
/// excessive deviations shift both sensors so the mean equals the
/// candidate.
pub fn check_draft_ratios(
    ds: &VoyageDataset,
    particulars: &ShipParticulars,
    kind: VoyageKind,
    replace: bool,
) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("draft_ratio");
    let mut out = ds.clone();
    let (Some(fore), Some(aft)) = (ds.real(vars::DRAFT_FORE), ds.real(vars::DRAFT_AFT)) else {
        entry.warn("draft ratio check skipped: draft sensors absent");
        return (out, entry);
    };
    let (mut nf, mut na) = (fore.to_vec(), aft.to_vec());
    let mut replaced = false;
    for trip in ds.trips() {
        let idx = ds.trip_indices(trip);
        let means: Vec<f64> = idx.iter().filter_map(|&i| Some(0.5 * (fore[i]? + aft[i]?))).collect();
        let Some(m) = mean(&means) else { continue };
        let verdict = check_draft_ratio(m, particulars, kind);
        let mut check = CheckResult::new(format!("draft_ratio.trip{trip}"), verdict == DraftVerdict::Pass)
            .metric("ratio", m / particulars.design_draft);
        if let DraftVerdict::Replace { candidate } = verdict {
            check = check.metric("candidate_draft", candidate);
            if replace {
                let shift = candidate - m;
                for &i in &idx {
                    nf[i] = fore[i].map(|x| x + shift);
                    na[i] = aft[i].map(|x| x + shift);
                    if out.flag(i, QualityFlag::DraftCorrected) {
                        entry.count_flag(QualityFlag::DraftCorrected);
                        entry.detail(Some(ds.timestamps()[i]), "draft", Some(candidate), Some(m), "ratio_replaced");
                    }
                }
                replaced = true;
                entry.correction(format!("trip {trip}: mean draft {m:.3} replaced by {candidate:.3}"));
            }
        }
        entry.check(check.message(format!("{verdict:?}")));
    }
    if replaced {
        preserve_raw(ds, &mut out);
        for (sensor, col) in [(vars::DRAFT_FORE, nf), (vars::DRAFT_AFT, na)] {
            let spec = out.spec(sensor).cloned().expect("draft declared");
            out.put_real(spec, col);
        }
    }
    (out, entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sample;
    use crate::tables::ShipType;

    trait Trip {
        fn trip(self, id: u32) -> Self;
    }

    impl Trip for Sample {
        fn trip(mut self, id: u32) -> Self {
            self.trip_id = Some(id);
            self
        }
    }

    /// 5 static samples, `trip_len` in-trip samples, 5 static samples.
    fn voyage(pre: f64, post: f64, in_trip: impl Fn(usize) -> f64, trip_len: usize) -> VoyageDataset {
        let mut rows = Vec::new();
        let n = 10 + trip_len;
        for k in 0..n {
            let v = if k < 5 {
                pre
            } else if k >= 5 + trip_len {
                post
            } else {
                in_trip(k - 5)
            };
            let mut s = Sample::new(k as i64 * 900).with("draft_fore", v).with("draft_aft", v);
            if (5..5 + trip_len).contains(&k) {
                s.trip_id = Some(1);
            }
            rows.push(s);
        }
        VoyageDataset::new(vars::default_schema(), rows).unwrap()
    }

    #[test]
    fn simple_midpoint() {
        let ds = voyage(8.0, 7.6, |_| 7.2, 21);
        let (out, entry) = fix_draft_simple(&ds, 1, 10).unwrap();
        assert!((out.value(15, "draft_fore").unwrap() - 7.8).abs() < 1e-12);
        assert_eq!(out.value(15, "raw_draft_fore"), Some(7.2));
        assert!(out.has_flag(15, QualityFlag::DraftCorrected));
        assert!(!out.has_flag(2, QualityFlag::DraftCorrected));
        assert_eq!(entry.flags_total(QualityFlag::DraftCorrected), 21);
    }

    #[test]
    fn simple_constant() {
        let ds = voyage(9.0, 9.0, |k| 8.0 + 0.01 * k as f64, 10);
        let (out, _) = fix_draft_simple(&ds, 1, 10).unwrap();
        assert!((5..15).all(|i| out.value(i, "draft_aft") == Some(9.0)));
    }

    #[test]
    fn one_sided_anchor_falls_back() {
        let mut ds = voyage(8.0, 7.0, |_| 7.5, 10);
        let mut post = ds.real("draft_fore").unwrap().to_vec();
        for v in post.iter_mut().skip(15) {
            *v = None;
        }
        ds.put_real(VariableSpec::linear("draft_fore", "m"), post);
        let (out, entry) = fix_draft_simple(&ds, 1, 10).unwrap();
        assert_eq!(out.value(10, "draft_fore"), Some(8.0));
        assert!(!entry.warnings.is_empty());
    }

    fn ramp_voyage() -> VoyageDataset {
        // In-trip readings 0.3 m low; 2.0 m drop ramping over samples 20..30.
        voyage(8.0, 6.0, |k| {
            let truth = 8.0 - 2.0 * ((k as f64 - 20.0) / 10.0).clamp(0.0, 1.0);
            truth - 0.3
        }, 51)
    }

    #[test]
    fn ramp_midpoint() {
        let ds = ramp_voyage();
        let t = ds.timestamps();
        let ev = DraftChangeEvent::manual(1, t[25], t[35]);
        let (out, _) = fix_draft_ramp(&ds, 1, &[ev], 10).unwrap();
        assert!((out.value(30, "draft_fore").unwrap() - 7.0).abs() < 1e-12);
        assert!((out.value(10, "draft_fore").unwrap() - 8.0).abs() < 1e-12);
        assert!((out.value(50, "draft_fore").unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_events_is_simple() {
        let ds = ramp_voyage();
        let (a, _) = fix_draft_ramp(&ds, 1, &[], 10).unwrap();
        let (b, _) = fix_draft_simple(&ds, 1, 10).unwrap();
        assert_eq!(a.real("draft_fore"), b.real("draft_fore"));
    }

    #[test]
    fn sequential_events_compose() {
        let p = ramp_profile(100, 0, 100, 8.0, 8.2, &[(10, 20, 0.5), (50, 60, -0.3)]);
        assert!((p - 8.2).abs() < 1e-12);
        let mid = ramp_profile(30, 0, 100, 8.0, 8.2, &[(10, 20, 0.5), (50, 60, -0.3)]);
        assert!((mid - 8.5).abs() < 1e-12);
    }

    #[test]
    fn overlapping_events_rejected() {
        let ds = ramp_voyage();
        let t = ds.timestamps();
        let evs = [DraftChangeEvent::manual(1, t[10], t[20]), DraftChangeEvent::manual(1, t[15], t[25])];
        match fix_draft_ramp(&ds, 1, &evs, 10) {
            Err(Error::OverlappingEvents(a, b, c, d)) => assert_eq!((a, b, c, d), (t[10], t[20], t[15], t[25])),
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn flat_drafts_no_events() {
        let ds = voyage(8.0, 8.0, |_| 8.0, 40);
        let p = SteadyFilterParams::new(11, 0.01, 1e-6).unwrap();
        assert!(detect_draft_events(&ds, 1, &p).is_empty());
    }

    #[test]
    fn ramp_detected_as_one_event() {
        // 1 m aft-draft ramp over 2 h (8 samples at 900 s).
        let mut rows = Vec::new();
        for k in 0..60 {
            let aft = 9.0 + ((k as f64 - 25.0) / 8.0).clamp(0.0, 1.0);
            rows.push(Sample::new(k * 900).with("draft_fore", 8.0).with("draft_aft", aft).trip(1));
        }
        let ds = VoyageDataset::new(vars::default_schema(), rows).unwrap();
        let p = SteadyFilterParams::new(7, 0.01, 1e-6).unwrap();
        let ev = detect_draft_events(&ds, 1, &p);
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].start, ev[0].end), (25 * 900, 33 * 900));
    }

    #[test]
    fn trim_swap_merges() {
        let mut rows = Vec::new();
        for k in 0..60 {
            let f = ((k as f64 - 25.0) / 8.0).clamp(0.0, 1.0);
            rows.push(Sample::new(k * 900).with("draft_fore", 8.0 - 0.5 * f).with("draft_aft", 9.0 + 0.5 * f).trip(1));
        }
        let ds = VoyageDataset::new(vars::default_schema(), rows).unwrap();
        let p = SteadyFilterParams::new(7, 0.01, 1e-6).unwrap();
        assert_eq!(detect_draft_events(&ds, 1, &p).len(), 1);
    }

    fn particulars(t: ShipType, design: f64) -> ShipParticulars {
        ShipParticulars {
            ship_type: t,
            lwl: Some(200.0),
            lpp: None,
            beam: 30.0,
            design_draft: design,
            block_coefficient: 0.8,
            block_coefficient_filled: false,
            anemometer_height: None,
            wind_reference_height: None,
            calm_water_curves: vec![],
            envelope: None,
            rpm_threshold: 10.0,
            sog_threshold: 1.5,
        }
    }

    #[test]
    fn ratio_verdicts() {
        let bulk = particulars(ShipType::BulkCarrier, 10.0);
        assert_eq!(check_draft_ratio(9.1, &bulk, VoyageKind::Laden), DraftVerdict::Pass);
        let tanker = particulars(ShipType::CrudeOilCarrier, 10.0);
        assert_eq!(check_draft_ratio(6.0, &tanker, VoyageKind::Ballast), DraftVerdict::Pass);
        let boxship = particulars(ShipType::ContainerLine, 10.0);
        match check_draft_ratio(3.0, &boxship, VoyageKind::Ballast) {
            DraftVerdict::Replace { candidate } => assert!((candidate - 8.2).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        assert_eq!(check_draft_ratio(6.0, &boxship, VoyageKind::Laden), DraftVerdict::Suspect);
    }
}
