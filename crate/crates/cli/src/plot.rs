use std::path::{Path, PathBuf};

use shipdata_core::ingest::format_timestamp;
use shipdata_core::{vars, Error, Result, ShipParticulars, VoyageDataset};

/// Variables written to the per-trip files when present.
pub const TRIP_VARIABLES: [&str; 14] = [
    vars::LATITUDE,
    vars::LONGITUDE,
    vars::SOG,
    vars::STW,
    vars::HEADING,
    vars::SHAFT_RPM,
    vars::SHAFT_POWER,
    vars::DRAFT_FORE,
    vars::DRAFT_AFT,
    vars::REL_WIND_SPEED,
    vars::REL_WIND_DIR,
    vars::HC_LONG_WIND,
    vars::HC_LONG_CURRENT,
    vars::STW_ESTIMATE,
];

pub const SPEED_POWER: &str = "speed_power.csv";
pub const LONGITUDINAL_WIND: &str = "longitudinal_wind.csv";
pub const DRAFT_CORRECTION: &str = "draft_correction.csv";

/// Points sampled along each calm-water curve.
const CURVE_POINTS: usize = 50;

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn save(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn in_scope(ds: &VoyageDataset) -> Vec<usize> {
    let trips = ds.trips();
    (0..ds.len()).filter(|&i| trips.is_empty() || ds.trip_id(i).is_some()).collect()
}

/// Writes one file per trip plus the speed-power, longitudinal-wind and
/// draft-correction summaries. Returns the files written.
pub fn emit_plotdata(ds: &VoyageDataset, particulars: Option<&ShipParticulars>, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", dir.display())))?;
    let ts = ds.timestamps();
    let mut written = Vec::new();

    let present: Vec<&str> = TRIP_VARIABLES.iter().copied().filter(|v| ds.has_variable(v)).collect();
    for trip in ds.trips() {
        let mut rows = vec![std::iter::once("timestamp")
            .chain(present.iter().copied())
            .chain(["flags"])
            .map(String::from)
            .collect::<Vec<_>>()];
        for i in ds.trip_indices(trip) {
            let mut r = vec![format_timestamp(ts[i])];
            r.extend(present.iter().map(|v| cell(ds.value(i, v))));
            r.push(ds.flags(i).iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";"));
            rows.push(r);
        }
        let p = dir.join(format!("trip_{trip}.csv"));
        save(&p, &rows)?;
        written.push(p);
    }

    let scope = in_scope(ds);
    let mut sp = vec![vec!["series".to_string(), "speed".into(), "power".into()]];
    for &i in &scope {
        let speed = ds.value(i, vars::STW).or_else(|| ds.value(i, vars::SOG));
        if let (Some(v), Some(p)) = (speed, ds.value(i, vars::SHAFT_POWER)) {
            sp.push(vec!["measured".into(), v.to_string(), p.to_string()]);
        }
    }
    for curve in particulars.map(|p| p.calm_water_curves.as_slice()).unwrap_or_default() {
        let (Some(a), Some(b)) = (curve.points.first(), curve.points.last()) else { continue };
        for k in 0..CURVE_POINTS {
            let v = a.0 + (b.0 - a.0) * k as f64 / (CURVE_POINTS - 1) as f64;
            if let Some(p) = curve.power_at(v) {
                sp.push(vec![format!("curve:{}", curve.label), v.to_string(), p.to_string()]);
            }
        }
    }
    let p = dir.join(SPEED_POWER);
    save(&p, &sp)?;
    written.push(p);

    let mut lw = vec![vec!["timestamp".to_string(), vars::SHIP_LONG_WIND.into(), vars::HC_LONG_WIND.into()]];
    for &i in &scope {
        let (s, h) = (ds.value(i, vars::SHIP_LONG_WIND), ds.value(i, vars::HC_LONG_WIND));
        if s.is_some() || h.is_some() {
            lw.push(vec![format_timestamp(ts[i]), cell(s), cell(h)]);
        }
    }
    let p = dir.join(LONGITUDINAL_WIND);
    save(&p, &lw)?;
    written.push(p);

    let raw_f = vars::raw(vars::DRAFT_FORE);
    let raw_a = vars::raw(vars::DRAFT_AFT);
    let mut dc = vec![vec![
        "timestamp".to_string(),
        "trip".into(),
        raw_f.clone(),
        vars::DRAFT_FORE.into(),
        raw_a.clone(),
        vars::DRAFT_AFT.into(),
    ]];
    if ds.has_variable(&raw_f) || ds.has_variable(&raw_a) {
        for i in 0..ds.len() {
            dc.push(vec![
                format_timestamp(ts[i]),
                ds.trip_id(i).map(|t| t.to_string()).unwrap_or_default(),
                cell(ds.value(i, &raw_f)),
                cell(ds.value(i, vars::DRAFT_FORE)),
                cell(ds.value(i, &raw_a)),
                cell(ds.value(i, vars::DRAFT_AFT)),
            ]);
        }
    }
    let p = dir.join(DRAFT_CORRECTION);
    save(&p, &dc)?;
    written.push(p);
    Ok(written)
}
