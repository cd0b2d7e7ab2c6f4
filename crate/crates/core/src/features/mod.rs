//! Great-circle geometry, ship-frame wind/wave/current components, GPS
//! heading, anemometer height correction and AIS rationality checks.
//!
//! Sign conventions: longitudinal wind is positive for head wind,
//! transverse wind positive when blowing from starboard, longitudinal
//! current positive when following. Hindcast vector components point where
//! the flow goes.

mod ais;

use crate::error::{Error, Result};
use crate::hindcast::trip_groups;
use crate::model::{normalize_angle, QualityFlag, VariableSpec, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::vars;

pub use ais::{ais_speed_consistency, ais_status_check, service_speed_range_for};
pub use crate::tables::service_speed_range;

pub const EARTH_RADIUS: f64 = 6_371_000.0;

/// Great-circle distance in metres between two points given in degrees.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64, r: f64) -> f64 {
    let (y1, y2) = (lat1.to_radians(), lat2.to_radians());
    let dy = y2 - y1;
    let dx = (lon2 - lon1).to_radians();
    let h = (dy / 2.0).sin().powi(2) + y1.cos() * y2.cos() * (dx / 2.0).sin().powi(2);
    2.0 * r * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Initial great-circle bearing from point 1 to point 2, degrees in [0, 360).
pub fn initial_bearing(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (y1, y2) = (lat1.to_radians(), lat2.to_radians());
    let dx = (lon2 - lon1).to_radians();
    let x = dx.sin() * y2.cos();
    let y = y1.cos() * y2.sin() - y1.sin() * y2.cos() * dx.cos();
    normalize_angle(x.atan2(y).to_degrees())
}

/// Wind speed corrected from anemometer height `z_a` to `z_ref` with the
/// one-ninth power law.
pub fn wind_to_reference_height(v_wt: f64, z_ref: f64, z_a: f64) -> Result<f64> {
    if !(z_ref > 0.0 && z_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heights must be positive (z_ref = {z_ref}, z_a = {z_a})"
        )));
    }
    Ok(v_wt * (z_ref / z_a).powf(1.0 / 9.0))
}

fn valid_position(ds: &VoyageDataset, i: usize) -> Option<(f64, f64)> {
    if ds.has_flag(i, QualityFlag::IrrationalPosition) {
        return None;
    }
    Some((ds.value(i, vars::LATITUDE)?, ds.value(i, vars::LONGITUDE)?))
}

/// Bearing from each sample to the next valid position in its trip, and
/// the distance from the previous one. The last sample of a trip holds the
/// previous bearing; flagged positions get nothing.
pub fn gps_heading(ds: &VoyageDataset) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let mut heading = vec![None; ds.len()];
    let mut distance = vec![None; ds.len()];
    for group in trip_groups(ds) {
        let valid: Vec<(usize, (f64, f64))> =
            group.iter().filter_map(|&i| valid_position(ds, i).map(|p| (i, p))).collect();
        let mut last = None;
        for (k, &(i, (la, lo))) in valid.iter().enumerate() {
            if k > 0 {
                let (_, (pa, po)) = valid[k - 1];
                distance[i] = Some(haversine(pa, po, la, lo, EARTH_RADIUS));
            }
            match valid.get(k + 1) {
                Some(&(_, (na, no))) => {
                    let moved = haversine(la, lo, na, no, EARTH_RADIUS) > 0.0;
                    heading[i] = moved.then(|| initial_bearing(la, lo, na, no));
                    last = heading[i].or(last);
                }
                None => heading[i] = last,
            }
        }
    }
    (heading, distance)
}

/// Which heading the ship-frame projection uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeadingSource {
    /// Measured heading, falling back to the GPS heading where missing.
    #[default]
    Measured,
    /// GPS heading only.
    Gps,
}

/// Per-sample derived features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivedFeatureSet {
    pub relative_wind_long: Vec<Option<f64>>,
    pub relative_wind_trans: Vec<Option<f64>>,
    pub relative_wave_direction: Vec<Option<f64>>,
    pub gps_heading: Vec<Option<f64>>,
    pub leg_distance: Vec<Option<f64>>,
    pub stw_estimate: Vec<Option<f64>>,
    /// Hindcast true wind along the ship axis, head wind positive.
    pub hc_long_wind: Vec<Option<f64>>,
    /// Hindcast current along the ship axis, following positive.
    pub hc_long_current: Vec<Option<f64>>,
    /// Relative wind direction implied by the hindcast, 0 = on the bow.
    pub hc_rel_wind_dir: Vec<Option<f64>>,
    /// Onboard relative wind corrected to the reference height.
    pub rel_wind_speed_ref: Vec<Option<f64>>,
    /// Onboard true longitudinal wind: relative longitudinal minus sog.
    pub ship_long_wind: Vec<Option<f64>>,
}

/// True wind (u east, v north; direction of travel) projected on a ship
/// heading: (longitudinal head-positive, transverse from-starboard-positive).
pub fn project_wind(u: f64, v: f64, heading_deg: f64) -> (f64, f64) {
    let (s, c) = heading_deg.to_radians().sin_cos();
    (-(u * s + v * c), -(u * c - v * s))
}

/// Computes the ship-frame features. `heights` is (z_ref, z_a) for the
/// anemometer correction.
pub fn resolve_ship_frame(
    ds: &VoyageDataset,
    source: HeadingSource,
    heights: Option<(f64, f64)>,
) -> Result<DerivedFeatureSet> {
    let (gps, dist) = gps_heading(ds);
    let n = ds.len();
    let col = |name: &str| ds.real(name).map(<[_]>::to_vec).unwrap_or_else(|| vec![None; n]);
    let measured = col(vars::HEADING);
    let heading: Vec<Option<f64>> = (0..n)
        .map(|i| match source {
            HeadingSource::Measured => measured[i].or(gps[i]),
            HeadingSource::Gps => gps[i],
        })
        .collect();
    let (sog, wu, wv) = (col(vars::SOG), col(vars::HC_WIND_U), col(vars::HC_WIND_V));
    let (cu, cv, wave) = (col(vars::HC_CURRENT_U), col(vars::HC_CURRENT_V), col(vars::HC_WAVE_DIR));
    let rws = col(vars::REL_WIND_SPEED);
    // Angle-fixed directions take precedence once they exist.
    let fixed_dir = vars::fixed(vars::REL_WIND_DIR);
    let rwd = if ds.has_variable(&fixed_dir) { col(&fixed_dir) } else { col(vars::REL_WIND_DIR) };
    if let Some((z_ref, z_a)) = heights {
        wind_to_reference_height(1.0, z_ref, z_a)?;
    }

    let mut f = DerivedFeatureSet {
        gps_heading: gps,
        leg_distance: dist,
        ..Default::default()
    };
    for i in 0..n {
        let psi = heading[i];
        let true_wind = psi.zip(wu[i].zip(wv[i])).map(|(h, (u, v))| project_wind(u, v, h));
        let long_true = true_wind.map(|w| w.0);
        let rel_long = long_true.zip(sog[i]).map(|(w, s)| w + s);
        let rel_trans = true_wind.map(|w| w.1);
        f.hc_long_wind.push(long_true);
        f.relative_wind_long.push(rel_long);
        f.relative_wind_trans.push(rel_trans);
        f.hc_rel_wind_dir.push(
            rel_long
                .zip(rel_trans)
                .filter(|(a, b)| a.hypot(*b) > 0.0)
                .map(|(a, b)| normalize_angle(b.atan2(a).to_degrees())),
        );
        f.relative_wave_direction.push(psi.zip(wave[i]).map(|(h, w)| normalize_angle(w - h)));
        let current = psi.zip(cu[i].zip(cv[i])).map(|(h, (u, v))| {
            let (s, c) = h.to_radians().sin_cos();
            u * s + v * c
        });
        f.hc_long_current.push(current);
        f.stw_estimate.push(sog[i].zip(current).map(|(s, c)| s - c));
        let vref = rws[i].map(|v| match heights {
            Some((z_ref, z_a)) => v * (z_ref / z_a).powf(1.0 / 9.0),
            None => v,
        });
        f.rel_wind_speed_ref.push(vref);
        f.ship_long_wind.push(
            vref.zip(rwd[i])
                .zip(sog[i])
                .map(|((v, d), s)| v * d.to_radians().cos() - s),
        );
    }
    Ok(f)
}

/// Runs [`resolve_ship_frame`] and stores every feature as a column.
pub fn derive(
    ds: &VoyageDataset,
    source: HeadingSource,
    heights: Option<(f64, f64)>,
) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("derive");
    let f = resolve_ship_frame(ds, source, heights)?;
    let mut out = ds.clone();
    let lin = |name: &str, unit: &str| VariableSpec::linear(name, unit);
    let columns = [
        (lin(vars::LEG_DISTANCE, "m"), f.leg_distance),
        (VariableSpec::angular(vars::GPS_HEADING), f.gps_heading),
        (lin(vars::REL_WIND_LONG, "m/s"), f.relative_wind_long),
        (lin(vars::REL_WIND_TRANS, "m/s"), f.relative_wind_trans),
        (VariableSpec::angular(vars::REL_WAVE_DIR), f.relative_wave_direction),
        (lin(vars::HC_LONG_WIND, "m/s"), f.hc_long_wind),
        (lin(vars::HC_LONG_CURRENT, "m/s"), f.hc_long_current),
        (lin(vars::STW_ESTIMATE, "m/s"), f.stw_estimate),
        (VariableSpec::angular(vars::HC_REL_WIND_DIR), f.hc_rel_wind_dir),
        (lin(vars::REL_WIND_SPEED_REF, "m/s"), f.rel_wind_speed_ref),
        (lin(vars::SHIP_LONG_WIND, "m/s"), f.ship_long_wind),
    ];
    let mut check = CheckResult::new("derived_coverage", true)
        .message(format!("heading source: {source:?}"));
    for (spec, values) in columns {
        let filled = values.iter().filter(|v| v.is_some()).count();
        check = check.metric(&spec.name, filled as f64);
        out.put_real(spec, values);
    }
    entry.check(check);
    if heights.is_some() {
        entry.correction("relative wind speed corrected to the reference height");
    }
    Ok((out, entry))
}
