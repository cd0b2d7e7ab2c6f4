//! GPS track cleaning and interpolation of hindcast fields to the ship.

mod interp;
mod steady;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{DirectionConvention, HindcastGrid};
use crate::model::{normalize_angle, QualityFlag, VariableSpec, VoyageDataset};
use crate::report::{apply_flags, CheckResult, FlagEvent, StageEntry};
use crate::stats::{angular_distance, quantile};
use crate::vars;

pub use interp::{interpolate_point, lagrange_weights, spatial_value, Cell, MaskPolicy, Miss};
pub use steady::{median_step, steady_state_filter, unwrap_longitudes, ScaleEstimate, SteadyFilterParams, SteadyOutcome};

/// Default GPS rate limit in degrees per second (about 55 m/s of latitude),
/// far above any ship speed and far below a position jump.
pub const GPS_RATE_TOLERANCE: f64 = 5e-4;

/// Index groups the per-trip stages work on: each trip, or the whole
/// series when no trips are assigned.
pub(crate) fn trip_groups(ds: &VoyageDataset) -> Vec<Vec<usize>> {
    let trips = ds.trips();
    if trips.is_empty() {
        vec![(0..ds.len()).collect()]
    } else {
        trips.into_iter().map(|t| ds.trip_indices(t)).collect()
    }
}

/// Indices of samples that should receive hindcast values.
fn interpolation_targets(ds: &VoyageDataset) -> Vec<usize> {
    let any_trip = ds.trip_ids().iter().any(Option::is_some);
    (0..ds.len()).filter(|&i| !any_trip || ds.trip_id(i).is_some()).collect()
}

/// Flags samples whose latitude or longitude is unsteady under the
/// two-stage filter. Coordinates are left untouched.
pub fn clean_gps(
    ds: &VoyageDataset,
    lat_params: &SteadyFilterParams,
    lon_params: &SteadyFilterParams,
) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("gps_clean");
    let lat = ds.real(vars::LATITUDE).ok_or_else(|| Error::MissingVariable(vars::LATITUDE.into()))?;
    let lon = ds.real(vars::LONGITUDE).ok_or_else(|| Error::MissingVariable(vars::LONGITUDE.into()))?;
    let ts = ds.timestamps();
    let mut events = Vec::new();
    let (mut stage1, mut flagged) = (0usize, 0usize);
    for group in trip_groups(ds) {
        let times: Vec<_> = group.iter().map(|&i| ts[i]).collect();
        let la: Vec<_> = group.iter().map(|&i| lat[i]).collect();
        let lo = unwrap_longitudes(&group.iter().map(|&i| lon[i]).collect::<Vec<_>>());
        let a = steady_state_filter(&times, &la, lat_params);
        let b = steady_state_filter(&times, &lo, lon_params);
        for w in [&a.warning, &b.warning].into_iter().flatten() {
            entry.warn(w.clone());
        }
        for (k, &i) in group.iter().enumerate() {
            stage1 += usize::from(a.stage1[k] || b.stage1[k]);
            if a.unsteady[k] || b.unsteady[k] {
                flagged += 1;
                let variable = if a.unsteady[k] { vars::LATITUDE } else { vars::LONGITUDE };
                events.push(FlagEvent::new(i, QualityFlag::IrrationalPosition, variable).values(None, ds.value(i, variable)));
            }
        }
    }
    entry.check(
        CheckResult::new("gps_steady_filter", flagged == 0)
            .metric("stage1_rejected", stage1 as f64)
            .metric("flagged", flagged as f64),
    );
    let out = apply_flags(ds, &events, &mut entry);
    Ok((out, entry))
}

fn output_name(grid_name: &str) -> String {
    if grid_name.starts_with(vars::HC_PREFIX) {
        grid_name.to_string()
    } else {
        format!("{}{grid_name}", vars::HC_PREFIX)
    }
}

/// Interpolates every grid variable to the in-trip samples (all samples
/// when no trips are assigned) and stores it as `hc_<name>`.
///
/// Outputs are normalized so vector components point where the flow goes
/// and directions give where it comes from.
pub fn interpolate(
    grid: &HindcastGrid,
    ds: &VoyageDataset,
    order: usize,
    policy: MaskPolicy,
) -> Result<(VoyageDataset, StageEntry)> {
    if order < 1 {
        return Err(Error::InvalidParameter("interpolation order must be at least 1".into()));
    }
    grid.validate()?;
    let mut entry = StageEntry::new("interpolate");
    let mut out = ds.clone();
    let targets = interpolation_targets(ds);
    let lat = ds.real(vars::LATITUDE);
    let lon = ds.real(vars::LONGITUDE);
    let position = |i: usize| -> Option<(f64, f64)> {
        if ds.has_flag(i, QualityFlag::IrrationalPosition) {
            return None;
        }
        Some((lat?[i]?, lon?[i]?))
    };
    let ts = ds.timestamps();

    for var in &grid.variables {
        let results: Vec<(usize, std::result::Result<f64, Option<Miss>>)> = targets
            .par_iter()
            .map(|&i| {
                let r = match position(i) {
                    None => Err(None),
                    Some((la, lo)) => interpolate_point(grid, var, la, lo, ts[i], order, policy).map_err(Some),
                };
                (i, r)
            })
            .collect();

        let angular = var.is_angular();
        let adjust = |x: f64| match (angular, var.convention) {
            (true, Some(DirectionConvention::Toward)) => normalize_angle(x + 180.0),
            (false, Some(DirectionConvention::From)) => -x,
            _ => x,
        };
        let mut column = vec![None; ds.len()];
        let mut misses: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, r) in results {
            match r {
                Ok(v) => column[i] = Some(adjust(v)),
                Err(m) => *misses.entry(m.map_or("no_position", Miss::as_str)).or_default() += 1,
            }
        }
        let name = output_name(&var.name);
        let filled = column.iter().filter(|v| v.is_some()).count();
        let mut check = CheckResult::new(format!("coverage.{name}"), misses.is_empty()).metric("filled", filled as f64);
        for (k, n) in &misses {
            check = check.metric(k, *n as f64);
        }
        entry.check(check);
        if matches!(
            (angular, var.convention),
            (true, Some(DirectionConvention::Toward)) | (false, Some(DirectionConvention::From))
        ) {
            entry.correction(format!("{name}: direction convention normalized"));
        }
        let spec = if angular {
            VariableSpec::angular(&name)
        } else {
            VariableSpec::linear(&name, &var.unit)
        };
        out.put_real(spec, column);
    }
    Ok((out, entry))
}

/// Compares order-1 and order-2 temporal interpolation per variable and
/// reports the distribution of absolute differences.
pub fn order_check(grid: &HindcastGrid, ds: &VoyageDataset, policy: MaskPolicy) -> Result<StageEntry> {
    if grid.timestamps.len() < 3 {
        return Err(Error::InvalidInput("order check needs at least 3 grid time steps".into()));
    }
    let mut entry = StageEntry::new("order_check");
    let (lat, lon) = match (ds.real(vars::LATITUDE), ds.real(vars::LONGITUDE)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingVariable(format!("{} / {}", vars::LATITUDE, vars::LONGITUDE))),
    };
    let ts = ds.timestamps();
    for var in &grid.variables {
        let diffs: Vec<f64> = (0..ds.len())
            .into_par_iter()
            .filter_map(|i| {
                let (la, lo) = (lat[i]?, lon[i]?);
                let a = interpolate_point(grid, var, la, lo, ts[i], 1, policy).ok()?;
                let b = interpolate_point(grid, var, la, lo, ts[i], 2, policy).ok()?;
                Some(if var.is_angular() { angular_distance(a, b) } else { (a - b).abs() })
            })
            .collect();
        let q = |p: f64| quantile(&diffs, p).unwrap_or(0.0);
        entry.check(
            CheckResult::new(format!("order_difference.{}", output_name(&var.name)), true)
                .metric("n", diffs.len() as f64)
                .metric("median", q(0.5))
                .metric("p95", q(0.95))
                .metric("max", diffs.iter().copied().fold(0.0, f64::max)),
        );
    }
    Ok(entry)
}
