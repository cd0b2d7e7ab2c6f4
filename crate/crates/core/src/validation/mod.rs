//! Validation checks: shaft power identity, speed-power curves and engine
//! envelope, speed-through-water, longitudinal wind and the angular
//! averaging fault.

use std::f64::consts::PI;

use crate::hindcast::trip_groups;
use crate::model::{QualityFlag, VariableSpec, VoyageDataset};
use crate::model::ShipParticulars;
use crate::report::{CheckResult, StageEntry};
use crate::stats::{angular_distance, mean, median, quantile};
use crate::vars;

/// Shaft power in W from shaft speed in rpm and torque in N·m.
pub fn shaft_power(rpm: f64, torque: f64) -> f64 {
    2.0 * PI * (rpm / 60.0) * torque
}

/// Smallest power used as the mismatch denominator (W).
const POWER_EPS: f64 = 1.0;

/// Relative disagreement between recorded power and 2πnτ.
pub fn power_mismatch(power: f64, rpm: f64, torque: f64) -> f64 {
    (power - shaft_power(rpm, torque)).abs() / power.abs().max(POWER_EPS)
}

/// Checks P = 2πnτ where all three are recorded (flagging power as
/// `invalid_range` beyond `rel_tolerance`) and derives the missing one
/// where two are recorded, as `derived_<name>`.
pub fn check_power_identity(ds: &VoyageDataset, rel_tolerance: f64) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("power_identity");
    let n = ds.len();
    let col = |name: &str| ds.real(name).map(<[_]>::to_vec).unwrap_or_else(|| vec![None; n]);
    let (rpm, tau, p) = (col(vars::SHAFT_RPM), col(vars::SHAFT_TORQUE), col(vars::SHAFT_POWER));
    let mut out = ds.clone();
    let mut derived = [vec![None; n], vec![None; n], vec![None; n]];
    let (mut checked, mut failed) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        match (rpm[i], tau[i], p[i]) {
            (Some(r), Some(t), Some(pw)) => {
                checked += 1;
                let m = power_mismatch(pw, r, t);
                worst = worst.max(m);
                if m > rel_tolerance {
                    failed += 1;
                    out.flag(i, QualityFlag::InvalidRange);
                    entry.count_flag(QualityFlag::InvalidRange);
                    entry.detail(
                        Some(ds.timestamps()[i]),
                        vars::SHAFT_POWER,
                        Some(shaft_power(r, t)),
                        Some(pw),
                        QualityFlag::InvalidRange.as_str(),
                    );
                }
            }
            (Some(r), Some(t), None) => derived[2][i] = Some(shaft_power(r, t)),
            (Some(r), None, Some(pw)) if r != 0.0 => derived[1][i] = Some(pw / (2.0 * PI * r / 60.0)),
            (None, Some(t), Some(pw)) if t != 0.0 => derived[0][i] = Some(60.0 * pw / (2.0 * PI * t)),
            _ => {}
        }
    }
    let names = [(vars::SHAFT_RPM, "rpm"), (vars::SHAFT_TORQUE, "N*m"), (vars::SHAFT_POWER, "W")];
    for ((name, unit), values) in names.iter().zip(derived) {
        let count = values.iter().filter(|v| v.is_some()).count();
        if count > 0 {
            entry.correction(format!("{count} values of {name} derived from the power identity"));
            out.put_real(VariableSpec::linear(vars::derived(name), *unit), values);
        }
    }
    entry.check(
        CheckResult::new("power_identity", failed == 0)
            .metric("checked", checked as f64)
            .metric("failed", failed as f64)
            .metric("max_mismatch", worst),
    );
    (out, entry)
}

/// Ray-casting point-in-polygon test. The polygon is closed implicitly.
pub fn point_in_polygon(x: f64, y: f64, polygon: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = polygon[i];
        let (xj, yj) = polygon[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn in_trip(ds: &VoyageDataset) -> Vec<usize> {
    trip_groups(ds).into_iter().flatten().collect()
}

/// Relative deviation of shaft power from the primary calm-water curve at
/// each in-trip sample's stw, with the median as a constant-bias estimate.
/// In-trip samples outside the (rpm, power) envelope are flagged
/// `invalid_range`.
pub fn check_speed_power(ds: &VoyageDataset, particulars: &ShipParticulars) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("speed_power");
    let mut out = ds.clone();
    let targets = in_trip(ds);
    let stw = ds.real(vars::STW);
    let power = ds.real(vars::SHAFT_POWER);
    let rpm = ds.real(vars::SHAFT_RPM);

    match (particulars.primary_curve(), stw, power) {
        (Some(curve), Some(stw), Some(power)) => {
            let mut dev = vec![None; ds.len()];
            let mut skipped = 0usize;
            for &i in &targets {
                let (Some(v), Some(p)) = (stw[i], power[i]) else { continue };
                match curve.power_at(v) {
                    Some(pc) if pc > 0.0 => dev[i] = Some((p - pc) / pc),
                    _ => skipped += 1,
                }
            }
            let d: Vec<f64> = dev.iter().flatten().copied().collect();
            let bias = median(&d).unwrap_or(0.0);
            entry.check(
                CheckResult::new("speed_power_curve", true)
                    .metric("samples", d.len() as f64)
                    .metric("skipped_outside_span", skipped as f64)
                    .metric("bias", bias)
                    .metric("p05", quantile(&d, 0.05).unwrap_or(0.0))
                    .metric("p95", quantile(&d, 0.95).unwrap_or(0.0))
                    .message(format!("curve `{}`", curve.label)),
            );
            out.put_real(VariableSpec::linear("power_deviation", ""), dev);
        }
        _ => entry.warn("speed-power curve comparison skipped: no curve, stw or shaft power"),
    }

    if let (Some(poly), Some(rpm), Some(power)) = (&particulars.envelope, rpm, power) {
        let mut outside = 0usize;
        for &i in &targets {
            let (Some(r), Some(p)) = (rpm[i], power[i]) else { continue };
            if !point_in_polygon(r, p, poly) {
                outside += 1;
                out.flag(i, QualityFlag::InvalidRange);
                entry.count_flag(QualityFlag::InvalidRange);
                entry.detail(Some(ds.timestamps()[i]), vars::SHAFT_POWER, None, Some(p), "outside_envelope");
            }
        }
        entry.check(CheckResult::new("engine_envelope", outside == 0).metric("outside", outside as f64));
    }
    (out, entry)
}

/// Median of relative power deviations; order-independent.
pub fn speed_power_bias(deviations: &[f64]) -> Option<f64> {
    median(deviations)
}

fn residual_summary(name: &str, residuals: &[f64], beyond: usize) -> CheckResult {
    let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    CheckResult::new(name, beyond == 0)
        .metric("samples", residuals.len() as f64)
        .metric("mean", mean(residuals).unwrap_or(0.0))
        .metric("median_abs", median(&abs).unwrap_or(0.0))
        .metric("max_abs", abs.iter().copied().fold(0.0, f64::max))
        .metric("beyond_tolerance", beyond as f64)
}

/// Residual stw − (sog − longitudinal current). Report only.
pub fn check_stw(ds: &VoyageDataset, tolerance: f64) -> StageEntry {
    let mut entry = StageEntry::new("stw_check");
    let n = ds.len();
    let get = |name: &str, i: usize| ds.real(name).and_then(|c| c[i]);
    let mut res = Vec::new();
    let mut beyond = 0usize;
    for i in 0..n {
        let est = get(vars::STW_ESTIMATE, i)
            .or_else(|| Some(get(vars::SOG, i)? - get(vars::HC_LONG_CURRENT, i)?));
        let (Some(stw), Some(est)) = (get(vars::STW, i), est) else { continue };
        let r = stw - est;
        res.push(r);
        if r.abs() > tolerance {
            beyond += 1;
            entry.detail(Some(ds.timestamps()[i]), vars::STW, Some(est), Some(stw), "suspect");
        }
    }
    entry.check(residual_summary("stw_vs_estimate", &res, beyond).message("report only"));
    entry
}

/// Pearson correlation; `None` with fewer than 3 pairs or zero variance.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 3 || a.len() != b.len() {
        return None;
    }
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// The angular averaging fault rule: the recorded angle is more than 90°
/// from the reference and the reference is within 45° of north (the wrap).
pub fn is_angular_fault(recorded: f64, reference: f64) -> bool {
    angular_distance(recorded, reference) > 90.0 && angular_distance(reference, 0.0) <= 45.0
}

/// Compares onboard-derived and hindcast longitudinal true wind. Report
/// only; residuals beyond tolerance that coincide with an angular fault on
/// the relative wind direction are counted as cross-reference hits.
pub fn check_longitudinal_wind(ds: &VoyageDataset, tolerance: f64) -> StageEntry {
    let mut entry = StageEntry::new("wind_check");
    let get = |name: &str, i: usize| ds.real(name).and_then(|c| c[i]);
    let (mut ship, mut hc, mut res) = (Vec::new(), Vec::new(), Vec::new());
    let (mut beyond, mut hits) = (0usize, 0usize);
    for i in 0..ds.len() {
        let (Some(s), Some(h)) = (get(vars::SHIP_LONG_WIND, i), get(vars::HC_LONG_WIND, i)) else { continue };
        ship.push(s);
        hc.push(h);
        res.push(s - h);
        if (s - h).abs() > tolerance {
            beyond += 1;
            let fault = ds.has_flag(i, QualityFlag::AngularAveragingFault)
                || get(vars::REL_WIND_DIR, i)
                    .zip(get(vars::HC_REL_WIND_DIR, i))
                    .is_some_and(|(r, f)| is_angular_fault(r, f));
            hits += usize::from(fault);
            entry.detail(Some(ds.timestamps()[i]), vars::SHIP_LONG_WIND, Some(h), Some(s), if fault { "angular_fault" } else { "suspect" });
        }
    }
    let mut check = residual_summary("longitudinal_wind", &res, beyond).metric("angular_fault_hits", hits as f64);
    if let Some(r) = correlation(&ship, &hc) {
        check = check.metric("correlation", r);
    }
    entry.check(check.message("report only"));
    entry
}

/// Flags `variable` where [`is_angular_fault`] holds against
/// `reference_variable`, and writes `fixed_<variable>` holding the
/// reference at flagged samples and the recording elsewhere.
pub fn detect_angular_fault(
    ds: &VoyageDataset,
    variable: &str,
    reference_variable: &str,
) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("angular_fault");
    let (Some(rec), Some(reference)) = (ds.real(variable), ds.real(reference_variable)) else {
        entry.warn(format!("angular fault detector skipped: `{variable}` or reference `{reference_variable}` absent"));
        entry.skipped = Some("no reference".into());
        return (ds.clone(), entry);
    };
    if reference.iter().all(Option::is_none) {
        entry.warn(format!("angular fault detector skipped: reference `{reference_variable}` empty"));
        entry.skipped = Some("no reference".into());
        return (ds.clone(), entry);
    }
    let mut out = ds.clone();
    let mut fixed = rec.to_vec();
    let mut n = 0usize;
    for i in 0..ds.len() {
        let (Some(r), Some(f)) = (rec[i], reference[i]) else { continue };
        if is_angular_fault(r, f) {
            n += 1;
            fixed[i] = Some(f);
            out.flag(i, QualityFlag::AngularAveragingFault);
            entry.count_flag(QualityFlag::AngularAveragingFault);
            entry.detail(Some(ds.timestamps()[i]), variable, Some(f), Some(r), QualityFlag::AngularAveragingFault.as_str());
        }
    }
    out.put_real(VariableSpec::angular(vars::fixed(variable)), fixed);
    if n > 0 {
        entry.correction(format!("{n} values of {variable} replaced by {reference_variable} in {}", vars::fixed(variable)));
    }
    entry.check(CheckResult::new(format!("angular_fault.{variable}"), n == 0).metric("flagged", n as f64));
    (out, entry)
}
