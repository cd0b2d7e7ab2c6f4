//! Last-stage cleaning: contextual outlier rules, quasi-steady filtering of
//! the propulsion state, and PCA reconstruction-error outliers.

mod pca;

use crate::hindcast::{steady_state_filter, trip_groups, ScaleEstimate, SteadyFilterParams};
use crate::model::{QualityFlag, VariableKind, VariableRole, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::stats::mad_scale;
use crate::vars;

pub use pca::{pca_fit, pca_score, PcaDetector, Scaling, VARIANCE_TARGET};

#[derive(Debug, Clone, PartialEq)]
pub struct ContextualParams {
    /// Minimum run of identical values flagged as repeated.
    pub repeat_run: usize,
    /// Runs of dead values shorter than this are dropouts.
    pub dropout_max: usize,
    /// Spike threshold in robust scales.
    pub spike_scale: f64,
    /// Variables to check; `None` selects every numeric variable with a
    /// measurement role.
    pub variables: Option<Vec<String>>,
}

impl Default for ContextualParams {
    fn default() -> Self {
        Self {
            repeat_run: 20,
            dropout_max: 3,
            spike_scale: 6.0,
            variables: None,
        }
    }
}

fn default_variables(ds: &VoyageDataset) -> Vec<String> {
    ds.schema()
        .iter()
        .filter(|s| s.kind != VariableKind::Text)
        .filter(|s| s.role.is_bare_minimum() || s.role == VariableRole::Navigation)
        .map(|s| s.name.clone())
        .collect()
}

/// Sample indices the rules run over, split into contiguous series.
fn series(ds: &VoyageDataset, name: &str, group: &[usize]) -> Vec<(usize, f64)> {
    let col = ds.real(name).expect("checked");
    group.iter().filter_map(|&i| col[i].map(|v| (i, v))).collect()
}

fn repeated_runs(vals: &[(usize, f64)], run: usize, dead: f64, all: &[f64]) -> Vec<usize> {
    let mut hits = Vec::new();
    let mut a = 0;
    while a < vals.len() {
        let mut b = a;
        while b + 1 < vals.len() && vals[b + 1].1 == vals[a].1 {
            b += 1;
        }
        let len = b + 1 - a;
        if len >= run && vals[a].1 != dead {
            // Only a stuck sensor if the variable moves elsewhere.
            let v = vals[a].1;
            if all.iter().any(|&x| x != v) {
                hits.extend(vals[a..=b].iter().map(|p| p.0));
            }
        }
        a = b + 1;
    }
    hits
}

fn dropouts(vals: &[(usize, f64)], max_len: usize, dead: f64) -> Vec<usize> {
    let mut hits = Vec::new();
    let mut a = 1;
    while a + 1 < vals.len() {
        if vals[a].1 != dead || vals[a - 1].1 == dead {
            a += 1;
            continue;
        }
        let mut b = a;
        while b + 1 < vals.len() && vals[b + 1].1 == dead {
            b += 1;
        }
        if b + 1 < vals.len() && b + 1 - a < max_len {
            hits.extend(vals[a..=b].iter().map(|p| p.0));
        }
        a = b + 1;
    }
    hits
}

fn spikes(vals: &[(usize, f64)], scale: f64, angular: bool) -> Vec<usize> {
    let diff = |a: f64, b: f64| if angular { (b - a + 180.0).rem_euclid(360.0) - 180.0 } else { b - a };
    let d: Vec<f64> = vals.windows(2).map(|w| diff(w[0].1, w[1].1)).collect();
    let Some(sigma) = mad_scale(&d) else { return vec![] };
    let th = scale * sigma;
    (1..d.len())
        .filter(|&k| d[k - 1].abs() > th && d[k].abs() > th && d[k - 1].signum() != d[k].signum())
        .map(|k| vals[k].0)
        .collect()
}

/// Flags contextual outliers: invalid_range, repeated_value, dropout and
/// spike. Rules run on in-trip samples (all samples without trips).
pub fn contextual_filter(ds: &VoyageDataset, params: &ContextualParams) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("contextual");
    let mut out = ds.clone();
    let names = params.variables.clone().unwrap_or_else(|| default_variables(ds));
    let groups = trip_groups(ds);
    let ts = ds.timestamps();
    let mut counts = [0usize; 4];
    for name in &names {
        let Some(spec) = ds.spec(name).filter(|s| s.kind != VariableKind::Text).cloned() else {
            entry.warn(format!("contextual filter: variable {name} absent or not numeric"));
            continue;
        };
        let dead = spec.dead_value.unwrap_or(0.0);
        let angular = spec.kind == VariableKind::Angular;
        let all: Vec<f64> = ds.real(name).expect("numeric").iter().flatten().copied().collect();
        for g in &groups {
            let vals = series(ds, name, g);
            let mut hits: Vec<(usize, QualityFlag, usize)> = Vec::new();
            hits.extend(vals.iter().filter(|p| !spec.in_range(p.1)).map(|p| (p.0, QualityFlag::InvalidRange, 0)));
            if spec.role != VariableRole::LoadingCondition {
                hits.extend(repeated_runs(&vals, params.repeat_run, dead, &all).into_iter().map(|i| (i, QualityFlag::RepeatedValue, 1)));
            }
            hits.extend(dropouts(&vals, params.dropout_max, dead).into_iter().map(|i| (i, QualityFlag::Dropout, 2)));
            hits.extend(spikes(&vals, params.spike_scale, angular).into_iter().map(|i| (i, QualityFlag::Spike, 3)));
            for (i, flag, k) in hits {
                counts[k] += 1;
                if out.flag(i, flag) {
                    entry.count_flag(flag);
                }
                entry.detail(Some(ts[i]), name, None, ds.value(i, name), flag.as_str());
            }
        }
    }
    let check = CheckResult::new("contextual", counts.iter().all(|&c| c == 0))
        .metric("invalid_range", counts[0] as f64)
        .metric("repeated_value", counts[1] as f64)
        .metric("dropout", counts[2] as f64)
        .metric("spike", counts[3] as f64);
    entry.check(check);
    (out, entry)
}

/// The relaxed setting for the speed pass: one robust noise scale for the
/// series and no rate tolerance, so a sudden fall to or recovery from a
/// dead state stands out against quiet data.
pub fn relaxed(params: &SteadyFilterParams) -> SteadyFilterParams {
    SteadyFilterParams {
        gradient_tolerance: 0.0,
        scale: ScaleEstimate::SeriesRobust,
        alpha: params.alpha / 10.0,
        ..*params
    }
}

/// Flags unsteady propulsion states: the steady-state filter on shaft rpm
/// (sog when rpm is absent), plus a relaxed pass on sog; the union is
/// flagged `unsteady`.
pub fn quasi_steady_filter(
    ds: &VoyageDataset,
    rpm_params: &SteadyFilterParams,
    sog_params: &SteadyFilterParams,
) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("quasi_steady");
    let mut out = ds.clone();
    let rpm_present = ds.present_count(vars::SHAFT_RPM) > 0;
    let mut passes: Vec<(&str, &SteadyFilterParams)> = Vec::new();
    if rpm_present {
        passes.push((vars::SHAFT_RPM, rpm_params));
    } else {
        entry.warn("shaft rpm absent; quasi-steady filter runs on sog only");
    }
    if ds.present_count(vars::SOG) > 0 {
        passes.push((vars::SOG, sog_params));
    }
    let ts = ds.timestamps();
    let mut per_var = Vec::new();
    for (name, params) in passes {
        let col = ds.real(name).expect("present");
        let mut n = 0usize;
        for g in trip_groups(ds) {
            let times: Vec<_> = g.iter().map(|&i| ts[i]).collect();
            let vals: Vec<_> = g.iter().map(|&i| col[i]).collect();
            let res = steady_state_filter(&times, &vals, params);
            if let Some(w) = res.warning {
                entry.warn(format!("{name}: {w}"));
            }
            for (k, &u) in res.unsteady.iter().enumerate() {
                if u {
                    n += 1;
                    let i = g[k];
                    if out.flag(i, QualityFlag::Unsteady) {
                        entry.count_flag(QualityFlag::Unsteady);
                        entry.detail(Some(ts[i]), name, None, col[i], QualityFlag::Unsteady.as_str());
                    }
                }
            }
        }
        per_var.push((name, n));
    }
    let total = out.flag_count(QualityFlag::Unsteady) - ds.flag_count(QualityFlag::Unsteady);
    let mut check = CheckResult::new("quasi_steady", total == 0).metric("flagged", total as f64);
    for (name, n) in per_var {
        check = check.metric(name, n as f64);
    }
    entry.check(check);
    (out, entry)
}
