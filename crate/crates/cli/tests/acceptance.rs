//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Tolerances are the constants below.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use shipdata_core::cleaning::{PcaDetector, Scaling};
use shipdata_core::corrections::{fix_draft_ramp, fix_draft_simple, DraftChangeEvent};
use shipdata_core::features::{ais_speed_consistency, haversine, wind_to_reference_height, EARTH_RADIUS};
use shipdata_core::hindcast::{interpolate_point, steady_state_filter, MaskPolicy, SteadyFilterParams};
use shipdata_core::ingest::parse_hindcast;
use shipdata_core::tables::{WsaFormula, BLOCK_COEFFICIENT, DRAFT_RATIO, KNOT, SERVICE_SPEED_KNOTS};
use shipdata_core::validation::{detect_angular_fault, shaft_power};
use shipdata_core::{vars, QualityFlag, Sample, ShipType, VoyageDataset};

// Criterion 1: values printed by tests/oracles/closed_form.py.
const ORACLE_QUARTER_CIRCLE: f64 = 10_007_543.3980;
const ORACLE_WIND_10_10_30: f64 = 8.850882;
const ORACLE_POWER: f64 = 12_566.3706;
const ORACLE_WSA_TANKER: f64 = 14_218.0500;
const ORACLE_WSA_CONTAINER: f64 = 14_289.8583;
const ORACLE_WSA_GENERAL: f64 = 13_890.4583;
const TOL_HAVERSINE_M: f64 = 1.0;
const TOL_WIND: f64 = 0.001;
const TOL_POWER_W: f64 = 0.1;
const TOL_WSA_M2: f64 = 0.5;

const TOL_AFFINE_REL: f64 = 1e-9;
const AFFINE_POINTS: usize = 1000;

const STEADY_SEEDS: u64 = 100;
const STEADY_WINDOW: usize = 21;
const STEADY_ALPHA: f64 = 0.01;
const STEADY_RATE_TOLERANCE: f64 = 1e-9;
const MIN_RAMP_FLAGGED: f64 = 0.90;
const MAX_PLATEAU_FLAGGED: f64 = 0.02;

const MIN_FAULT_FLAGGED: f64 = 0.95;

const TOL_DRAFT_M: f64 = 1e-9;

const PCA_SEEDS: u64 = 20;
const PCA_QUANTILE: f64 = 0.995;
const MIN_PCA_RECALL: f64 = 0.90;
const MAX_PCA_FPR: f64 = 0.015;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dataset(rows: Vec<Sample>) -> VoyageDataset {
    VoyageDataset::new(vars::default_schema(), rows).expect("fixture dataset")
}

fn closed_form() -> Outcome {
    let checks = [
        ("haversine quarter circle", haversine(0.0, 0.0, 0.0, 90.0, EARTH_RADIUS), 10_007_543.0, ORACLE_QUARTER_CIRCLE, TOL_HAVERSINE_M),
        ("wind 10/10/30", wind_to_reference_height(10.0, 10.0, 30.0).unwrap(), 8.851, ORACLE_WIND_10_10_30, TOL_WIND),
        ("power 2 rev/s 1000 N*m", shaft_power(120.0, 1000.0), 12_566.4, ORACLE_POWER, TOL_POWER_W),
        (
            "wsa tanker",
            ShipType::CrudeOilCarrier.wsa_formula().wetted_surface(100_000.0, 15.0, 270.0),
            14_218.0,
            ORACLE_WSA_TANKER,
            TOL_WSA_M2,
        ),
        (
            "wsa container",
            ShipType::ContainerLine.wsa_formula().wetted_surface(100_000.0, 15.0, 270.0),
            14_289.8,
            ORACLE_WSA_CONTAINER,
            TOL_WSA_M2,
        ),
        ("wsa general", WsaFormula::General.wetted_surface(100_000.0, 15.0, 270.0), ORACLE_WSA_GENERAL, ORACLE_WSA_GENERAL, TOL_WSA_M2),
    ];
    let mut bad = Vec::new();
    for (name, got, expected, oracle, tol) in checks {
        if (got - expected).abs() > tol || (got - oracle).abs() > tol {
            bad.push(format!("{name}: {got} vs {expected} (oracle {oracle})"));
        }
    }
    // Large-T limit of the general formula: WSA*T/V -> 1.025.
    let limit = WsaFormula::General.wetted_surface(1e12, 1e-3, 1.0) * 1e-3 / 1e12;
    if (limit - 1.025).abs() > 1e-6 {
        bad.push(format!("general limit {limit}"));
    }
    outcome(bad.is_empty(), if bad.is_empty() { "7 values within tolerance".into() } else { bad.join("; ") })
}

/// Printed rows, transcribed from the reference tables. Speeds are in knots
/// as printed; the library lookup returns m/s and is converted back with the
/// exact knot (1852/3600 m/s) and rounded to 1e-9 before formatting.
fn tables() -> Outcome {
    let speeds = [
        ("Crude oil carrier", "13-17"),
        ("Gas tanker/LNG carrier", "16-20"),
        ("Product", "13-16"),
        ("Chemical", "15-18"),
        ("Ore carrier", "14-15"),
        ("Regular", "12-15"),
        ("Line carrier", "20-23"),
        ("Feeder", "18-21"),
        ("General cargo", "14-20"),
        ("Coaster", "13-16"),
        ("Ro-Ro/Ro-Pax", "18-23"),
        ("Cruise ship", "20-23"),
        ("Ferry", "16-23"),
    ];
    let block = [
        ("Crude oil carrier", "0.78-0.83"),
        ("Gas tanker/LNG carrier", "0.65-0.75"),
        ("Product", "0.75-0.80"),
        ("Chemical", "0.70-0.78"),
        ("Ore carrier", "0.80-0.85"),
        ("Regular", "0.75-0.85"),
        ("Line carrier", "0.62-0.72"),
        ("Feeder", "0.60-0.70"),
        ("General cargo/Coaster", "0.70-0.85"),
        ("Ro-Ro cargo", "0.55-0.70"),
        ("Ro-pax", "0.50-0.70"),
        ("Cruise ship", "0.60-0.70"),
        ("Ferry", "0.50-0.70"),
    ];
    let ratios = [
        ("Liquefied gas tanker", "0.67 | 0.89"),
        ("Chemical tanker", "0.66 | 0.88"),
        ("Oil tanker", "0.60 | 0.89"),
        ("Bulk carrier", "0.58 | 0.91"),
        ("General cargo", "0.65 | 0.89"),
        ("Container", "0.82"),
        ("Ro-Ro", "0.87"),
        ("Cruise", "0.98"),
        ("Ferry pax", "0.90"),
        ("Ferry ro-pax", "0.93"),
    ];
    let knots = |v: f64| ((v / KNOT) * 1e9).round() / 1e9;
    let mut bad = Vec::new();
    let mut rows = 0;
    if SERVICE_SPEED_KNOTS.len() != speeds.len() || BLOCK_COEFFICIENT.len() != block.len() || DRAFT_RATIO.len() != ratios.len() {
        bad.push("row count differs".to_string());
    }
    for (row, (label, printed)) in SERVICE_SPEED_KNOTS.iter().zip(speeds) {
        rows += 1;
        let direct = format!("{}-{}", row.min, row.max);
        let via_lookup: Vec<String> = row
            .types
            .iter()
            .map(|t| {
                let (lo, hi) = t.service_speed_range();
                format!("{}-{}", knots(lo), knots(hi))
            })
            .collect();
        if row.label != label || direct != printed || via_lookup.iter().any(|s| s != printed) {
            bad.push(format!("speed {label}: {direct} {via_lookup:?}"));
        }
    }
    for (row, (label, printed)) in BLOCK_COEFFICIENT.iter().zip(block) {
        rows += 1;
        let direct = format!("{:.2}-{:.2}", row.min, row.max);
        let via_lookup = row.types.iter().all(|t| std::ptr::eq(t.block_coefficient_row(), row));
        if row.label != label || direct != printed || !via_lookup {
            bad.push(format!("block {label}: {direct}"));
        }
    }
    for (row, (label, printed)) in DRAFT_RATIO.iter().zip(ratios) {
        rows += 1;
        let direct = match row.ballast {
            Some(b) => format!("{b:.2} | {:.2}", row.laden),
            None => format!("{:.2}", row.laden),
        };
        let via_lookup = row.types.iter().all(|t| std::ptr::eq(t.draft_ratio_row(), row));
        if row.label != label || direct != printed || !via_lookup {
            bad.push(format!("ratio {label}: {direct}"));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { format!("{rows} rows string-exact") } else { bad.join("; ") })
}

fn affine_interpolation() -> Outcome {
    let t0 = common::START;
    let lats: Vec<f64> = (0..=10).map(f64::from).collect();
    let lons: Vec<f64> = (20..=30).map(f64::from).collect();
    let times: Vec<i64> = (0..6).map(|k| t0 + k * 3600).collect();
    let (a, b, c, d) = (20.0, 0.7, -0.4, 0.25);
    let field = |la: f64, lo: f64, t: i64| a + b * la + c * lo + d * (t - t0) as f64 / 3600.0;
    let mut text = String::from("#var f m\n");
    let join = |x: &[f64]| x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    text += &format!("#lat {}\n#lon {}\n", join(&lats), join(&lons));
    let iso = |t: i64| chrono::DateTime::<chrono::Utc>::from_timestamp(t, 0).unwrap().format("%Y-%m-%dT%H:%M:%SZ").to_string();
    text += &format!("#time {}\n", times.iter().map(|&t| iso(t)).collect::<Vec<_>>().join(","));
    for &t in &times {
        for &la in &lats {
            text += &lons.iter().map(|&lo| field(la, lo, t).to_string()).collect::<Vec<_>>().join(",");
            text.push('\n');
        }
        text.push('\n');
    }
    let grid = parse_hindcast(Path::new("affine.txt"), &text).expect("grid parses");
    let var = grid.variable("f").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut hull_violations) = (0.0f64, 0usize);
    for _ in 0..AFFINE_POINTS {
        let la = rng.random_range(0.0..10.0);
        let lo = rng.random_range(20.0..30.0);
        let t = rng.random_range(times[0]..*times.last().unwrap());
        let got = match interpolate_point(&grid, var, la, lo, t, 1, MaskPolicy::NeighborMean) {
            Ok(v) => v,
            Err(_) => return outcome(false, format!("no value at ({la}, {lo}, {t})")),
        };
        let exact = field(la, lo, t);
        worst = worst.max((got - exact).abs() / exact.abs());
        // Bracketing grid nodes found by scanning the axes.
        let (i, j) = (lats.iter().rposition(|&x| x <= la).unwrap(), lons.iter().rposition(|&x| x <= lo).unwrap());
        let k = times.iter().rposition(|&x| x <= t).unwrap();
        let mut corners = Vec::new();
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    let kk = (k + dk).min(times.len() - 1);
                    corners.push(field(lats[i + di], lons[j + dj], times[kk]));
                }
            }
        }
        let lo_b = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_b = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-12 * hi_b.abs();
        if got < lo_b - slack || got > hi_b + slack {
            hull_violations += 1;
        }
    }
    outcome(
        worst <= TOL_AFFINE_REL && hull_violations == 0,
        format!("max relative error {worst:.2e} over {AFFINE_POINTS} points, {hull_violations} outside corner bounds"),
    )
}

fn steady_filter() -> Outcome {
    const PLATEAU: usize = 250;
    const RAMP: usize = 30;
    const KINK: usize = 3;
    let sigma = 1.0;
    let height = 10.0 * sigma;
    let params = SteadyFilterParams::new(STEADY_WINDOW, STEADY_ALPHA, STEADY_RATE_TOLERANCE).unwrap();
    let n = 2 * PLATEAU + RAMP;
    let times: Vec<i64> = (0..n as i64).map(|k| k * 60).collect();
    let (mut ramp_hit, mut ramp_total, mut plateau_hit, mut plateau_total) = (0usize, 0usize, 0usize, 0usize);
    for seed in 0..STEADY_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let values: Vec<Option<f64>> = (0..n)
            .map(|k| {
                let level = if k < PLATEAU {
                    0.0
                } else if k < PLATEAU + RAMP {
                    height * (k - PLATEAU) as f64 / RAMP as f64
                } else {
                    height
                };
                Some(level + noise.sample(&mut rng))
            })
            .collect();
        let out = steady_state_filter(&times, &values, &params);
        for k in 0..n {
            let in_ramp = k >= PLATEAU + KINK && k < PLATEAU + RAMP - KINK;
            let far = k + STEADY_WINDOW / 2 < PLATEAU || k >= PLATEAU + RAMP + STEADY_WINDOW / 2;
            if in_ramp {
                ramp_total += 1;
                ramp_hit += usize::from(out.unsteady[k]);
            } else if far {
                plateau_total += 1;
                plateau_hit += usize::from(out.unsteady[k]);
            }
        }
    }
    let (r, p) = (ramp_hit as f64 / ramp_total as f64, plateau_hit as f64 / plateau_total as f64);
    outcome(
        r >= MIN_RAMP_FLAGGED && p <= MAX_PLATEAU_FLAGGED,
        format!("ramp interior flagged {:.1}%, plateau flagged {:.2}% over {STEADY_SEEDS} seeds", 100.0 * r, 100.0 * p),
    )
}

/// Records are plain arithmetic means of sub-samples in [0, 360). Returns
/// the dataset and which records are more than 90 degrees off the truth.
fn averaged_directions(centre: f64, seed: u64) -> (VoyageDataset, Vec<bool>) {
    const RECORDS: usize = 400;
    const SUBSAMPLES: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, 3.0).unwrap();
    let hindcast_error = Normal::new(0.0, 5.0).unwrap();
    let mut rows = Vec::new();
    let mut faulted = Vec::new();
    for r in 0..RECORDS {
        let subs: Vec<f64> = (0..SUBSAMPLES)
            .map(|s| {
                let phase = 2.0 * PI * (r as f64 + s as f64 / SUBSAMPLES as f64) / 7.0;
                (centre + 30.0 * phase.sin() + jitter.sample(&mut rng)).rem_euclid(360.0)
            })
            .collect();
        let naive = subs.iter().sum::<f64>() / SUBSAMPLES as f64;
        let (s, c) = subs.iter().fold((0.0, 0.0), |(s, c), a| (s + a.to_radians().sin(), c + a.to_radians().cos()));
        let truth = s.atan2(c).to_degrees().rem_euclid(360.0);
        let off = ((naive - truth).rem_euclid(360.0)).min((truth - naive).rem_euclid(360.0));
        faulted.push(off > 90.0);
        let reference = (truth + hindcast_error.sample(&mut rng)).rem_euclid(360.0);
        rows.push(Sample::new(r as i64 * 900).with(vars::REL_WIND_DIR, naive).with(vars::HC_REL_WIND_DIR, reference));
    }
    let mut schema = vars::default_schema();
    schema.push(shipdata_core::VariableSpec::angular(vars::HC_REL_WIND_DIR));
    (VoyageDataset::new(schema, rows).unwrap(), faulted)
}

fn angular_fault() -> Outcome {
    let (ds, faulted) = averaged_directions(0.0, 11);
    let (out, _) = detect_angular_fault(&ds, vars::REL_WIND_DIR, vars::HC_REL_WIND_DIR);
    let total = faulted.iter().filter(|&&f| f).count();
    let hit = (0..ds.len()).filter(|&i| faulted[i] && out.has_flag(i, QualityFlag::AngularAveragingFault)).count();
    let (control, control_faulted) = averaged_directions(180.0, 12);
    let (cout, _) = detect_angular_fault(&control, vars::REL_WIND_DIR, vars::HC_REL_WIND_DIR);
    let false_alarms = cout.flag_count(QualityFlag::AngularAveragingFault);
    let rate = hit as f64 / total.max(1) as f64;
    outcome(
        total > 0 && rate >= MIN_FAULT_FLAGGED && false_alarms == 0 && !control_faulted.iter().any(|&f| f),
        format!("{hit}/{total} faulted records flagged, {false_alarms} flags on the control"),
    )
}

/// Berth, trip, berth. Static samples are exact; in-trip sensors read low.
fn draft_fixture(fore: impl Fn(usize) -> f64, aft: impl Fn(usize) -> f64, trip: std::ops::Range<usize>, n: usize) -> VoyageDataset {
    let rows = (0..n)
        .map(|k| {
            let mut s = Sample::new(k as i64 * 600).with(vars::DRAFT_FORE, fore(k)).with(vars::DRAFT_AFT, aft(k));
            s.trip_id = trip.contains(&k).then_some(1);
            s
        })
        .collect();
    dataset(rows)
}

fn draft_corrections() -> Outcome {
    let (n, trip, n_avg) = (160usize, 20..140usize, 10usize);
    let (a, b) = (trip.start, trip.end - 1);
    let frac = |k: usize| (k - a) as f64 / (b - a) as f64;

    // Simple: drift between the static levels, venturi depression and noise in trip.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-0.05..0.05)).collect();
    let (pf, qf, pa, qa) = (9.80, 9.55, 10.40, 10.10);
    let simple_truth = |k: usize, p: f64, q: f64| if k < a { p } else if k > b { q } else { p + (q - p) * frac(k) };
    let ds = draft_fixture(
        |k| simple_truth(k, pf, qf) - if trip.contains(&k) { 0.3 + noise[k] } else { 0.0 },
        |k| simple_truth(k, pa, qa) - if trip.contains(&k) { 0.4 + noise[k] } else { 0.0 },
        trip.clone(),
        n,
    );
    let (out, _) = fix_draft_simple(&ds, 1, n_avg).unwrap();
    let mut simple_err = 0.0f64;
    for k in trip.clone() {
        simple_err = simple_err.max((out.value(k, vars::DRAFT_FORE).unwrap() - simple_truth(k, pf, qf)).abs());
        simple_err = simple_err.max((out.value(k, vars::DRAFT_AFT).unwrap() - simple_truth(k, pa, qa)).abs());
    }

    // Ramp: a trim swap between samples 70 and 80, fore rises and aft sinks.
    let (e0, e1) = (70usize, 80usize);
    let step = |k: usize| ((k as f64 - e0 as f64) / (e1 - e0) as f64).clamp(0.0, 1.0);
    let fore_truth = |k: usize| 9.8 + 0.6 * step(k);
    let aft_truth = |k: usize| 10.6 - 0.5 * step(k);
    let ds = draft_fixture(
        |k| fore_truth(k) - if trip.contains(&k) { 0.25 } else { 0.0 },
        |k| aft_truth(k) - if trip.contains(&k) { 0.35 } else { 0.0 },
        trip.clone(),
        n,
    );
    let event = DraftChangeEvent::manual(1, e0 as i64 * 600, e1 as i64 * 600);
    let (out, _) = fix_draft_ramp(&ds, 1, &[event], n_avg).unwrap();
    let mut ramp_err = 0.0f64;
    for k in trip.clone().filter(|&k| k + n_avg < e0 || k > e1 + n_avg) {
        ramp_err = ramp_err.max((out.value(k, vars::DRAFT_FORE).unwrap() - fore_truth(k)).abs());
        ramp_err = ramp_err.max((out.value(k, vars::DRAFT_AFT).unwrap() - aft_truth(k)).abs());
    }
    outcome(
        simple_err < TOL_DRAFT_M && ramp_err < TOL_DRAFT_M,
        format!("simple max error {simple_err:.1e} m, ramp max error {ramp_err:.1e} m"),
    )
}

/// stw, sog, rpm, power for a ship around its service speed.
fn pca_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let current = Normal::new(0.0, 0.15).unwrap();
    let rpm_noise = Normal::new(0.0, 0.8).unwrap();
    let power_noise = Normal::new(0.0, 0.03).unwrap();
    (0..n)
        .map(|_| {
            let stw: f64 = rng.random_range(5.0..8.0);
            let sog = stw + current.sample(rng);
            let rpm = 13.3 * stw + rpm_noise.sample(rng);
            let power = 27_778.0 * stw.powi(3) * (1.0 + power_noise.sample(rng));
            vec![stw, sog, rpm, power]
        })
        .collect()
}

fn pca_detection() -> Outcome {
    const N: usize = 1000;
    const FAULTS: usize = 20;
    let features: Vec<String> = [vars::STW, vars::SOG, vars::SHAFT_RPM, vars::SHAFT_POWER].map(String::from).to_vec();
    let (mut recall, mut fpr) = (0.0, 0.0);
    for seed in 0..PCA_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let training = pca_rows(&mut rng, N);
        let det = PcaDetector::fit(features.clone(), &training, None, PCA_QUANTILE, Scaling::Standardize).unwrap();
        let mut test = pca_rows(&mut rng, N);
        // Both speed sensors read low together while rpm and power stay normal.
        let mut idx: Vec<usize> = (0..N).collect();
        for k in 0..FAULTS {
            let j = rng.random_range(k..N);
            idx.swap(k, j);
        }
        let injected = &idx[..FAULTS];
        for &i in injected {
            let factor = rng.random_range(0.70..0.80);
            test[i][0] *= factor;
            test[i][1] *= factor;
        }
        let flagged: Vec<bool> = test.iter().map(|r| det.error(r) > det.threshold).collect();
        let hits = injected.iter().filter(|&&i| flagged[i]).count();
        let false_pos = (0..N).filter(|i| flagged[*i] && !injected.contains(i)).count();
        recall += hits as f64 / FAULTS as f64;
        fpr += false_pos as f64 / (N - FAULTS) as f64;
    }
    recall /= PCA_SEEDS as f64;
    fpr /= PCA_SEEDS as f64;
    outcome(
        recall >= MIN_PCA_RECALL && fpr <= MAX_PCA_FPR,
        format!("mean recall {:.1}%, mean false-positive rate {:.2}% over {PCA_SEEDS} seeds", 100.0 * recall, 100.0 * fpr),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let fx = common::Voyage::default().write(&tmp.path().join("in"));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_shipdata"))
            .args(["run", "--no-timestamp-header", "--config"])
            .arg(&fx.config)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("binary runs");
        if status.status.code() != Some(0) {
            return outcome(false, format!("run exited with {:?}", status.status.code()));
        }
        outputs.push(["processed.csv", "report.json", "report.txt"].map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    let same = outputs[0] == outputs[1];
    outcome(same, format!("processed.csv, report.json and report.txt {}", if same { "identical" } else { "differ" }))
}

fn ais_consistency() -> Outcome {
    const N: usize = 100;
    let injected = [12usize, 31, 50, 67, 88];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut lat, lon) = (30.0f64, 140.0f64);
    let mut rows = Vec::new();
    let mut reported = Vec::new();
    for k in 0..N {
        let speed = 6.0 + 0.5 * (k as f64 / 15.0).sin();
        let mut sog = speed + rng.random_range(-0.05..0.05);
        if injected.contains(&k) {
            sog *= 4.0;
        }
        reported.push(sog);
        rows.push(Sample::new(k as i64 * 300).with(vars::LATITUDE, lat).with(vars::LONGITUDE, lon).with(vars::SOG, sog));
        lat += (speed * 300.0 / EARTH_RADIUS).to_degrees();
    }
    let ds = dataset(rows).with_source_kind(shipdata_core::SourceKind::Ais);
    let (out, _) = ais_speed_consistency(&ds, 0.3, 5).unwrap();
    let flagged: Vec<usize> = (0..N).filter(|&i| out.has_flag(i, QualityFlag::IrrationalSpeed)).collect();
    let replaced = injected.iter().all(|&i| {
        let v = out.value(i, vars::SOG);
        v == Some(reported[i - 1]) || v == Some(reported[i + 1])
    });
    outcome(
        flagged == injected && replaced,
        format!("flagged {flagged:?}, replacements from neighbours: {replaced}"),
    )
}

fn main() {
    let started = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form oracles", closed_form),
        ("table reproduction", tables),
        ("interpolation exactness", affine_interpolation),
        ("steady-state filter", steady_filter),
        ("angular-fault detector", angular_fault),
        ("draft corrections", draft_corrections),
        ("PCA outlier detection", pca_detection),
        ("end-to-end determinism", determinism),
        ("AIS consistency", ais_consistency),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {}: {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 9 passed in {:.1} s", 9 - failed, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
