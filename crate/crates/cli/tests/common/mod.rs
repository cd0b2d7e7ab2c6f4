//! Synthetic voyage generator shared by the integration and acceptance tests.
//!
//! The voyage alternates berth stays and sea passages. Measured relative
//! wind is computed from the same wind field that is written to the
//! hindcast grid, so a correct pipeline sees consistent data.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const START: i64 = 1_709_251_200; // 2024-03-01T00:00:00Z
pub const DT: i64 = 900;
pub const KNOT: f64 = 1852.0 / 3600.0;
const EARTH_RADIUS: f64 = 6_371_000.0;
/// Power coefficient of the calm-water curve, W per (m/s)^3.
pub const POWER_COEFF: f64 = 27_778.0;
pub const RPM_PER_MS: f64 = 13.33;

#[derive(Clone, Debug)]
pub struct Voyage {
    pub legs: usize,
    pub leg_samples: usize,
    pub berth_samples: usize,
    pub with_position: bool,
    /// Row indices removed from the written file.
    pub drop_rows: Vec<usize>,
    pub seed: u64,
    pub extra_config: Vec<String>,
    /// Written into the config as the hindcast path instead of the real file.
    pub hindcast_override: Option<String>,
}

impl Default for Voyage {
    fn default() -> Self {
        Voyage {
            legs: 2,
            leg_samples: 96,
            berth_samples: 16,
            with_position: true,
            drop_rows: vec![40, 41, 150],
            seed: 7,
            extra_config: Vec::new(),
            hindcast_override: None,
        }
    }
}

pub struct Fixture {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub ship: PathBuf,
    /// Rows in the written ship file.
    pub rows: usize,
    /// Rows before dropping.
    pub full_rows: usize,
}

pub fn wind(lat: f64, lon: f64, t: i64) -> (f64, f64) {
    let hours = (t - START) as f64 / 3600.0;
    (4.0 + 0.2 * (lat - 10.0), -3.0 + 0.1 * (lon - 60.0) + 0.5 * (2.0 * PI * hours / 24.0).sin())
}

pub const CURRENT: (f64, f64) = (0.3, 0.2);
pub const WAVE_HEIGHT: f64 = 2.0;
pub const WAVE_FROM: f64 = 200.0;

struct Row {
    t: i64,
    lat: f64,
    lon: f64,
    sog: f64,
    stw: f64,
    heading: f64,
    rpm: f64,
    torque: f64,
    power: f64,
    draft_fore: f64,
    draft_aft: f64,
    rel_speed: f64,
    rel_dir: f64,
    nav: u8,
}

fn norm(a: f64) -> f64 {
    a.rem_euclid(360.0)
}

fn relative_wind(lat: f64, lon: f64, t: i64, heading: f64, sog: f64) -> (f64, f64) {
    let (u, v) = wind(lat, lon, t);
    let (s, c) = heading.to_radians().sin_cos();
    let long = -(u * s + v * c) + sog;
    let trans = -(u * c - v * s);
    (long.hypot(trans), norm(trans.atan2(long).to_degrees()))
}

fn generate(v: &Voyage) -> Vec<Row> {
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    let mut rows = Vec::new();
    let (mut lat, mut lon) = (10.0f64, 60.0f64);
    let mut t = START;
    // Static drafts before each leg; fuel burn lightens the ship slowly.
    let static_draft = |k: usize| (12.0 - 0.1 * k as f64, 12.4 - 0.1 * k as f64);
    let berth = |rows: &mut Vec<Row>, t: &mut i64, lat: f64, lon: f64, k: usize, heading: f64, rng: &mut ChaCha8Rng| {
        let (f, a) = static_draft(k);
        for _ in 0..v.berth_samples {
            let (rs, rd) = relative_wind(lat, lon, *t, heading, 0.0);
            rows.push(Row {
                t: *t,
                lat,
                lon,
                sog: 0.0,
                stw: 0.0,
                heading,
                rpm: 0.0,
                torque: 0.0,
                power: 0.0,
                draft_fore: f + rng.random_range(-0.005..0.005),
                draft_aft: a + rng.random_range(-0.005..0.005),
                rel_speed: rs,
                rel_dir: rd,
                nav: 5,
            });
            *t += DT;
        }
    };
    for leg in 0..v.legs {
        let course = if leg % 2 == 0 { 45.0 } else { 225.0 };
        berth(&mut rows, &mut t, lat, lon, leg, course, &mut rng);
        let (f0, a0) = static_draft(leg);
        let (f1, a1) = static_draft(leg + 1);
        for k in 0..v.leg_samples {
            let frac = k as f64 / v.leg_samples as f64;
            let sog = 6.0 + 0.3 * (2.0 * PI * frac * 3.0).sin();
            let (s, c) = (course as f64).to_radians().sin_cos();
            let current_long = CURRENT.0 * s + CURRENT.1 * c;
            let stw = sog - current_long + rng.random_range(-0.02..0.02);
            let rpm = RPM_PER_MS * stw + rng.random_range(-0.2..0.2);
            let power = POWER_COEFF * stw.powi(3);
            let torque = power / (2.0 * PI * rpm / 60.0);
            let heading = norm(course + rng.random_range(-0.5..0.5));
            let (rs, rd) = relative_wind(lat, lon, t, heading, sog);
            rows.push(Row {
                t,
                lat,
                lon,
                sog: sog + rng.random_range(-0.03..0.03),
                stw,
                heading,
                rpm,
                torque,
                power,
                draft_fore: f0 + (f1 - f0) * frac - 0.25 + rng.random_range(-0.01..0.01),
                draft_aft: a0 + (a1 - a0) * frac - 0.25 + rng.random_range(-0.01..0.01),
                rel_speed: rs,
                rel_dir: rd,
                nav: 0,
            });
            let d = sog * DT as f64;
            lat += (d * c / EARTH_RADIUS).to_degrees();
            lon += (d * s / (EARTH_RADIUS * lat.to_radians().cos())).to_degrees();
            t += DT;
        }
    }
    let back = if v.legs % 2 == 0 { 45.0 } else { 225.0 };
    berth(&mut rows, &mut t, lat, lon, v.legs, back, &mut rng);
    rows
}

fn iso(t: i64) -> String {
    chrono::DateTime::<chrono::Utc>::from_timestamp(t, 0)
        .unwrap()
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}

fn ship_csv(v: &Voyage, rows: &[Row]) -> (String, usize) {
    let mut s = String::from("timestamp,");
    if v.with_position {
        s.push_str("latitude,longitude,");
    }
    s.push_str("sog,stw,heading,shaft_rpm,shaft_torque,shaft_power,draft_fore,draft_aft,rel_wind_speed,rel_wind_dir,nav_status\n");
    let mut n = 0;
    for (i, r) in rows.iter().enumerate() {
        if v.drop_rows.contains(&i) {
            continue;
        }
        n += 1;
        write!(s, "{},", iso(r.t)).unwrap();
        if v.with_position {
            write!(s, "{:.6},{:.6},", r.lat, r.lon).unwrap();
        }
        writeln!(
            s,
            "{:.4},{:.4},{:.2},{:.3},{:.1},{:.3},{:.3},{:.3},{:.3},{:.2},{}",
            r.sog / KNOT,
            r.stw,
            r.heading,
            r.rpm,
            r.torque,
            r.power / 1e3,
            r.draft_fore,
            r.draft_aft,
            r.rel_speed,
            r.rel_dir,
            r.nav
        )
        .unwrap();
    }
    (s, n)
}

fn grid_text(t0: i64, t1: i64) -> String {
    let lats: Vec<f64> = (6..=18).map(f64::from).collect();
    let lons: Vec<f64> = (56..=68).map(f64::from).collect();
    let step = 3 * 3600;
    let times: Vec<i64> = (0..).map(|k| t0 - step + k * step).take_while(|&t| t <= t1 + step).collect();
    let join = |x: &[f64]| x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    let mut s = String::from("# synthetic hindcast\n");
    for (name, unit) in [("wind_u", "m/s"), ("wind_v", "m/s"), ("current_u", "m/s"), ("current_v", "m/s"), ("wave_height", "m"), ("wave_dir", "deg")] {
        writeln!(s, "#var {name} {unit}").unwrap();
    }
    s.push_str("#conv wave_dir from\n");
    writeln!(s, "#lat {}", join(&lats)).unwrap();
    writeln!(s, "#lon {}", join(&lons)).unwrap();
    writeln!(s, "#time {}", times.iter().map(|&t| iso(t)).collect::<Vec<_>>().join(",")).unwrap();
    for var in 0..6 {
        for &t in &times {
            for &la in &lats {
                let row: Vec<String> = lons
                    .iter()
                    .map(|&lo| {
                        let (u, v) = wind(la, lo, t);
                        [u, v, CURRENT.0, CURRENT.1, WAVE_HEIGHT, WAVE_FROM][var].to_string()
                    })
                    .collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s.push('\n');
        }
    }
    s
}

pub const PARTICULARS: &str = "\
ship_type = bulk_carrier
lpp = 180
lwl = 183
beam = 30
design_draft = 12.5
block_coefficient = 0.82
anemometer_height = 10
curve.ballast = 3:750006, 4:1777792, 5:3472250, 6:6000048, 7:9527854, 8:14222336
envelope = 0:0, 130:0, 130:30000000, 0:30000000
";

pub const WIND_TABLE: &str = "\
#area 900
#kind wind
angle_deg,coefficient
0,0.8
90,0.3
180,0.0
";

impl Voyage {
    pub fn write(&self, dir: &Path) -> Fixture {
        std::fs::create_dir_all(dir).unwrap();
        let rows = generate(self);
        let (csv, n) = ship_csv(self, &rows);
        let ship = dir.join("ship.csv");
        std::fs::write(&ship, csv).unwrap();
        std::fs::write(dir.join("hindcast.txt"), grid_text(rows[0].t, rows.last().unwrap().t)).unwrap();
        std::fs::write(dir.join("particulars.txt"), PARTICULARS).unwrap();
        std::fs::write(dir.join("wind.csv"), WIND_TABLE).unwrap();
        let hindcast = self.hindcast_override.clone().unwrap_or_else(|| "hindcast.txt".into());
        let mut cfg = format!(
            "ship_data = ship.csv\nhindcast = {hindcast}\nparticulars = particulars.txt\n\
             resistance.wind = wind.csv\nunit.sog = knots\nunit.shaft_power = kW\n\
             pca_features = stw, shaft_rpm, shaft_power\n"
        );
        for l in &self.extra_config {
            cfg.push_str(l);
            cfg.push('\n');
        }
        let config = dir.join("config.txt");
        std::fs::write(&config, cfg).unwrap();
        Fixture { dir: dir.to_path_buf(), config, ship, rows: n, full_rows: rows.len() }
    }
}
