use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{VariableSpec, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::vars;

pub const WATER_DENSITY: f64 = 1025.0;
pub const AIR_DENSITY: f64 = 1.225;
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Calm,
    Wind,
    Wave,
}

impl FromStr for ComponentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "calm" | "calm_water" => Ok(Self::Calm),
            "wind" => Ok(Self::Wind),
            "wave" | "waves" => Ok(Self::Wave),
            other => Err(Error::InvalidInput(format!("unknown resistance component kind {other:?}"))),
        }
    }
}

/// Groups of per-sample inputs a model may need.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Stw,
    RelativeWind,
    Wave,
    Hydrostatics,
}

/// Inputs for one sample. Angles are relative to the bow in degrees, 0 for
/// head-on.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleState {
    pub stw: Option<f64>,
    pub rel_wind_speed: Option<f64>,
    pub rel_wind_angle: Option<f64>,
    pub wave_height: Option<f64>,
    pub rel_wave_angle: Option<f64>,
    pub displacement_volume: Option<f64>,
    pub wetted_surface: Option<f64>,
}

impl SampleState {
    fn has(&self, input: Input) -> bool {
        match input {
            Input::Stw => self.stw.is_some(),
            Input::RelativeWind => self.rel_wind_speed.is_some() && self.rel_wind_angle.is_some(),
            Input::Wave => self.wave_height.is_some() && self.rel_wave_angle.is_some(),
            Input::Hydrostatics => self.displacement_volume.is_some() && self.wetted_surface.is_some(),
        }
    }
}

/// Collects a sample's inputs. Relative wind comes from the onboard
/// anemometer (height-corrected and angle-fixed columns preferred) and
/// falls back to the hindcast ship-frame components.
pub fn sample_state(ds: &VoyageDataset, i: usize) -> SampleState {
    let first = |names: &[&str]| names.iter().find_map(|n| ds.value(i, n));
    let fixed_dir = vars::fixed(vars::REL_WIND_DIR);
    let onboard = (
        first(&[vars::REL_WIND_SPEED_REF, vars::REL_WIND_SPEED]),
        first(&[fixed_dir.as_str(), vars::REL_WIND_DIR]),
    );
    let (ws, wa) = match onboard {
        (Some(s), Some(a)) => (Some(s), Some(a)),
        _ => (
            ds.value(i, vars::REL_WIND_LONG)
                .zip(ds.value(i, vars::REL_WIND_TRANS))
                .map(|(l, t)| l.hypot(t)),
            ds.value(i, vars::HC_REL_WIND_DIR),
        ),
    };
    SampleState {
        stw: first(&[vars::STW, vars::STW_ESTIMATE]),
        rel_wind_speed: ws,
        rel_wind_angle: wa,
        wave_height: ds.value(i, vars::HC_WAVE_HEIGHT),
        rel_wave_angle: ds.value(i, vars::REL_WAVE_DIR),
        displacement_volume: ds.value(i, vars::DISPLACEMENT),
        wetted_surface: ds.value(i, vars::WSA),
    }
}

/// A resistance component model; implementations are registered by the
/// caller and evaluated per sample.
pub trait ResistanceModel: Send + Sync {
    /// Output column is `res_<name>`.
    fn name(&self) -> &str;
    fn kind(&self) -> ComponentKind;
    fn required(&self) -> &[Input];
    /// Resistance in N, or `None` if it cannot be evaluated.
    fn resistance(&self, state: &SampleState) -> Option<f64>;
}

/// Coefficient curve scaled by a dynamic pressure and a reference area.
///
/// calm: abscissa is stw (m/s), R = C(v) ½ρ_w v² A
/// wind: abscissa is relative wind angle (deg), R = C(θ) ½ρ_a V² A
/// wave: abscissa is relative wave angle (deg), R = C(θ) ½ρ_w g H² A
///
/// Angles fold into [0, 180] when the table stops at 180.
#[derive(Debug, Clone, PartialEq)]
pub struct TableDrivenModel {
    name: String,
    kind: ComponentKind,
    area: f64,
    abscissa: Vec<f64>,
    coefficient: Vec<f64>,
}

impl TableDrivenModel {
    pub fn new(name: impl Into<String>, kind: ComponentKind, area: f64, points: &[(f64, f64)]) -> Result<Self> {
        let name = name.into();
        if !(area > 0.0) {
            return Err(Error::InvalidInput(format!("{name}: reference area must be positive")));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput(format!("{name}: coefficient table is empty")));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput(format!("{name}: abscissa must be strictly increasing")));
        }
        if points.iter().any(|p| !(p.1 >= 0.0) || !p.0.is_finite()) {
            return Err(Error::InvalidInput(format!("{name}: coefficients must be finite and non-negative")));
        }
        if kind == ComponentKind::Calm {
            if points[0].0 < 0.0 {
                return Err(Error::InvalidInput(format!("{name}: calm-water speeds must be non-negative")));
            }
            // (a + b v) v² is nondecreasing on a segment iff 2a + 3bv >= 0
            // at both of its ends.
            for w in points.windows(2) {
                let b = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                let a = w[0].1 - b * w[0].0;
                if [w[0].0, w[1].0].iter().any(|&v| 2.0 * a + 3.0 * b * v < -1e-12) {
                    return Err(Error::InvalidInput(format!(
                        "{name}: calm-water resistance would decrease between {} and {} m/s",
                        w[0].0, w[1].0
                    )));
                }
            }
        }
        Ok(Self {
            name,
            kind,
            area,
            abscissa: points.iter().map(|p| p.0).collect(),
            coefficient: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Piecewise-linear coefficient, held constant beyond the table.
    pub fn coefficient_at(&self, x: f64) -> f64 {
        let (xs, cs) = (&self.abscissa, &self.coefficient);
        let x = if self.kind != ComponentKind::Calm && xs[xs.len() - 1] <= 180.0 {
            let a = x.rem_euclid(360.0);
            if a > 180.0 { 360.0 - a } else { a }
        } else {
            x
        };
        if x <= xs[0] {
            return cs[0];
        }
        if x >= xs[xs.len() - 1] {
            return cs[cs.len() - 1];
        }
        let i = xs.partition_point(|&a| a <= x);
        let f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        cs[i - 1] + (cs[i] - cs[i - 1]) * f
    }
}

impl ResistanceModel for TableDrivenModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> ComponentKind {
        self.kind
    }

    fn required(&self) -> &[Input] {
        match self.kind {
            ComponentKind::Calm => &[Input::Stw],
            ComponentKind::Wind => &[Input::RelativeWind],
            ComponentKind::Wave => &[Input::Wave],
        }
    }

    fn resistance(&self, s: &SampleState) -> Option<f64> {
        let (x, q) = match self.kind {
            ComponentKind::Calm => {
                let v = s.stw?.max(0.0);
                (v, 0.5 * WATER_DENSITY * v * v)
            }
            ComponentKind::Wind => {
                let v = s.rel_wind_speed?;
                (s.rel_wind_angle?, 0.5 * AIR_DENSITY * v * v)
            }
            ComponentKind::Wave => {
                let h = s.wave_height?;
                (s.rel_wave_angle?, 0.5 * WATER_DENSITY * GRAVITY * h * h)
            }
        };
        Some(self.coefficient_at(x) * q * self.area)
    }
}

/// Reads a coefficient table: `#area <m2>` and `#kind <calm|wind|wave>`
/// header lines, then a two-column CSV (abscissa, coefficient) with a
/// header row. The model is named after the file stem.
pub fn load_coefficient_table(path: &Path) -> Result<TableDrivenModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut area = None;
    let mut kind = None;
    let mut body = String::new();
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next()) {
                (Some("area"), Some(v)) => {
                    area = Some(v.parse::<f64>().map_err(|_| Error::InvalidInput(format!("{}: bad #area", path.display())))?)
                }
                (Some("kind"), Some(v)) => kind = Some(v.parse::<ComponentKind>()?),
                _ => {}
            }
        } else if !t.is_empty() {
            body.push_str(t);
            body.push('\n');
        }
    }
    let (Some(area), Some(kind)) = (area, kind) else {
        return Err(Error::InvalidInput(format!("{}: needs #area and #kind lines", path.display())));
    };
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
        let num = |k: usize| rec.get(k).and_then(|s| s.trim().parse::<f64>().ok());
        match (num(0), num(1)) {
            (Some(x), Some(c)) => points.push((x, c)),
            _ => return Err(Error::InvalidInput(format!("{}: bad row {rec:?}", path.display()))),
        }
    }
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
    TableDrivenModel::new(name, kind, area, &points)
}

/// Evaluates each model on every sample into `res_<name>`. Models whose
/// inputs are absent from the whole dataset are skipped with a warning.
pub fn resistance_components(
    ds: &VoyageDataset,
    models: &[Box<dyn ResistanceModel>],
) -> (VoyageDataset, StageEntry) {
    let mut entry = StageEntry::new("resistance");
    let mut out = ds.clone();
    let states: Vec<SampleState> = (0..ds.len()).map(|i| sample_state(ds, i)).collect();
    for m in models {
        let available = m.required().iter().all(|&inp| states.iter().any(|s| s.has(inp)));
        if !available {
            entry.warn(format!("resistance model {} skipped: inputs {:?} unavailable", m.name(), m.required()));
            entry.check(CheckResult::new(format!("resistance.{}", m.name()), false).message("skipped"));
            continue;
        }
        let col: Vec<Option<f64>> = states
            .iter()
            .map(|s| if m.required().iter().all(|&inp| s.has(inp)) { m.resistance(s) } else { None })
            .collect();
        let evaluated = col.iter().flatten().count();
        out.put_real(VariableSpec::linear(format!("{}{}", vars::RESISTANCE_PREFIX, m.name()), "N"), col);
        entry.check(
            CheckResult::new(format!("resistance.{}", m.name()), true).metric("evaluated", evaluated as f64),
        );
    }
    (out, entry)
}
