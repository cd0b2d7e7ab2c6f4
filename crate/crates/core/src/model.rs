//! Shared data model: the voyage dataset, its schema, per-sample quality
//! flags and the static ship particulars.
//!
//! A [`VoyageDataset`] is stored column-wise. Stages never mutate a dataset in
//! place from the outside; they clone and return a new one, so a dataset can
//! be shared read-only between workers.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::ShipType;
use crate::vars;

/// UTC epoch seconds.
pub type Timestamp = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    InService,
    Ais,
    NoonReport,
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in_service" | "inservice" | "onboard" => Ok(SourceKind::InService),
            "ais" => Ok(SourceKind::Ais),
            "noon_report" | "noon" => Ok(SourceKind::NoonReport),
            other => Err(Error::InvalidParameter(format!("unknown source kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Linear,
    /// Degrees, normalized into [0, 360).
    Angular,
    /// Opaque strings (navigation state, port names, free-text report fields).
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableRole {
    OperationalControl,
    LoadingCondition,
    OperationalEnvironment,
    OperatingPoint,
    Navigation,
    State,
    #[default]
    Other,
}

impl VariableRole {
    /// Roles whose variables belong to the bare-minimum set needed for
    /// performance analysis.
    pub fn is_bare_minimum(self) -> bool {
        matches!(
            self,
            VariableRole::OperationalControl
                | VariableRole::LoadingCondition
                | VariableRole::OperationalEnvironment
                | VariableRole::OperatingPoint
        )
    }
}

impl FromStr for VariableRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "operational_control" => VariableRole::OperationalControl,
            "loading_condition" => VariableRole::LoadingCondition,
            "operational_environment" => VariableRole::OperationalEnvironment,
            "operating_point" => VariableRole::OperatingPoint,
            "navigation" => VariableRole::Navigation,
            "state" => VariableRole::State,
            "other" | "" => VariableRole::Other,
            other => return Err(Error::InvalidParameter(format!("unknown role `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub unit: String,
    pub kind: VariableKind,
    pub valid_min: Option<f64>,
    pub valid_max: Option<f64>,
    pub role: VariableRole,
    /// Value a dead sensor reports; exact zero is assumed when unset.
    pub dead_value: Option<f64>,
}

impl VariableSpec {
    pub fn linear(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            kind: VariableKind::Linear,
            valid_min: None,
            valid_max: None,
            role: VariableRole::Other,
            dead_value: None,
        }
    }

    pub fn angular(name: impl Into<String>) -> Self {
        Self {
            kind: VariableKind::Angular,
            ..Self::linear(name, "deg")
        }
    }

    pub fn text(name: impl Into<String>) -> Self {
        Self {
            kind: VariableKind::Text,
            ..Self::linear(name, "")
        }
    }

    pub fn with_range(mut self, min: Option<f64>, max: Option<f64>) -> Self {
        self.valid_min = min;
        self.valid_max = max;
        self
    }

    pub fn with_role(mut self, role: VariableRole) -> Self {
        self.role = role;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(lo), Some(hi)) = (self.valid_min, self.valid_max) {
            if !(lo < hi) {
                return Err(Error::InvalidBounds(self.name.clone()));
            }
        }
        Ok(())
    }

    pub fn in_range(&self, x: f64) -> bool {
        self.valid_min.is_none_or(|lo| x >= lo) && self.valid_max.is_none_or(|hi| x <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    MissingInserted,
    InvalidRange,
    RepeatedValue,
    Dropout,
    Spike,
    Unsteady,
    IrrationalPosition,
    IrrationalSpeed,
    AngularAveragingFault,
    CorrelationOutlier,
    DraftCorrected,
    StaleAisStatus,
}

impl QualityFlag {
    pub const ALL: [QualityFlag; 12] = [
        QualityFlag::MissingInserted,
        QualityFlag::InvalidRange,
        QualityFlag::RepeatedValue,
        QualityFlag::Dropout,
        QualityFlag::Spike,
        QualityFlag::Unsteady,
        QualityFlag::IrrationalPosition,
        QualityFlag::IrrationalSpeed,
        QualityFlag::AngularAveragingFault,
        QualityFlag::CorrelationOutlier,
        QualityFlag::DraftCorrected,
        QualityFlag::StaleAisStatus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityFlag::MissingInserted => "missing_inserted",
            QualityFlag::InvalidRange => "invalid_range",
            QualityFlag::RepeatedValue => "repeated_value",
            QualityFlag::Dropout => "dropout",
            QualityFlag::Spike => "spike",
            QualityFlag::Unsteady => "unsteady",
            QualityFlag::IrrationalPosition => "irrational_position",
            QualityFlag::IrrationalSpeed => "irrational_speed",
            QualityFlag::AngularAveragingFault => "angular_averaging_fault",
            QualityFlag::CorrelationOutlier => "correlation_outlier",
            QualityFlag::DraftCorrected => "draft_corrected",
            QualityFlag::StaleAisStatus => "stale_ais_status",
        }
    }

    /// Flags that mark a sample as untrustworthy for model fitting. Bookkeeping
    /// flags (inserted rows, corrected drafts) are not among them.
    pub fn is_outlier(self) -> bool {
        !matches!(
            self,
            QualityFlag::MissingInserted | QualityFlag::DraftCorrected
        )
    }
}

impl fmt::Display for QualityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QualityFlag::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown quality flag `{s}`")))
    }
}

/// Row view of a dataset, also the unit of construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    pub timestamp: Timestamp,
    pub values: BTreeMap<String, f64>,
    pub text: BTreeMap<String, String>,
    pub flags: BTreeSet<QualityFlag>,
    pub trip_id: Option<u32>,
}

impl Sample {
    pub fn new(timestamp: Timestamp) -> Self {
        Self {
            timestamp,
            ..Default::default()
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with_text(mut self, name: &str, value: &str) -> Self {
        self.text.insert(name.to_string(), value.to_string());
        self
    }

    pub fn with_flag(mut self, flag: QualityFlag) -> Self {
        self.flags.insert(flag);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Column {
    Real(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

impl Column {
    fn empty(kind: VariableKind, len: usize) -> Self {
        match kind {
            VariableKind::Text => Column::Text(vec![None; len]),
            _ => Column::Real(vec![None; len]),
        }
    }
}

/// Normalizes an angle in degrees into [0, 360).
pub fn normalize_angle(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Normalizes a longitude into [-180, 180).
pub fn normalize_longitude(deg: f64) -> f64 {
    normalize_angle(deg + 180.0) - 180.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoyageDataset {
    schema: Vec<VariableSpec>,
    timestamps: Vec<Timestamp>,
    columns: BTreeMap<String, Column>,
    flags: Vec<BTreeSet<QualityFlag>>,
    trip_ids: Vec<Option<u32>>,
    sampling_interval: Option<i64>,
    source_kind: SourceKind,
}

/// Builds a dataset from a schema and samples in any order.
pub fn new_dataset(schema: Vec<VariableSpec>, samples: Vec<Sample>) -> Result<VoyageDataset> {
    VoyageDataset::new(schema, samples)
}

impl VoyageDataset {
    pub fn new(schema: Vec<VariableSpec>, mut samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for spec in &schema {
            spec.validate()?;
            if !seen.insert(spec.name.as_str()) {
                return Err(Error::DuplicateVariable(spec.name.clone()));
            }
        }
        samples.sort_by_key(|s| s.timestamp);
        if let Some(w) = samples.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
            return Err(Error::DuplicateTimestamp(w[0].timestamp));
        }

        let n = samples.len();
        let mut columns: BTreeMap<String, Column> = schema
            .iter()
            .map(|s| (s.name.clone(), Column::empty(s.kind, n)))
            .collect();
        let kinds: BTreeMap<&str, VariableKind> =
            schema.iter().map(|s| (s.name.as_str(), s.kind)).collect();

        let mut timestamps = Vec::with_capacity(n);
        let mut flags = Vec::with_capacity(n);
        let mut trip_ids = Vec::with_capacity(n);
        for (i, sample) in samples.into_iter().enumerate() {
            for (name, &value) in &sample.values {
                let undeclared = || Error::UndeclaredVariable {
                    variable: name.clone(),
                    timestamp: sample.timestamp,
                };
                let kind = *kinds.get(name.as_str()).ok_or_else(undeclared)?;
                let value = match kind {
                    VariableKind::Text => return Err(Error::WrongKind { variable: name.clone() }),
                    VariableKind::Angular => normalize_angle(value),
                    VariableKind::Linear => check_coordinate(name, value, sample.timestamp)?,
                };
                if let Some(Column::Real(col)) = columns.get_mut(name) {
                    col[i] = value.is_finite().then_some(value);
                }
            }
            for (name, value) in sample.text {
                match columns.get_mut(&name) {
                    Some(Column::Text(col)) => col[i] = Some(value),
                    Some(Column::Real(_)) => return Err(Error::WrongKind { variable: name }),
                    None => {
                        return Err(Error::UndeclaredVariable {
                            variable: name,
                            timestamp: sample.timestamp,
                        })
                    }
                }
            }
            timestamps.push(sample.timestamp);
            flags.push(sample.flags);
            trip_ids.push(sample.trip_id);
        }

        Ok(Self {
            schema,
            timestamps,
            columns,
            flags,
            trip_ids,
            sampling_interval: None,
            source_kind: SourceKind::default(),
        })
    }

    pub fn with_source_kind(mut self, kind: SourceKind) -> Self {
        self.source_kind = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn schema(&self) -> &[VariableSpec] {
        &self.schema
    }

    pub fn spec(&self, name: &str) -> Option<&VariableSpec> {
        self.schema.iter().find(|s| s.name == name)
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn sampling_interval(&self) -> Option<i64> {
        self.sampling_interval
    }

    pub fn source_kind(&self) -> SourceKind {
        self.source_kind
    }

    /// Numeric column, `None` when the variable is undeclared or textual.
    pub fn real(&self, name: &str) -> Option<&[Option<f64>]> {
        match self.columns.get(name) {
            Some(Column::Real(v)) => Some(v),
            _ => None,
        }
    }

    pub fn text(&self, name: &str) -> Option<&[Option<String>]> {
        match self.columns.get(name) {
            Some(Column::Text(v)) => Some(v),
            _ => None,
        }
    }

    pub fn value(&self, i: usize, name: &str) -> Option<f64> {
        self.real(name).and_then(|c| c[i])
    }

    /// Number of samples carrying a value for `name`.
    pub fn present_count(&self, name: &str) -> usize {
        match self.columns.get(name) {
            Some(Column::Real(v)) => v.iter().filter(|x| x.is_some()).count(),
            Some(Column::Text(v)) => v.iter().filter(|x| x.is_some()).count(),
            None => 0,
        }
    }

    pub fn flags(&self, i: usize) -> &BTreeSet<QualityFlag> {
        &self.flags[i]
    }

    pub fn has_flag(&self, i: usize, flag: QualityFlag) -> bool {
        self.flags[i].contains(&flag)
    }

    pub fn trip_id(&self, i: usize) -> Option<u32> {
        self.trip_ids[i]
    }

    pub fn trip_ids(&self) -> &[Option<u32>] {
        &self.trip_ids
    }

    /// Distinct trip ids in ascending order.
    pub fn trips(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.trip_ids.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Indices of samples belonging to `trip`, in time order.
    pub fn trip_indices(&self, trip: u32) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.trip_ids[i] == Some(trip)).collect()
    }

    pub fn flag_count(&self, flag: QualityFlag) -> usize {
        self.flags.iter().filter(|f| f.contains(&flag)).count()
    }

    pub fn sample(&self, i: usize) -> Sample {
        let mut s = Sample::new(self.timestamps[i]);
        for (name, col) in &self.columns {
            match col {
                Column::Real(v) => {
                    if let Some(x) = v[i] {
                        s.values.insert(name.clone(), x);
                    }
                }
                Column::Text(v) => {
                    if let Some(x) = &v[i] {
                        s.text.insert(name.clone(), x.clone());
                    }
                }
            }
        }
        s.flags = self.flags[i].clone();
        s.trip_id = self.trip_ids[i];
        s
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    // Crate-internal builders used by stages on their private copy.

    pub(crate) fn set_sampling_interval(&mut self, interval: Option<i64>) {
        self.sampling_interval = interval;
    }

    /// Adds the variable to the schema (or replaces its spec) and stores the
    /// column. Angular columns are normalized.
    pub(crate) fn put_real(&mut self, spec: VariableSpec, mut values: Vec<Option<f64>>) {
        debug_assert_eq!(values.len(), self.len());
        if spec.kind == VariableKind::Angular {
            for v in values.iter_mut().flatten() {
                *v = normalize_angle(*v);
            }
        }
        for v in values.iter_mut() {
            if v.is_some_and(|x| !x.is_finite()) {
                *v = None;
            }
        }
        self.columns.insert(spec.name.clone(), Column::Real(values));
        self.upsert_spec(spec);
    }

    fn upsert_spec(&mut self, spec: VariableSpec) {
        match self.schema.iter_mut().find(|s| s.name == spec.name) {
            Some(s) => *s = spec,
            None => self.schema.push(spec),
        }
    }

    /// Inserts a flag. Flags are never removed.
    pub(crate) fn flag(&mut self, i: usize, flag: QualityFlag) -> bool {
        self.flags[i].insert(flag)
    }

    pub(crate) fn set_trip_ids(&mut self, ids: Vec<Option<u32>>) {
        debug_assert_eq!(ids.len(), self.len());
        self.trip_ids = ids;
    }

    /// Re-times the dataset from explicit rows. Used by the timeline stages,
    /// which build a fresh sample list.
    pub(crate) fn rebuild(&self, samples: Vec<Sample>, interval: Option<i64>) -> Result<Self> {
        let mut out = VoyageDataset::new(self.schema.clone(), samples)?;
        out.sampling_interval = interval;
        out.source_kind = self.source_kind;
        Ok(out)
    }
}

fn check_coordinate(name: &str, value: f64, timestamp: Timestamp) -> Result<f64> {
    match name {
        vars::LATITUDE if !(-90.0..=90.0).contains(&value) => Err(Error::CoordinateOutOfRange {
            timestamp,
            variable: name.to_string(),
            value,
        }),
        vars::LONGITUDE => Ok(normalize_longitude(value)),
        _ => Ok(value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalmWaterCurve {
    pub label: String,
    /// (speed m/s, power W), ascending in speed.
    pub points: Vec<(f64, f64)>,
}

impl CalmWaterCurve {
    /// Linear interpolation of power at `speed`; `None` outside the curve span.
    pub fn power_at(&self, speed: f64) -> Option<f64> {
        let pts = &self.points;
        let (first, last) = (pts.first()?, pts.last()?);
        if speed < first.0 || speed > last.0 {
            return None;
        }
        let k = pts.partition_point(|p| p.0 <= speed);
        if k == 0 {
            return Some(first.1);
        }
        if k >= pts.len() {
            return Some(last.1);
        }
        let (a, b) = (pts[k - 1], pts[k]);
        if b.0 == a.0 {
            return Some(a.1);
        }
        Some(a.1 + (b.1 - a.1) * (speed - a.0) / (b.0 - a.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipParticulars {
    pub ship_type: ShipType,
    pub lwl: Option<f64>,
    pub lpp: Option<f64>,
    pub beam: f64,
    pub design_draft: f64,
    pub block_coefficient: f64,
    pub block_coefficient_filled: bool,
    pub anemometer_height: Option<f64>,
    pub wind_reference_height: Option<f64>,
    pub calm_water_curves: Vec<CalmWaterCurve>,
    /// Closed polygon in the (rpm, power W) plane.
    pub envelope: Option<Vec<(f64, f64)>>,
    pub rpm_threshold: f64,
    pub sog_threshold: f64,
}

impl ShipParticulars {
    /// Waterline length when known, otherwise length between perpendiculars.
    pub fn length(&self) -> f64 {
        self.lwl.or(self.lpp).unwrap_or(f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {x}"
                ))),
                _ => Ok(()),
            }
        };
        if self.lwl.is_none() && self.lpp.is_none() {
            return Err(Error::InvalidParameter("one of lwl or lpp is required".into()));
        }
        positive("lwl", self.lwl)?;
        positive("lpp", self.lpp)?;
        positive("beam", Some(self.beam))?;
        positive("design_draft", Some(self.design_draft))?;
        positive("anemometer_height", self.anemometer_height)?;
        positive("wind_reference_height", self.wind_reference_height)?;
        if !(self.block_coefficient > 0.0 && self.block_coefficient < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "block_coefficient must lie in (0, 1), got {}",
                self.block_coefficient
            )));
        }
        Ok(())
    }

    /// Curve with the `sea_trial` label if present, otherwise the first one.
    pub fn primary_curve(&self) -> Option<&CalmWaterCurve> {
        self.calm_water_curves
            .iter()
            .find(|c| c.label == "sea_trial")
            .or_else(|| self.calm_water_curves.first())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<VariableSpec> {
        vec![
            VariableSpec::linear("sog", "m/s"),
            VariableSpec::angular("heading"),
            VariableSpec::text("state"),
        ]
    }

    #[test]
    fn empty_dataset_has_no_interval() {
        let ds = new_dataset(schema(), vec![]).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.sampling_interval(), None);
    }

    #[test]
    fn samples_are_sorted() {
        let ds = new_dataset(
            schema(),
            vec![Sample::new(30), Sample::new(10), Sample::new(20)],
        )
        .unwrap();
        assert_eq!(ds.timestamps(), &[10, 20, 30]);
    }

    #[test]
    fn duplicate_timestamp_is_named() {
        let err = new_dataset(schema(), vec![Sample::new(5), Sample::new(5)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateTimestamp(5)));
        assert!(err.to_string().contains('5'));
    }

    #[test]
    fn duplicate_variable_rejected() {
        let mut s = schema();
        s.push(VariableSpec::linear("sog", "kn"));
        assert!(matches!(new_dataset(s, vec![]), Err(Error::DuplicateVariable(n)) if n == "sog"));
    }

    #[test]
    fn undeclared_value_rejected() {
        let err = new_dataset(schema(), vec![Sample::new(0).with("stw", 1.0)]).unwrap_err();
        assert!(matches!(err, Error::UndeclaredVariable { .. }));
    }

    #[test]
    fn angles_are_normalized() {
        let ds = new_dataset(
            schema(),
            vec![Sample::new(0).with("heading", -10.0), Sample::new(1).with("heading", 720.0)],
        )
        .unwrap();
        assert_eq!(ds.value(0, "heading"), Some(350.0));
        assert_eq!(ds.value(1, "heading"), Some(0.0));
    }

    #[test]
    fn bounds_must_be_ordered() {
        let spec = VariableSpec::linear("x", "").with_range(Some(2.0), Some(1.0));
        assert!(new_dataset(vec![spec], vec![]).is_err());
    }

    #[test]
    fn sample_view_round_trips() {
        let s = Sample::new(7)
            .with("sog", 3.5)
            .with_text("state", "B")
            .with_flag(QualityFlag::Spike);
        let ds = new_dataset(schema(), vec![s.clone()]).unwrap();
        assert_eq!(ds.sample(0), s);
    }

    #[test]
    fn latitude_out_of_range_rejected() {
        let schema = vec![VariableSpec::linear(vars::LATITUDE, "deg")];
        assert!(new_dataset(schema, vec![Sample::new(0).with(vars::LATITUDE, 91.0)]).is_err());
    }

    #[test]
    fn curve_interpolates_linearly() {
        let c = CalmWaterCurve {
            label: "a".into(),
            points: vec![(1.0, 10.0), (3.0, 30.0)],
        };
        assert_eq!(c.power_at(2.0), Some(20.0));
        assert_eq!(c.power_at(3.0), Some(30.0));
        assert_eq!(c.power_at(3.5), None);
    }
}
