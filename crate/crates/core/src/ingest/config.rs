use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hindcast::MaskPolicy;
use crate::model::SourceKind;
use crate::timeline::TripMethod;

use super::{parse_f64, parse_key_values, read_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Regularize,
    Trips,
    Ais,
    GpsClean,
    Interpolate,
    Derive,
    Validate,
    Draft,
    Hydrostatics,
    Resistance,
    Clean,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Regularize,
        Stage::Trips,
        Stage::Ais,
        Stage::GpsClean,
        Stage::Interpolate,
        Stage::Derive,
        Stage::Validate,
        Stage::Draft,
        Stage::Hydrostatics,
        Stage::Resistance,
        Stage::Clean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Regularize => "regularize",
            Stage::Trips => "trips",
            Stage::Ais => "ais",
            Stage::GpsClean => "gps_clean",
            Stage::Interpolate => "interpolate",
            Stage::Derive => "derive",
            Stage::Validate => "validate",
            Stage::Draft => "draft",
            Stage::Hydrostatics => "hydrostatics",
            Stage::Resistance => "resistance",
            Stage::Clean => "clean",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown stage `{}`", s.trim())))
    }
}

/// Parses a comma-separated stage list.
pub fn parse_stage_list(s: &str) -> Result<BTreeSet<Stage>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraftMethod {
    Simple,
    Ramp,
    /// Ramp when draft-change events are detected, simple otherwise.
    Auto,
}

impl FromStr for DraftMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "simple" => Ok(DraftMethod::Simple),
            "ramp" => Ok(DraftMethod::Ramp),
            "auto" => Ok(DraftMethod::Auto),
            o => Err(Error::InvalidParameter(format!("unknown draft method `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub base_dir: PathBuf,
    pub ship_data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub units: BTreeMap<String, String>,
    pub source_kind: SourceKind,
    pub hindcast: Vec<PathBuf>,
    pub particulars: Option<PathBuf>,
    pub hydrostatic_table: Option<PathBuf>,
    pub resistance_tables: BTreeMap<String, PathBuf>,

    pub sampling_interval: i64,
    pub trip_method: TripMethod,
    pub state_variable: String,
    pub pad_samples: usize,
    pub interpolation_order: usize,
    pub mask_policy: MaskPolicy,
    pub steady_window: usize,
    pub steady_alpha: f64,
    pub gradient_tolerance: BTreeMap<String, f64>,
    pub ais_tolerance: f64,
    pub ais_window: usize,
    pub port_speed_threshold: f64,
    pub power_tolerance: f64,
    pub stw_tolerance: f64,
    pub wind_tolerance: f64,
    pub draft_method: DraftMethod,
    pub draft_n_avg: usize,
    pub repeat_run: usize,
    pub dropout_max: usize,
    pub spike_scale: f64,
    pub pca_features: Vec<String>,
    pub pca_components: Option<usize>,
    pub pca_quantile: f64,
    pub max_iterations: usize,
    pub stages: BTreeSet<Stage>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            ship_data: None,
            schema: None,
            units: BTreeMap::new(),
            source_kind: SourceKind::InService,
            hindcast: Vec::new(),
            particulars: None,
            hydrostatic_table: None,
            resistance_tables: BTreeMap::new(),
            sampling_interval: 900,
            trip_method: TripMethod::Thresholds,
            state_variable: crate::vars::STATE.to_string(),
            pad_samples: 2,
            interpolation_order: 1,
            mask_policy: MaskPolicy::NeighborMean,
            steady_window: 11,
            steady_alpha: 0.01,
            gradient_tolerance: BTreeMap::new(),
            ais_tolerance: 0.3,
            ais_window: 5,
            port_speed_threshold: 0.5,
            power_tolerance: 0.02,
            stw_tolerance: 0.5,
            wind_tolerance: 2.0,
            draft_method: DraftMethod::Auto,
            draft_n_avg: 10,
            repeat_run: 20,
            dropout_max: 3,
            spike_scale: 6.0,
            pca_features: Vec::new(),
            pca_components: None,
            pca_quantile: 0.995,
            max_iterations: 2,
            stages: Stage::ALL.into_iter().collect(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(path, &read_text(path)?)
    }

    /// Relative paths are resolved against the config file's directory.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let mut c = PipelineConfig {
            base_dir: base.clone(),
            ..Default::default()
        };
        for (line, key, value) in parse_key_values(path, text)? {
            let num = || parse_f64(path, line, &key, &value);
            let count = || -> Result<usize> {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::parse(path, line, format!("`{key}` expects a non-negative integer")))
            };
            let bad = |e: Error| Error::parse(path, line, e.to_string());
            match key.as_str() {
                "ship_data" => c.ship_data = Some(resolve(&value)),
                "schema" => c.schema = Some(resolve(&value)),
                "source_kind" => c.source_kind = value.parse().map_err(bad)?,
                "hindcast" => {
                    c.hindcast = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(resolve)
                        .collect()
                }
                "particulars" => c.particulars = Some(resolve(&value)),
                "hydrostatic_table" => c.hydrostatic_table = Some(resolve(&value)),
                "sampling_interval" => c.sampling_interval = num()? as i64,
                "trip_method" => c.trip_method = value.parse().map_err(bad)?,
                "state_variable" => c.state_variable = value.clone(),
                "pad_samples" => c.pad_samples = count()?,
                "interpolation_order" => c.interpolation_order = count()?,
                "mask_policy" => c.mask_policy = value.parse().map_err(bad)?,
                "steady_window" => c.steady_window = count()?,
                "steady_alpha" => c.steady_alpha = num()?,
                "ais_tolerance" => c.ais_tolerance = num()?,
                "ais_window" => c.ais_window = count()?,
                "port_speed_threshold" => c.port_speed_threshold = num()?,
                "power_tolerance" => c.power_tolerance = num()?,
                "stw_tolerance" => c.stw_tolerance = num()?,
                "wind_tolerance" => c.wind_tolerance = num()?,
                "draft_method" => c.draft_method = value.parse().map_err(bad)?,
                "draft_n_avg" => c.draft_n_avg = count()?,
                "repeat_run" => c.repeat_run = count()?,
                "dropout_max" => c.dropout_max = count()?,
                "spike_scale" => c.spike_scale = num()?,
                "pca_features" => {
                    c.pca_features = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                }
                "pca_components" => c.pca_components = Some(count()?),
                "pca_quantile" => c.pca_quantile = num()?,
                "max_iterations" => c.max_iterations = count()?,
                "stages" => c.stages = parse_stage_list(&value).map_err(bad)?,
                k if k.starts_with("unit.") => {
                    super::unit_factor(&value).map_err(bad)?;
                    c.units.insert(k["unit.".len()..].to_string(), value.clone());
                }
                k if k.starts_with("gradient_tolerance.") => {
                    c.gradient_tolerance
                        .insert(k["gradient_tolerance.".len()..].to_string(), num()?);
                }
                k if k.starts_with("resistance.") => {
                    c.resistance_tables
                        .insert(k["resistance.".len()..].to_string(), resolve(&value));
                }
                other => {
                    return Err(Error::parse(path, line, format!("unknown configuration key `{other}`")))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("`{name}` must be strictly positive")))
            }
        };
        positive("sampling_interval", self.sampling_interval > 0)?;
        positive("interpolation_order", self.interpolation_order >= 1)?;
        positive("steady_window", self.steady_window >= 3)?;
        positive("ais_tolerance", self.ais_tolerance > 0.0)?;
        positive("ais_window", self.ais_window > 0)?;
        positive("port_speed_threshold", self.port_speed_threshold > 0.0)?;
        positive("power_tolerance", self.power_tolerance > 0.0)?;
        positive("stw_tolerance", self.stw_tolerance > 0.0)?;
        positive("wind_tolerance", self.wind_tolerance > 0.0)?;
        positive("draft_n_avg", self.draft_n_avg > 0)?;
        positive("repeat_run", self.repeat_run > 0)?;
        positive("dropout_max", self.dropout_max > 0)?;
        positive("spike_scale", self.spike_scale > 0.0)?;
        positive("max_iterations", self.max_iterations > 0)?;
        for (k, v) in &self.gradient_tolerance {
            positive(&format!("gradient_tolerance.{k}"), *v > 0.0)?;
        }
        if self.pca_components == Some(0) {
            return Err(Error::InvalidParameter("`pca_components` must be strictly positive".into()));
        }
        for (name, v) in [("steady_alpha", self.steady_alpha), ("pca_quantile", self.pca_quantile)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("`{name}` must lie in (0, 1)")));
            }
        }
        if self.steady_window % 2 == 0 {
            return Err(Error::InvalidParameter("`steady_window` must be odd".into()));
        }
        Ok(())
    }

    pub fn stage_enabled(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// Rate limit for `variable`, if configured.
    pub fn gradient_tolerance_for(&self, variable: &str) -> Option<f64> {
        self.gradient_tolerance.get(variable).copied()
    }
}
