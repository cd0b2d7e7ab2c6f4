use std::path::{Path, PathBuf};

use shipdata_core::cleaning::{contextual_filter, pca_fit, pca_score, quasi_steady_filter, relaxed, ContextualParams};
use shipdata_core::corrections::{
    apply_hydrostatics, check_draft_ratios, detect_draft_events, fix_draft_ramp, load_coefficient_table,
    resistance_components, HydrostaticTable, ResistanceModel, VoyageKind,
};
use shipdata_core::features::{ais_speed_consistency, ais_status_check, derive, HeadingSource};
use shipdata_core::hindcast::{
    clean_gps, interpolate, order_check, ScaleEstimate, SteadyFilterParams, GPS_RATE_TOLERANCE,
};
use shipdata_core::ingest::{
    load_hindcast, load_particulars, load_schema, load_ship_csv, unit_map_from, DraftMethod, HindcastGrid,
    PipelineConfig, Stage, UnitMap, DEFAULT_RPM_THRESHOLD, DEFAULT_SOG_THRESHOLD,
};
use shipdata_core::stats::{angular_distance, median};
use shipdata_core::timeline::{regularize, segment, TripMethod};
use shipdata_core::validation::{
    check_longitudinal_wind, check_power_identity, check_speed_power, check_stw, detect_angular_fault,
};
use shipdata_core::{
    vars, CheckResult, Error, ProcessingReport, Result, ShipParticulars, SourceKind, StageEntry, VoyageDataset,
};

/// Correlation between onboard and hindcast longitudinal wind below which
/// the hindcast is taken to be wrong (a flipped sign convention gives a
/// strongly negative value).
pub const INTERPOLATION_ERROR_CORRELATION: f64 = -0.5;
/// Median disagreement (deg) between measured and GPS headings that marks a
/// derivation error.
pub const HEADING_DISAGREEMENT: f64 = 45.0;
/// GPS headings below this speed (m/s) are noise.
const HEADING_MIN_SOG: f64 = 1.0;
/// Reference height (m) for the wind correction when particulars give only
/// the anemometer height.
const DEFAULT_WIND_REFERENCE_HEIGHT: f64 = 10.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_STAGE_FAILURE: i32 = 2;

/// Everything read before processing starts. Any failure here is fatal.
pub struct Inputs {
    pub units: UnitMap,
    pub dataset: VoyageDataset,
    pub ingest: StageEntry,
    pub particulars: Option<ShipParticulars>,
    pub particulars_entry: Option<StageEntry>,
    pub grids: Vec<(PathBuf, HindcastGrid)>,
    pub hydrostatic_table: Option<HydrostaticTable>,
    pub resistance: Vec<Box<dyn ResistanceModel>>,
}

pub fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    let schema = match &config.schema {
        Some(p) => load_schema(p)?,
        None => vars::default_schema(),
    };
    let units = unit_map_from(&config.units)?;
    let ship = config
        .ship_data
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("configuration has no `ship_data`".into()))?;
    let (dataset, ingest) = load_ship_csv(ship, &schema, &units)?;
    let dataset = dataset.with_source_kind(config.source_kind);
    let (particulars, particulars_entry) = match &config.particulars {
        Some(p) => {
            let (sp, e) = load_particulars(p)?;
            (Some(sp), Some(e))
        }
        None => (None, None),
    };
    let grids = config
        .hindcast
        .iter()
        .map(|p| load_hindcast(p).map(|g| (p.clone(), g)))
        .collect::<Result<Vec<_>>>()?;
    let hydrostatic_table = config.hydrostatic_table.as_deref().map(HydrostaticTable::load).transpose()?;
    let mut resistance: Vec<Box<dyn ResistanceModel>> = Vec::new();
    for (name, path) in &config.resistance_tables {
        resistance.push(Box::new(load_coefficient_table(path)?.named(name.clone())));
    }
    Ok(Inputs {
        units,
        dataset,
        ingest,
        particulars,
        particulars_entry,
        grids,
        hydrostatic_table,
        resistance,
    })
}

/// Result of the processing stages.
pub struct Processed {
    pub dataset: VoyageDataset,
    pub report: ProcessingReport,
    /// A stage failed or the error loop did not resolve.
    pub stage_failure: bool,
}

struct Runner<'a> {
    config: &'a PipelineConfig,
    inputs: &'a Inputs,
    ds: VoyageDataset,
    report: ProcessingReport,
    failed: bool,
}

#[derive(Debug, Default, Clone, Copy)]
struct Signals {
    interpolation_error: bool,
    heading_error: bool,
    angular_faults: usize,
}

impl Runner<'_> {
    fn push(&mut self, entry: StageEntry) {
        self.report.push(entry);
    }

    fn apply(&mut self, stage: &str, res: Result<(VoyageDataset, StageEntry)>) {
        match res {
            Ok((ds, entry)) => {
                self.ds = ds;
                self.push(entry);
            }
            Err(e) => self.fail(stage, &e),
        }
    }

    fn fail(&mut self, stage: &str, e: &Error) {
        let mut entry = StageEntry::new(stage);
        entry.warn(format!("stage failed: {e}"));
        entry.check(CheckResult::new(format!("{stage}.completed"), false).message(e.to_string()));
        self.push(entry);
        self.failed = true;
    }

    fn skip(&mut self, stage: Stage, reason: &str) {
        self.push(StageEntry::skipped(stage.name(), reason));
    }

    /// `true` when the stage should run; otherwise records why not.
    fn wants(&mut self, stage: Stage, missing: Option<&str>) -> bool {
        if !self.config.stage_enabled(stage) {
            self.skip(stage, "disabled");
            return false;
        }
        if let Some(reason) = missing {
            self.skip(stage, reason);
            return false;
        }
        true
    }

    fn has(&self, name: &str) -> bool {
        self.ds.present_count(name) > 0
    }

    fn has_position(&self) -> bool {
        self.has(vars::LATITUDE) && self.has(vars::LONGITUDE)
    }

    fn steady(&self, variable: &str, default_tolerance: f64) -> SteadyFilterParams {
        SteadyFilterParams {
            window: self.config.steady_window,
            alpha: self.config.steady_alpha,
            gradient_tolerance: self.config.gradient_tolerance_for(variable).unwrap_or(default_tolerance),
            scale: ScaleEstimate::Window,
        }
    }

    fn thresholds(&self) -> (f64, f64) {
        self.inputs
            .particulars
            .as_ref()
            .map_or((DEFAULT_RPM_THRESHOLD, DEFAULT_SOG_THRESHOLD), |p| (p.rpm_threshold, p.sog_threshold))
    }

    fn heights(&self) -> Option<(f64, f64)> {
        let p = self.inputs.particulars.as_ref()?;
        let z_a = p.anemometer_height?;
        Some((p.wind_reference_height.unwrap_or(DEFAULT_WIND_REFERENCE_HEIGHT), z_a))
    }

    fn regularize(&mut self) {
        if self.wants(Stage::Regularize, None) {
            let r = regularize(&self.ds, self.config.sampling_interval);
            self.apply("regularize", r);
        }
    }

    fn trips(&mut self) {
        if !self.wants(Stage::Trips, None) {
            return;
        }
        let (rpm, sog) = self.thresholds();
        let c = self.config;
        let mut r = segment(&self.ds, c.trip_method, &c.state_variable, rpm, sog, c.pad_samples);
        if let Err(Error::StateVariableUnavailable(why)) = &r {
            let mut entry = StageEntry::new("trips");
            entry.warn(format!("state variable unusable ({why}); segmenting by rpm/sog thresholds"));
            self.push(entry);
            r = segment(&self.ds, TripMethod::Thresholds, &c.state_variable, rpm, sog, c.pad_samples);
        }
        self.apply("trips", r.map(|(ds, _, e)| (ds, e)));
    }

    fn ais(&mut self) {
        let reason = (self.ds.source_kind() != SourceKind::Ais).then_some("source is not AIS");
        if !self.wants(Stage::Ais, reason) {
            return;
        }
        if self.has_position() && self.has(vars::SOG) {
            let r = ais_speed_consistency(&self.ds, self.config.ais_tolerance, self.config.ais_window);
            self.apply("ais", r);
        }
        if self.has(vars::NAV_STATUS) {
            let r = ais_status_check(&self.ds, self.config.port_speed_threshold);
            self.apply("ais_status", r);
        }
    }

    fn gps_clean(&mut self) {
        let reason = (!self.has_position()).then_some("no GPS positions");
        if self.wants(Stage::GpsClean, reason) {
            let lat = self.steady(vars::LATITUDE, GPS_RATE_TOLERANCE).with_scale(ScaleEstimate::SeriesRobust);
            let lon = self.steady(vars::LONGITUDE, GPS_RATE_TOLERANCE).with_scale(ScaleEstimate::SeriesRobust);
            let r = clean_gps(&self.ds, &lat, &lon);
            self.apply("gps_clean", r);
        }
    }

    fn interpolate(&mut self, flip_wind: bool) {
        let reason = if !self.has_position() {
            Some("no GPS positions")
        } else if self.inputs.grids.is_empty() {
            Some("no hindcast grids configured")
        } else {
            None
        };
        if !self.wants(Stage::Interpolate, reason) {
            return;
        }
        let inputs = self.inputs;
        for (path, grid) in &inputs.grids {
            let mut grid = grid.clone();
            if flip_wind {
                for v in grid.variables.iter_mut().filter(|v| v.name.starts_with("wind") && !v.is_angular()) {
                    v.convention = v.convention.map(|c| c.flipped());
                }
            }
            let r = interpolate(&grid, &self.ds, self.config.interpolation_order, self.config.mask_policy);
            let r = r.map(|(ds, mut e)| {
                e.correction(format!("grid {}", path.display()));
                if flip_wind {
                    e.correction("wind vector convention flipped after an interpolation error");
                }
                (ds, e)
            });
            self.apply("interpolate", r);
            if grid.timestamps.len() >= 3 {
                if let Ok(e) = order_check(&grid, &self.ds, self.config.mask_policy) {
                    self.push(e);
                }
            }
        }
    }

    fn derive(&mut self, source: HeadingSource) {
        if self.wants(Stage::Derive, None) {
            let r = derive(&self.ds, source, self.heights());
            self.apply("derive", r);
        }
    }

    /// Median disagreement between measured heading and GPS track while
    /// under way.
    fn heading_disagreement(&self) -> Option<f64> {
        let (h, g, s) = (
            self.ds.real(vars::HEADING)?,
            self.ds.real(vars::GPS_HEADING)?,
            self.ds.real(vars::SOG)?,
        );
        let d: Vec<f64> = (0..self.ds.len())
            .filter(|&i| s[i].is_some_and(|v| v > HEADING_MIN_SOG))
            .filter_map(|i| Some(angular_distance(h[i]?, g[i]?)))
            .collect();
        median(&d)
    }

    fn validate(&mut self) -> Signals {
        let mut sig = Signals::default();
        if !self.config.stage_enabled(Stage::Validate) {
            self.skip(Stage::Validate, "disabled");
            return sig;
        }
        let c = self.config;
        let (ds, e) = check_power_identity(&self.ds, c.power_tolerance);
        self.ds = ds;
        self.push(e);
        if let Some(p) = self.inputs.particulars.clone() {
            let (ds, e) = check_speed_power(&self.ds, &p);
            self.ds = ds;
            self.push(e);
        }
        let e = check_stw(&self.ds, c.stw_tolerance);
        self.push(e);
        let (ds, e) = detect_angular_fault(&self.ds, vars::REL_WIND_DIR, vars::HC_REL_WIND_DIR);
        sig.angular_faults = e.checks.first().and_then(|c| c.metrics.get("flagged")).map_or(0, |&n| n as usize);
        self.ds = ds;
        self.push(e);
        let e = check_longitudinal_wind(&self.ds, c.wind_tolerance);
        sig.interpolation_error = e
            .checks
            .iter()
            .filter_map(|c| c.metrics.get("correlation"))
            .any(|&r| r < INTERPOLATION_ERROR_CORRELATION);
        self.push(e);
        if let Some(d) = self.heading_disagreement() {
            sig.heading_error = d > HEADING_DISAGREEMENT;
            let mut e = StageEntry::new("heading_check");
            e.check(
                CheckResult::new("heading_vs_gps", !sig.heading_error)
                    .metric("median_disagreement_deg", d)
                    .message("report only"),
            );
            self.push(e);
        }
        sig
    }

    /// Interpolation, derivation and validation, repeated while validation
    /// implicates one of the first two and a remedy is left to try.
    fn error_loop(&mut self) {
        let mut flip = false;
        let mut source = HeadingSource::Measured;
        let mut fixed_dir_used = false;
        self.interpolate(flip);
        self.derive(source);
        let mut rounds = 0;
        loop {
            let sig = self.validate();
            let mut redo_interp = false;
            let mut redo_derive = false;
            let mut unresolved = Vec::new();
            if sig.interpolation_error {
                if flip {
                    unresolved.push("interpolation");
                } else {
                    flip = true;
                    redo_interp = true;
                }
            }
            if sig.heading_error {
                if source == HeadingSource::Gps {
                    unresolved.push("derivation (heading)");
                } else {
                    source = HeadingSource::Gps;
                    redo_derive = true;
                }
            }
            if sig.angular_faults > 0 && !fixed_dir_used {
                fixed_dir_used = true;
                redo_derive = true;
            }
            let mut entry = StageEntry::new("error_loop");
            if !(redo_interp || redo_derive) {
                let ok = unresolved.is_empty();
                entry.check(CheckResult::new("processing_errors", ok).metric("rounds", rounds as f64).message(if ok {
                    "none outstanding".to_string()
                } else {
                    format!("unresolved: {}", unresolved.join(", "))
                }));
                self.failed |= !ok;
                self.push(entry);
                return;
            }
            if rounds == self.config.max_iterations {
                entry.check(
                    CheckResult::new("processing_errors", false)
                        .metric("rounds", rounds as f64)
                        .message("errors remain after the maximum number of iterations"),
                );
                self.failed = true;
                self.push(entry);
                return;
            }
            rounds += 1;
            entry.correction(format!(
                "round {rounds}: redo {}",
                if redo_interp { "interpolation and derivation" } else { "derivation" }
            ));
            self.push(entry);
            if redo_interp {
                self.interpolate(flip);
            }
            self.derive(source);
        }
    }

    fn draft(&mut self) {
        let reason = if !(self.has(vars::DRAFT_FORE) && self.has(vars::DRAFT_AFT)) {
            Some("draft sensors absent")
        } else if self.ds.trips().is_empty() {
            Some("no trips")
        } else {
            None
        };
        if !self.wants(Stage::Draft, reason) {
            return;
        }
        let c = self.config;
        let tol = c
            .gradient_tolerance_for(vars::DRAFT_AFT)
            .or(c.gradient_tolerance_for(vars::DRAFT_FORE))
            .unwrap_or(0.0);
        let params = self.steady(vars::DRAFT_AFT, tol);
        for trip in self.ds.trips() {
            let events = match c.draft_method {
                DraftMethod::Simple => Vec::new(),
                DraftMethod::Ramp | DraftMethod::Auto => detect_draft_events(&self.ds, trip, &params),
            };
            let r = fix_draft_ramp(&self.ds, trip, &events, c.draft_n_avg);
            self.apply("draft", r);
        }
        if let Some(p) = self.inputs.particulars.clone() {
            let replace = self.ds.source_kind() != SourceKind::InService;
            let (ds, e) = check_draft_ratios(&self.ds, &p, VoyageKind::Unknown, replace);
            self.ds = ds;
            self.push(e);
        }
    }

    fn hydrostatics(&mut self) {
        let reason = if self.inputs.particulars.is_none() {
            Some("no ship particulars")
        } else if !(self.has(vars::DRAFT_FORE) && self.has(vars::DRAFT_AFT)) {
            Some("draft sensors absent")
        } else {
            None
        };
        if self.wants(Stage::Hydrostatics, reason) {
            let p = self.inputs.particulars.as_ref().expect("checked");
            let r = apply_hydrostatics(&self.ds, p, self.inputs.hydrostatic_table.as_ref());
            self.apply("hydrostatics", r);
        }
    }

    fn resistance(&mut self) {
        let reason = self.inputs.resistance.is_empty().then_some("no resistance models configured");
        if self.wants(Stage::Resistance, reason) {
            let (ds, e) = resistance_components(&self.ds, &self.inputs.resistance);
            self.ds = ds;
            self.push(e);
        }
    }

    fn clean(&mut self) {
        if !self.wants(Stage::Clean, None) {
            return;
        }
        let c = self.config;
        let params = ContextualParams {
            repeat_run: c.repeat_run,
            dropout_max: c.dropout_max,
            spike_scale: c.spike_scale,
            variables: None,
        };
        let (ds, e) = contextual_filter(&self.ds, &params);
        self.ds = ds;
        self.push(e);
        let rpm = self.steady(vars::SHAFT_RPM, 0.0);
        let sog = relaxed(&self.steady(vars::SOG, 0.0));
        let (ds, e) = quasi_steady_filter(&self.ds, &rpm, &sog);
        self.ds = ds;
        self.push(e);
        if !c.pca_features.is_empty() {
            let r = pca_fit(&self.ds, &c.pca_features, c.pca_components, c.pca_quantile)
                .and_then(|det| pca_score(&det, &self.ds));
            self.apply("pca", r);
        }
    }
}

/// Runs every stage on loaded inputs.
pub fn process(config: &PipelineConfig, inputs: &Inputs) -> Processed {
    let mut report = ProcessingReport::default();
    report.push(inputs.ingest.clone());
    if let Some(e) = &inputs.particulars_entry {
        report.push(e.clone());
    }
    let mut r = Runner {
        config,
        inputs,
        ds: inputs.dataset.clone(),
        report,
        failed: false,
    };
    r.regularize();
    r.trips();
    r.ais();
    r.gps_clean();
    r.error_loop();
    r.draft();
    r.hydrostatics();
    r.resistance();
    r.clean();
    Processed {
        dataset: r.ds,
        report: r.report,
        stage_failure: r.failed,
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub timestamp_header: bool,
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub processed: Processed,
    pub input_rows: usize,
}

pub const PROCESSED_CSV: &str = "processed.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const PLOT_DIR: &str = "plotdata";

fn write(path: &Path, content: &[u8]) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Loads inputs, processes, and writes processed.csv, report.txt,
/// report.json and the plot-data files. `Err` means a fatal ingest or
/// configuration error.
pub fn run_pipeline(config: &PipelineConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let inputs = load_inputs(config)?;
    let processed = process(config, &inputs);
    write_outputs(&processed, &inputs, opts)?;
    Ok(RunOutcome {
        exit_code: if processed.stage_failure { EXIT_STAGE_FAILURE } else { EXIT_OK },
        input_rows: inputs.dataset.len(),
        processed,
    })
}

pub fn write_outputs(processed: &Processed, inputs: &Inputs, opts: &RunOptions) -> Result<()> {
    let out = &opts.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out.display())))?;
    let mut csv = Vec::new();
    shipdata_core::ingest::write_ship_csv(&processed.dataset, &mut csv, &inputs.units)?;
    write(&out.join(PROCESSED_CSV), &csv)?;
    let mut text = String::new();
    if opts.timestamp_header {
        text.push_str(&format!("# generated {}\n", chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)));
    }
    text.push_str(&processed.report.to_text());
    write(&out.join(REPORT_TXT), text.as_bytes())?;
    write(&out.join(REPORT_JSON), processed.report.to_json()?.as_bytes())?;
    crate::plot::emit_plotdata(&processed.dataset, inputs.particulars.as_ref(), &out.join(PLOT_DIR))?;
    Ok(())
}
