//! Batch driver: loads a configuration, runs the processing stages in
//! order and writes the processed data, reports and plot-data files.

pub mod pipeline;
pub mod plot;

use std::path::Path;

use shipdata_core::ingest::{read_ship_csv, PipelineConfig, UnitMap};
use shipdata_core::{vars, Result, VariableSpec, VoyageDataset};

pub use pipeline::{
    load_inputs, process, run_pipeline, write_outputs, Inputs, Processed, RunOptions, RunOutcome, EXIT_FATAL,
    EXIT_OK, EXIT_STAGE_FAILURE, PROCESSED_CSV, REPORT_JSON, REPORT_TXT,
};
pub use plot::emit_plotdata;

/// Reads a processed.csv back. Columns outside the configured schema are
/// taken as linear, or angular when the name marks a direction.
pub fn load_processed(path: &Path, config: &PipelineConfig, units: &UnitMap) -> Result<VoyageDataset> {
    let mut schema = match &config.schema {
        Some(p) => shipdata_core::ingest::load_schema(p)?,
        None => vars::default_schema(),
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| shipdata_core::Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let header = text.lines().next().unwrap_or_default();
    for name in header.split(',').map(str::trim).skip(1) {
        if name == "trip_id" || name == "flags" || schema.iter().any(|s| s.name == name) {
            continue;
        }
        let angular = name.ends_with("_dir") || name.ends_with("heading") || name.ends_with("direction");
        schema.push(if angular { VariableSpec::angular(name) } else { VariableSpec::linear(name, "") });
    }
    Ok(read_ship_csv(text.as_bytes(), path, &schema, units)?.0)
}
