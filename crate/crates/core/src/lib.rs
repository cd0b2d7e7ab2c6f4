//! Processing stages that turn raw ship operational time series into a
//! validated, cleaned and feature-enriched dataset.
//!
//! Every stage takes a [`VoyageDataset`] by reference and returns a new one
//! together with a [`StageEntry`] describing what it did. Flags only ever
//! accumulate.

pub mod cleaning;
pub mod corrections;
pub mod error;
pub mod features;
pub mod hindcast;
pub mod ingest;
pub mod model;
pub mod report;
pub mod stats;
pub mod tables;
pub mod timeline;
pub mod validation;
pub mod vars;

pub use error::{Error, Result};
pub use model::{
    new_dataset, CalmWaterCurve, QualityFlag, Sample, ShipParticulars, SourceKind, Timestamp, VariableKind,
    VariableRole, VariableSpec, VoyageDataset,
};
pub use report::{CheckResult, ProcessingReport, StageEntry};
pub use tables::ShipType;
