use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    normalize_longitude, new_dataset, QualityFlag, Sample, VariableKind, VariableRole,
    VariableSpec, VoyageDataset,
};
use crate::report::{CheckResult, StageEntry};
use crate::vars;

use super::{format_timestamp, parse_timestamp, unit_factor};

const FLAGS_COLUMN: &str = "flags";
const TRIP_COLUMN: &str = "trip_id";

/// Source unit per CSV column. Columns not listed are taken to be in the
/// internal unit already.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnitMap {
    units: BTreeMap<String, (String, f64)>,
}

impl UnitMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, column: impl Into<String>, unit: impl Into<String>) -> Result<()> {
        let unit = unit.into();
        let factor = unit_factor(&unit)?;
        self.units.insert(column.into(), (unit, factor));
        Ok(())
    }

    pub fn with(mut self, column: &str, unit: &str) -> Result<Self> {
        self.insert(column, unit)?;
        Ok(self)
    }

    pub fn factor(&self, column: &str) -> f64 {
        self.units.get(column).map_or(1.0, |(_, f)| *f)
    }

    pub fn to_si(&self, column: &str, value: f64) -> f64 {
        value * self.factor(column)
    }

    pub fn from_si(&self, column: &str, value: f64) -> f64 {
        value / self.factor(column)
    }
}

/// Loads a ship data CSV. The first column must be `timestamp`.
pub fn load_ship_csv(
    path: impl AsRef<Path>,
    schema: &[VariableSpec],
    units: &UnitMap,
) -> Result<(VoyageDataset, StageEntry)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ship_csv(file, path, schema, units)
}

pub fn read_ship_csv<R: std::io::Read>(
    reader: R,
    path: &Path,
    schema: &[VariableSpec],
    units: &UnitMap,
) -> Result<(VoyageDataset, StageEntry)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::parse(path, line, e.to_string())
    };
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(|h| h.to_ascii_lowercase()) != Some(vars::TIMESTAMP.to_string()) {
        return Err(Error::MissingVariable(vars::TIMESTAMP.into()));
    }

    let mut entry = StageEntry::new("ingest");
    let specs: BTreeMap<&str, &VariableSpec> = schema.iter().map(|s| (s.name.as_str(), s)).collect();
    let mut used = Vec::new();
    let mut flag_col = None;
    let mut trip_col = None;
    for (j, name) in header.iter().enumerate().skip(1) {
        match name.as_str() {
            FLAGS_COLUMN => flag_col = Some(j),
            TRIP_COLUMN => trip_col = Some(j),
            n if specs.contains_key(n) => used.push((j, specs[n])),
            n => entry.warn(format!("column `{n}` is not in the schema and was skipped")),
        }
    }

    let mut missing: BTreeMap<&str, usize> = BTreeMap::new();
    let mut bad: BTreeMap<&str, usize> = BTreeMap::new();
    let mut samples = Vec::new();
    let mut pending_flags = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let Some(ts) = rec.get(0).and_then(parse_timestamp) else {
            entry.warn(format!("line {line}: unparseable timestamp, row skipped"));
            continue;
        };
        let mut sample = Sample::new(ts);
        for &(j, spec) in &used {
            let cell = rec.get(j).unwrap_or("");
            let name = spec.name.as_str();
            if cell.is_empty() {
                *missing.entry(name).or_default() += 1;
                continue;
            }
            if spec.kind == VariableKind::Text {
                sample.text.insert(spec.name.clone(), cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(x) if x.is_finite() => {
                    let x = units.to_si(name, x);
                    if name == vars::LATITUDE && !(-90.0..=90.0).contains(&x) {
                        pending_flags.push((ts, name, x));
                        continue;
                    }
                    let x = if name == vars::LONGITUDE { normalize_longitude(x) } else { x };
                    sample.values.insert(spec.name.clone(), x);
                }
                _ => *bad.entry(name).or_default() += 1,
            }
        }
        if let Some(j) = flag_col {
            for token in rec.get(j).unwrap_or("").split(';').filter(|t| !t.trim().is_empty()) {
                sample.flags.insert(token.parse::<QualityFlag>()?);
            }
        }
        if let Some(j) = trip_col {
            let cell = rec.get(j).unwrap_or("");
            if !cell.is_empty() {
                sample.trip_id = Some(
                    cell.parse()
                        .map_err(|_| Error::parse(path, line, format!("bad trip id `{cell}`")))?,
                );
            }
        }
        samples.push(sample);
    }

    let total = samples.len();
    for &(_, spec) in &used {
        let n_bad = bad.get(spec.name.as_str()).copied().unwrap_or(0);
        if spec.role.is_bare_minimum() && total > 0 && 2 * n_bad > total {
            return Err(Error::TooManyUnparseable {
                column: spec.name.clone(),
                bad: n_bad,
                total,
            });
        }
    }

    // Out-of-range latitudes are dropped and flagged rather than rejected.
    for (ts, name, x) in &pending_flags {
        if let Some(s) = samples.iter_mut().find(|s| s.timestamp == *ts) {
            s.flags.insert(QualityFlag::InvalidRange);
        }
        entry.count_flag(QualityFlag::InvalidRange);
        entry.detail(Some(*ts), name, None, Some(*x), "invalid_range");
    }

    let mut check = CheckResult::new("cell_parse", bad.is_empty()).metric("rows", total as f64);
    for &(_, spec) in &used {
        let n = spec.name.as_str();
        check = check
            .metric(&format!("missing.{n}"), missing.get(n).copied().unwrap_or(0) as f64)
            .metric(&format!("unparseable.{n}"), bad.get(n).copied().unwrap_or(0) as f64);
    }
    entry.check(check);

    let ds = new_dataset(schema.to_vec(), samples)?;
    Ok((ds, entry))
}

/// Writes a dataset back to CSV, converting SI values to the source units.
/// Floats use the shortest representation that reads back bit-identically.
pub fn write_ship_csv<W: std::io::Write>(ds: &VoyageDataset, writer: W, units: &UnitMap) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    let mut header = vec![vars::TIMESTAMP.to_string()];
    header.extend(ds.schema().iter().map(|s| s.name.clone()));
    header.push(TRIP_COLUMN.into());
    header.push(FLAGS_COLUMN.into());
    w.write_record(&header).map_err(io)?;
    for i in 0..ds.len() {
        let mut row = Vec::with_capacity(header.len());
        row.push(format_timestamp(ds.timestamps()[i]));
        for spec in ds.schema() {
            let cell = match spec.kind {
                VariableKind::Text => ds.text(&spec.name).and_then(|c| c[i].clone()).unwrap_or_default(),
                _ => ds
                    .value(i, &spec.name)
                    .map(|x| format!("{}", units.from_si(&spec.name, x)))
                    .unwrap_or_default(),
            };
            row.push(cell);
        }
        row.push(ds.trip_id(i).map(|t| t.to_string()).unwrap_or_default());
        let flags: Vec<&str> = ds.flags(i).iter().map(|f| f.as_str()).collect();
        row.push(flags.join(";"));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Schema CSV: `name,unit,kind,valid_min,valid_max,role[,dead_value]`.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<VariableSpec>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let get = |k: usize| rec.get(k).unwrap_or("").to_string();
        let opt = |k: usize| -> Result<Option<f64>> {
            let v = get(k);
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse()
                    .map(Some)
                    .map_err(|_| Error::parse(path, line, format!("bad number `{v}`")))
            }
        };
        let kind = match get(2).to_ascii_lowercase().as_str() {
            "linear" | "" => VariableKind::Linear,
            "angular" => VariableKind::Angular,
            "text" => VariableKind::Text,
            k => return Err(Error::parse(path, line, format!("unknown kind `{k}`"))),
        };
        let spec = VariableSpec {
            name: get(0),
            unit: get(1),
            kind,
            valid_min: opt(3)?,
            valid_max: opt(4)?,
            role: get(5).parse::<VariableRole>()?,
            dead_value: opt(6)?,
        };
        spec.validate()?;
        if !names.insert(spec.name.clone()) {
            return Err(Error::DuplicateVariable(spec.name));
        }
        out.push(spec);
    }
    Ok(out)
}
