//! Plain-text hindcast grid reader.
//!
//! ```text
//! #var <name> <unit>            (one line per variable)
//! #conv <name> from|toward      (optional, per variable)
//! #lat <comma-list>
//! #lon <comma-list>
//! #time <comma-list of ISO-8601>
//! <body>
//! ```
//!
//! The body has one line per (variable, time, latitude), variable-major,
//! each with one comma-separated value per longitude. `M` marks a masked
//! cell. Blank lines may separate (variable, time) slices; when present they
//! are checked.

use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Timestamp;

use super::{format_timestamp, parse_timestamp, read_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionConvention {
    /// Meteorological: direction the wind/waves come from.
    From,
    /// Vector: direction of travel.
    Toward,
}

impl DirectionConvention {
    pub fn flipped(self) -> Self {
        match self {
            DirectionConvention::From => DirectionConvention::Toward,
            DirectionConvention::Toward => DirectionConvention::From,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridVariable {
    pub name: String,
    pub unit: String,
    pub convention: Option<DirectionConvention>,
    /// (time, lat, lon)
    pub values: Array3<f64>,
    /// true = invalid / land
    pub mask: Array3<bool>,
}

impl GridVariable {
    pub fn is_angular(&self) -> bool {
        matches!(self.unit.to_ascii_lowercase().as_str(), "deg" | "degree" | "degrees")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HindcastGrid {
    pub variables: Vec<GridVariable>,
    pub latitudes: Vec<f64>,
    pub longitudes: Vec<f64>,
    pub timestamps: Vec<Timestamp>,
}

impl HindcastGrid {
    pub fn variable(&self, name: &str) -> Option<&GridVariable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.timestamps.len(), self.latitudes.len(), self.longitudes.len())
    }

    pub fn validate(&self) -> Result<()> {
        strictly_ascending("lat", &self.latitudes)?;
        strictly_ascending("lon", &self.longitudes)?;
        if self.timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridShape("time axis is not strictly increasing".into()));
        }
        let shape = self.shape();
        for v in &self.variables {
            if v.values.dim() != shape || v.mask.dim() != shape {
                return Err(Error::GridShape(format!(
                    "variable `{}` has shape {:?}, expected {:?}",
                    v.name,
                    v.values.dim(),
                    shape
                )));
            }
        }
        Ok(())
    }

    /// Renders the grid in the text format read by [`parse_hindcast`].
    pub fn to_text(&self) -> String {
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        for v in &self.variables {
            out.push_str(&format!("#var {} {}\n", v.name, v.unit));
            if let Some(c) = v.convention {
                let c = match c {
                    DirectionConvention::From => "from",
                    DirectionConvention::Toward => "toward",
                };
                out.push_str(&format!("#conv {} {c}\n", v.name));
            }
        }
        out.push_str(&format!("#lat {}\n", join(&self.latitudes)));
        out.push_str(&format!("#lon {}\n", join(&self.longitudes)));
        let times: Vec<String> = self.timestamps.iter().map(|&t| format_timestamp(t)).collect();
        out.push_str(&format!("#time {}\n", times.join(",")));
        let (nt, nlat, nlon) = self.shape();
        for v in &self.variables {
            for t in 0..nt {
                for i in 0..nlat {
                    let row: Vec<String> = (0..nlon)
                        .map(|j| {
                            if v.mask[[t, i, j]] {
                                "M".to_string()
                            } else {
                                v.values[[t, i, j]].to_string()
                            }
                        })
                        .collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                out.push('\n');
            }
        }
        out
    }
}

fn strictly_ascending(axis: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::GridShape(format!("{axis} axis is empty")));
    }
    if let Some(k) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::GridShape(format!(
            "{axis} axis is not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

pub fn load_hindcast(path: impl AsRef<Path>) -> Result<HindcastGrid> {
    let path = path.as_ref();
    parse_hindcast(path, &read_text(path)?)
}

pub fn parse_hindcast(path: &Path, text: &str) -> Result<HindcastGrid> {
    let mut vars: Vec<(String, String)> = Vec::new();
    let mut convs: Vec<(String, DirectionConvention, usize)> = Vec::new();
    let mut lat = None;
    let mut lon = None;
    let mut time = None;
    // Body rows grouped into blocks separated by blank lines.
    let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
    let mut saw_blank_separator = false;

    let numbers = |line: usize, s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, line, format!("bad axis value `{}`", x.trim())))
            })
            .collect()
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if blocks.last().is_some_and(|b| !b.is_empty()) {
                blocks.push(Vec::new());
                saw_blank_separator = true;
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if rest.starts_with(' ') || rest.starts_with('#') || rest.is_empty() {
                continue; // comment
            }
            let (key, arg) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let arg = arg.trim();
            match key {
                "var" => {
                    let mut it = arg.split_whitespace();
                    let name = it
                        .next()
                        .ok_or_else(|| Error::parse(path, line_no, "#var needs a name"))?;
                    let unit = it.next().unwrap_or("");
                    vars.push((name.to_string(), unit.to_string()));
                }
                "conv" => {
                    let mut it = arg.split_whitespace();
                    let (Some(name), Some(c)) = (it.next(), it.next()) else {
                        return Err(Error::parse(path, line_no, "#conv needs `<name> from|toward`"));
                    };
                    let c = match c {
                        "from" => DirectionConvention::From,
                        "toward" | "to" => DirectionConvention::Toward,
                        other => {
                            return Err(Error::parse(path, line_no, format!("unknown convention `{other}`")))
                        }
                    };
                    convs.push((name.to_string(), c, line_no));
                }
                "lat" => lat = Some(numbers(line_no, arg)?),
                "lon" => lon = Some(numbers(line_no, arg)?),
                "time" => {
                    let ts: Result<Vec<Timestamp>> = arg
                        .split(',')
                        .map(|s| {
                            parse_timestamp(s).ok_or_else(|| {
                                Error::parse(path, line_no, format!("bad timestamp `{}`", s.trim()))
                            })
                        })
                        .collect();
                    time = Some(ts?);
                }
                other => {
                    return Err(Error::parse(path, line_no, format!("unknown header directive `#{other}`")))
                }
            }
            continue;
        }
        blocks.last_mut().expect("non-empty").push((line_no, line));
    }

    let missing = |what: &str| Error::parse(path, 0, format!("missing `#{what}` header"));
    let latitudes = lat.ok_or_else(|| missing("lat"))?;
    let longitudes = lon.ok_or_else(|| missing("lon"))?;
    let timestamps = time.ok_or_else(|| missing("time"))?;
    if vars.is_empty() {
        return Err(missing("var"));
    }
    strictly_ascending("lat", &latitudes)?;
    strictly_ascending("lon", &longitudes)?;
    if let Some(k) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::GridShape(format!("time axis is not strictly increasing at index {}", k + 1)));
    }

    let (nt, nlat, nlon) = (timestamps.len(), latitudes.len(), longitudes.len());
    let slice_name = |s: usize| {
        let (v, t) = (s / nt, s % nt);
        format!("variable `{}` time {} ({})", vars[v].0, t, format_timestamp(timestamps[t]))
    };
    while blocks.last().is_some_and(|b| b.is_empty()) {
        blocks.pop();
    }
    let n_slices = vars.len() * nt;
    let rows: Vec<(usize, &str)> = if saw_blank_separator {
        for (s, b) in blocks.iter().enumerate() {
            if s >= n_slices {
                return Err(Error::GridShape(format!(
                    "{} slices in body, header declares {n_slices}",
                    blocks.len()
                )));
            }
            if b.len() != nlat {
                return Err(Error::GridShape(format!(
                    "{} has {} rows, expected {nlat} (one per latitude)",
                    slice_name(s),
                    b.len()
                )));
            }
        }
        if blocks.len() != n_slices {
            return Err(Error::GridShape(format!(
                "{} missing: body has {} slices, header declares {n_slices}",
                slice_name(blocks.len()),
                blocks.len()
            )));
        }
        blocks.into_iter().flatten().collect()
    } else {
        let rows: Vec<(usize, &str)> = blocks.into_iter().flatten().collect();
        if rows.len() != n_slices * nlat {
            let s = (rows.len() / nlat).min(n_slices.saturating_sub(1));
            return Err(Error::GridShape(format!(
                "body has {} rows, expected {}; first incomplete slice is {}",
                rows.len(),
                n_slices * nlat,
                slice_name(s)
            )));
        }
        rows
    };

    let mut variables = Vec::with_capacity(vars.len());
    for (v, (name, unit)) in vars.iter().enumerate() {
        let mut values = Array3::<f64>::zeros((nt, nlat, nlon));
        let mut mask = Array3::<bool>::from_elem((nt, nlat, nlon), false);
        for t in 0..nt {
            for i in 0..nlat {
                let (line_no, row) = rows[(v * nt + t) * nlat + i];
                let cells: Vec<&str> = row.split(',').map(str::trim).collect();
                if cells.len() != nlon {
                    return Err(Error::GridShape(format!(
                        "line {line_no} in {} has {} values, expected {nlon}",
                        slice_name(v * nt + t),
                        cells.len()
                    )));
                }
                for (j, cell) in cells.iter().enumerate() {
                    if *cell == "M" {
                        mask[[t, i, j]] = true;
                        values[[t, i, j]] = f64::NAN;
                    } else {
                        values[[t, i, j]] = cell.parse::<f64>().map_err(|_| {
                            Error::parse(
                                path,
                                line_no,
                                format!("unknown token `{cell}` at lat index {i}, lon index {j}"),
                            )
                        })?;
                    }
                }
            }
        }
        variables.push(GridVariable {
            name: name.clone(),
            unit: unit.clone(),
            convention: None,
            values,
            mask,
        });
    }
    for (name, c, line_no) in convs {
        let var = variables
            .iter_mut()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::parse(path, line_no, format!("#conv for undeclared variable `{name}`")))?;
        var.convention = Some(c);
    }
    Ok(HindcastGrid {
        variables,
        latitudes,
        longitudes,
        timestamps,
    })
}
