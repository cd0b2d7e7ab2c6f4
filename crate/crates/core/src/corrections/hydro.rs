use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ShipParticulars, VariableSpec, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::tables::WsaFormula;
use crate::vars;

/// Drafts above this multiple of the design draft are outside the range the
/// approximate formulas were fitted on.
const DRAFT_WARN_FACTOR: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hydrostatics {
    pub mean_draft: f64,
    pub trim: f64,
    pub displacement_volume: f64,
    pub wetted_surface: f64,
}

/// Displacement and wetted surface tabulated on a full (draft, trim) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HydrostaticTable {
    drafts: Vec<f64>,
    trims: Vec<f64>,
    /// Row-major over (draft, trim): (displacement, wsa).
    values: Vec<(f64, f64)>,
}

impl HydrostaticTable {
    /// Builds a table from (draft, trim, displacement, wsa) rows. Every
    /// draft must appear with every trim.
    pub fn from_rows(rows: &[(f64, f64, f64, f64)]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("hydrostatic table is empty".into()));
        }
        let uniq = |f: fn(&(f64, f64, f64, f64)) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let drafts = uniq(|r| r.0);
        let trims = uniq(|r| r.1);
        if drafts.len() * trims.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "hydrostatic table has {} rows but {} drafts x {} trims",
                rows.len(),
                drafts.len(),
                trims.len()
            )));
        }
        let mut values = vec![(f64::NAN, f64::NAN); rows.len()];
        for r in rows {
            if !(r.2 > 0.0 && r.3 > 0.0) {
                return Err(Error::InvalidInput(format!("non-positive hydrostatics at draft {}", r.0)));
            }
            let i = drafts.partition_point(|&d| d < r.0);
            let j = trims.partition_point(|&t| t < r.1);
            values[i * trims.len() + j] = (r.2, r.3);
        }
        if values.iter().any(|v| v.0.is_nan()) {
            return Err(Error::InvalidInput("hydrostatic table has duplicate (draft, trim) rows".into()));
        }
        Ok(Self { drafts, trims, values })
    }

    /// Reads a CSV with columns draft_m, trim_m, displacement_m3, wsa_m2.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers().map_err(|e| Error::InvalidInput(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidInput(format!("{}: missing column {name}", path.display())))
        };
        let cols = [col("draft_m")?, col("trim_m")?, col("displacement_m3")?, col("wsa_m2")?];
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut v = [0.0; 4];
            for (k, &c) in cols.iter().enumerate() {
                v[k] = rec
                    .get(c)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("{}: bad number in row {rec:?}", path.display())))?;
            }
            rows.push((v[0], v[1], v[2], v[3]));
        }
        Self::from_rows(&rows)
    }

    fn bracket(axis: &[f64], x: f64) -> Option<(usize, usize, f64)> {
        if axis.len() == 1 {
            return (x == axis[0]).then_some((0, 0, 0.0));
        }
        if x < axis[0] || x > axis[axis.len() - 1] {
            return None;
        }
        let i = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1);
        let (a, b) = (axis[i - 1], axis[i]);
        Some((i - 1, i, (x - a) / (b - a)))
    }

    /// Bilinear lookup. A table with a single trim is used for any trim.
    /// Returns `None` outside the tabulated range.
    pub fn lookup(&self, draft: f64, trim: f64) -> Option<(f64, f64)> {
        let (i0, i1, fx) = Self::bracket(&self.drafts, draft)?;
        let (j0, j1, fy) = if self.trims.len() == 1 {
            (0, 0, 0.0)
        } else {
            Self::bracket(&self.trims, trim)?
        };
        let at = |i: usize, j: usize| self.values[i * self.trims.len() + j];
        let lerp = |a: (f64, f64), b: (f64, f64), f: f64| (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f);
        Some(lerp(lerp(at(i0, j0), at(i0, j1), fy), lerp(at(i1, j0), at(i1, j1), fy), fx))
    }
}

fn formula_length(p: &ShipParticulars, f: WsaFormula) -> f64 {
    match f {
        WsaFormula::General => p.lpp.or(p.lwl),
        _ => p.lwl.or(p.lpp),
    }
    .unwrap_or(f64::NAN)
}

/// Displacement volume and wetted surface for one loading condition. Uses
/// the table when it covers the point, otherwise C_B L B T and the
/// ship-type wetted-surface formula. The second value is a warning, if any.
pub fn hydrostatics(
    mean_draft: f64,
    trim: f64,
    particulars: &ShipParticulars,
    table: Option<&HydrostaticTable>,
) -> Result<(Hydrostatics, Option<String>)> {
    if !(mean_draft > 0.0) {
        return Err(Error::InvalidInput(format!("mean draft must be positive, got {mean_draft}")));
    }
    let mut warning = (mean_draft > DRAFT_WARN_FACTOR * particulars.design_draft).then(|| {
        format!(
            "mean draft {mean_draft:.2} m exceeds {DRAFT_WARN_FACTOR} x design draft {:.2} m",
            particulars.design_draft
        )
    });
    if let Some(t) = table {
        if let Some((disp, wsa)) = t.lookup(mean_draft, trim) {
            return Ok((
                Hydrostatics { mean_draft, trim, displacement_volume: disp, wetted_surface: wsa },
                warning,
            ));
        }
        warning.get_or_insert_with(|| format!("draft {mean_draft:.2} m / trim {trim:.2} m outside the hydrostatic table"));
    }
    let formula = particulars.ship_type.wsa_formula();
    let length = formula_length(particulars, formula);
    let disp = particulars.block_coefficient * particulars.length() * particulars.beam * mean_draft;
    Ok((
        Hydrostatics {
            mean_draft,
            trim,
            displacement_volume: disp,
            wetted_surface: formula.wetted_surface(disp, mean_draft, length),
        },
        warning,
    ))
}

/// Writes mean_draft, trim (aft minus fore), displacement_volume and
/// wetted_surface for every sample with both drafts present.
pub fn apply_hydrostatics(
    ds: &VoyageDataset,
    particulars: &ShipParticulars,
    table: Option<&HydrostaticTable>,
) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("hydrostatics");
    let fore = ds.real(vars::DRAFT_FORE).ok_or_else(|| Error::MissingVariable(vars::DRAFT_FORE.into()))?;
    let aft = ds.real(vars::DRAFT_AFT).ok_or_else(|| Error::MissingVariable(vars::DRAFT_AFT.into()))?;
    let n = ds.len();
    let mut cols = [vec![None; n], vec![None; n], vec![None; n], vec![None; n]];
    let mut warned = 0usize;
    for i in 0..n {
        let (Some(f), Some(a)) = (fore[i], aft[i]) else { continue };
        let (m, trim) = (0.5 * (f + a), a - f);
        let Ok((h, w)) = hydrostatics(m, trim, particulars, table) else { continue };
        if let Some(w) = w {
            if warned == 0 {
                entry.warn(w);
            }
            warned += 1;
        }
        for (c, v) in cols.iter_mut().zip([h.mean_draft, h.trim, h.displacement_volume, h.wetted_surface]) {
            c[i] = Some(v);
        }
    }
    let mut out = ds.clone();
    let [m, t, d, w] = cols;
    out.put_real(VariableSpec::linear(vars::MEAN_DRAFT, "m"), m);
    out.put_real(VariableSpec::linear(vars::TRIM, "m"), t);
    out.put_real(VariableSpec::linear(vars::DISPLACEMENT, "m3"), d);
    out.put_real(VariableSpec::linear(vars::WSA, "m2"), w);
    entry.check(CheckResult::new("hydrostatics", warned == 0).metric("warned_samples", warned as f64));
    Ok((out, entry))
}
