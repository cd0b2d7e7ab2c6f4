//! Spatial (bilinear) and temporal (Lagrange) interpolation of grid
//! variables at ship positions.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{GridVariable, HindcastGrid};
use crate::model::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskPolicy {
    /// Masked corners contribute zero.
    ZeroFill,
    /// Masked corners take the mean of the unmasked corners.
    #[default]
    NeighborMean,
}

impl FromStr for MaskPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero_fill" => Ok(MaskPolicy::ZeroFill),
            "neighbor_mean" | "neighbour_mean" => Ok(MaskPolicy::NeighborMean),
            o => Err(Error::InvalidParameter(format!("unknown mask policy `{o}`"))),
        }
    }
}

/// Why a point could not be interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Miss {
    OutsideGrid,
    OutsideTimeSpan,
    AllMasked,
}

impl Miss {
    pub fn as_str(self) -> &'static str {
        match self {
            Miss::OutsideGrid => "outside_grid",
            Miss::OutsideTimeSpan => "outside_time_span",
            Miss::AllMasked => "all_masked",
        }
    }
}

/// Cell bracketing a position: the two corner indices and the fractional
/// offset along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lat: (usize, usize),
    pub lon: (usize, usize),
    pub wy: f64,
    pub wx: f64,
}

fn bracket(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    if axis.len() < 2 || !(x >= axis[0] && x <= axis[axis.len() - 1]) {
        return None;
    }
    let j = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1) - 1;
    Some((j, (x - axis[j]) / (axis[j + 1] - axis[j])))
}

impl HindcastGrid {
    /// True when the longitude axis closes around the globe, i.e. the gap
    /// across the seam is no wider than the widest interior cell.
    pub fn wraps_longitude(&self) -> bool {
        let lon = &self.longitudes;
        if lon.len() < 2 {
            return false;
        }
        let widest = lon.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let seam = lon[0] + 360.0 - lon[lon.len() - 1];
        seam > 0.0 && seam <= widest + 1e-9
    }

    /// Finds the cell containing (lat, lon). Longitudes are tried as given
    /// and shifted by ±360 so both [-180, 180) and [0, 360) axes work; a
    /// global axis also brackets across its seam.
    pub fn locate(&self, lat: f64, lon: f64) -> Option<Cell> {
        let (i, wy) = bracket(&self.latitudes, lat)?;
        let lons = &self.longitudes;
        for cand in [lon, lon + 360.0, lon - 360.0] {
            if let Some((j, wx)) = bracket(lons, cand) {
                return Some(Cell {
                    lat: (i, i + 1),
                    lon: (j, j + 1),
                    wy,
                    wx,
                });
            }
        }
        if self.wraps_longitude() {
            let last = lons.len() - 1;
            let hi = lons[0] + 360.0;
            let x = lons[last] + (lon - lons[last]).rem_euclid(360.0);
            if x >= lons[last] && x <= hi {
                return Some(Cell {
                    lat: (i, i + 1),
                    lon: (last, 0),
                    wy,
                    wx: (x - lons[last]) / (hi - lons[last]),
                });
            }
        }
        None
    }

    /// Indices of the `order + 1` grid times used for a query at `t`:
    /// `ceil((order + 1) / 2)` at or before `t`, the rest after, shifted to
    /// stay inside the axis.
    pub fn time_stencil(&self, t: Timestamp, order: usize) -> std::result::Result<Vec<usize>, Miss> {
        let ts = &self.timestamps;
        let m = order + 1;
        if ts.is_empty() || t < ts[0] || t > ts[ts.len() - 1] || ts.len() < m {
            return Err(Miss::OutsideTimeSpan);
        }
        let p = ts.partition_point(|&g| g <= t) - 1;
        let before = m.div_ceil(2);
        let start = (p + 1).saturating_sub(before).min(ts.len() - m);
        Ok((start..start + m).collect())
    }
}

/// Corner values with the mask policy applied. `None` when all four are
/// masked.
fn corner_values(
    var: &GridVariable,
    ti: usize,
    cell: &Cell,
    policy: MaskPolicy,
    f: impl Fn(f64) -> f64,
) -> Option<[f64; 4]> {
    let idx = [
        (cell.lat.0, cell.lon.0),
        (cell.lat.0, cell.lon.1),
        (cell.lat.1, cell.lon.0),
        (cell.lat.1, cell.lon.1),
    ];
    let mut v = [0.0; 4];
    let mut ok = [false; 4];
    for (k, &(i, j)) in idx.iter().enumerate() {
        let x = var.values[[ti, i, j]];
        ok[k] = !var.mask[[ti, i, j]] && x.is_finite();
        if ok[k] {
            v[k] = f(x);
        }
    }
    let valid: Vec<f64> = (0..4).filter(|&k| ok[k]).map(|k| v[k]).collect();
    if valid.is_empty() {
        return None;
    }
    let fill = match policy {
        MaskPolicy::ZeroFill => 0.0,
        MaskPolicy::NeighborMean => valid.iter().sum::<f64>() / valid.len() as f64,
    };
    for k in 0..4 {
        if !ok[k] {
            v[k] = fill;
        }
    }
    Some(v)
}

fn bilinear(v: [f64; 4], cell: &Cell) -> f64 {
    let (wy, wx) = (cell.wy, cell.wx);
    (1.0 - wy) * ((1.0 - wx) * v[0] + wx * v[1]) + wy * ((1.0 - wx) * v[2] + wx * v[3])
}

/// Bilinear value of `var` at time index `ti`.
pub fn spatial_value(var: &GridVariable, ti: usize, cell: &Cell, policy: MaskPolicy) -> Option<f64> {
    corner_values(var, ti, cell, policy, |x| x).map(|v| bilinear(v, cell))
}

/// Lagrange weights for evaluating at `t` from nodes `nodes`.
pub fn lagrange_weights(nodes: &[Timestamp], t: Timestamp) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &tk)| (t - tk) as f64 / (nodes[j] - tk) as f64)
                .product()
        })
        .collect()
}

/// Interpolates one grid variable at a point and time. Angular variables
/// are interpolated through their sine and cosine.
pub fn interpolate_point(
    grid: &HindcastGrid,
    var: &GridVariable,
    lat: f64,
    lon: f64,
    t: Timestamp,
    order: usize,
    policy: MaskPolicy,
) -> std::result::Result<f64, Miss> {
    let cell = grid.locate(lat, lon).ok_or(Miss::OutsideGrid)?;
    let stencil = grid.time_stencil(t, order)?;
    let nodes: Vec<Timestamp> = stencil.iter().map(|&k| grid.timestamps[k]).collect();
    let w = lagrange_weights(&nodes, t);
    if var.is_angular() {
        let (mut s, mut c) = (0.0, 0.0);
        for (&ti, wk) in stencil.iter().zip(&w) {
            let vs = corner_values(var, ti, &cell, policy, |a| a.to_radians().sin()).ok_or(Miss::AllMasked)?;
            let vc = corner_values(var, ti, &cell, policy, |a| a.to_radians().cos()).ok_or(Miss::AllMasked)?;
            s += wk * bilinear(vs, &cell);
            c += wk * bilinear(vc, &cell);
        }
        Ok(crate::model::normalize_angle(s.atan2(c).to_degrees()))
    } else {
        let mut acc = 0.0;
        for (&ti, wk) in stencil.iter().zip(&w) {
            acc += wk * spatial_value(var, ti, &cell, policy).ok_or(Miss::AllMasked)?;
        }
        Ok(acc)
    }
}
