//! Two-stage steady-state filter.
//!
//! Stage 1 fits a least-squares line in a sliding window centred on each
//! sample and marks the sample unsteady when a t-test rejects zero slope.
//! Stage 2 clears marks on samples whose local rate of change is within a
//! tolerance.

use crate::error::{Error, Result};
use crate::model::Timestamp;
use crate::stats::{mad_scale, median, slope_t_statistic, student_t_quantile};

/// Noise scale used in the slope standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleEstimate {
    /// Residual standard error of the window's own fit.
    #[default]
    Window,
    /// One robust noise scale for the whole series, from the median absolute
    /// deviation of first differences. A single wild sample then cannot hide
    /// by inflating its window's residuals.
    SeriesRobust,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyFilterParams {
    pub window: usize,
    pub alpha: f64,
    /// Absolute rate limit in units per second. Zero disables stage 2.
    pub gradient_tolerance: f64,
    pub scale: ScaleEstimate,
}

impl SteadyFilterParams {
    pub fn new(window: usize, alpha: f64, gradient_tolerance: f64) -> Result<Self> {
        let p = Self {
            window,
            alpha,
            gradient_tolerance,
            scale: ScaleEstimate::Window,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_scale(mut self, scale: ScaleEstimate) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "steady window must be odd and at least 3, got {}",
                self.window
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.gradient_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("gradient tolerance must be non-negative".into()));
        }
        Ok(())
    }

    /// Two-sided critical value for the slope t-test.
    pub fn critical_value(&self) -> f64 {
        student_t_quantile(1.0 - self.alpha / 2.0, (self.window - 2) as f64)
    }
}

impl Default for SteadyFilterParams {
    fn default() -> Self {
        Self {
            window: 11,
            alpha: 0.01,
            gradient_tolerance: 0.0,
            scale: ScaleEstimate::Window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SteadyOutcome {
    /// Stage-1 marks.
    pub stage1: Vec<bool>,
    /// Final marks after stage 2.
    pub unsteady: Vec<bool>,
    /// Window slope t statistic per sample (missing samples get `None`).
    pub t_statistics: Vec<Option<f64>>,
    pub warning: Option<String>,
}

impl SteadyOutcome {
    pub fn count(&self) -> usize {
        self.unsteady.iter().filter(|&&u| u).count()
    }

    pub fn stage1_count(&self) -> usize {
        self.stage1.iter().filter(|&&u| u).count()
    }
}

/// Runs both stages on a series. Missing values are skipped and never
/// marked. With fewer present values than the window nothing is marked and
/// a warning is returned.
pub fn steady_state_filter(
    times: &[Timestamp],
    values: &[Option<f64>],
    params: &SteadyFilterParams,
) -> SteadyOutcome {
    assert_eq!(times.len(), values.len(), "times and values differ in length");
    let n_all = values.len();
    let idx: Vec<usize> = (0..n_all).filter(|&i| values[i].is_some_and(f64::is_finite)).collect();
    let mut out = SteadyOutcome {
        stage1: vec![false; n_all],
        unsteady: vec![false; n_all],
        t_statistics: vec![None; n_all],
        warning: None,
    };
    let w = params.window;
    if idx.len() < w {
        out.warning = Some(format!(
            "only {} usable samples for a window of {w}; nothing marked",
            idx.len()
        ));
        return out;
    }
    let t0 = times[idx[0]];
    let x: Vec<f64> = idx.iter().map(|&i| (times[i] - t0) as f64).collect();
    let y: Vec<f64> = idx.iter().map(|&i| values[i].expect("present")).collect();
    let crit = params.critical_value();

    let robust_sigma = match params.scale {
        ScaleEstimate::Window => None,
        ScaleEstimate::SeriesRobust => {
            let d: Vec<f64> = y.windows(2).map(|p| p[1] - p[0]).collect();
            Some(mad_scale(&d).unwrap_or(0.0) / std::f64::consts::SQRT_2)
        }
    };

    let n = idx.len();
    let half = w / 2;
    for k in 0..n {
        let lo = k.saturating_sub(half).min(n - w);
        let (xs, ys) = (&x[lo..lo + w], &y[lo..lo + w]);
        let t = match robust_sigma {
            None => slope_t_statistic(xs, ys).map(|(_, t)| t),
            Some(sigma) => robust_slope_t(xs, ys, sigma),
        };
        if let Some(t) = t {
            out.t_statistics[idx[k]] = Some(t);
            out.stage1[idx[k]] = t.abs() > crit;
        }
    }

    // Stage 2: the smaller of the backward and forward one-sided rates. A
    // genuine slow change has both rates small; an isolated jump has both
    // large.
    if params.gradient_tolerance == 0.0 {
        out.unsteady.clone_from(&out.stage1);
        return out;
    }
    for k in 0..n {
        let i = idx[k];
        if !out.stage1[i] {
            continue;
        }
        let rate = |a: usize, b: usize| (y[b] - y[a]).abs() / (x[b] - x[a]);
        let back = (k > 0).then(|| rate(k - 1, k));
        let fwd = (k + 1 < n).then(|| rate(k, k + 1));
        let g = match (back, fwd) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => f64::INFINITY,
        };
        out.unsteady[i] = !(g <= params.gradient_tolerance);
    }
    out
}

fn robust_slope_t(x: &[f64], y: &[f64], sigma: f64) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum::<f64>() / sxx;
    let se = sigma / sxx.sqrt();
    Some(if se > 0.0 {
        slope / se
    } else if slope == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(slope)
    })
}

/// Unwraps a longitude series so consecutive values never jump by more than
/// 180 degrees.
pub fn unwrap_longitudes(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    values
        .iter()
        .map(|v| {
            v.map(|x| {
                if let Some(p) = prev {
                    let d = x - p;
                    if d > 180.0 {
                        offset -= 360.0;
                    } else if d < -180.0 {
                        offset += 360.0;
                    }
                }
                prev = Some(x);
                x + offset
            })
        })
        .collect()
}

/// Robust typical step size of a series, used when no tolerance is given.
pub fn median_step(values: &[Option<f64>]) -> Option<f64> {
    let ys: Vec<f64> = values.iter().flatten().copied().collect();
    let d: Vec<f64> = ys.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    median(&d)
}
