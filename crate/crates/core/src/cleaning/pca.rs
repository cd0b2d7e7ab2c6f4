use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{QualityFlag, VariableSpec, VoyageDataset};
use crate::report::{CheckResult, StageEntry};
use crate::stats::quantile;

/// Share of variance the axes must explain when k is not given.
pub const VARIANCE_TARGET: f64 = 0.95;
/// Training needs this many complete samples per axis.
const SAMPLES_PER_AXIS: usize = 10;

pub const PCA_ERROR: &str = "pca_error";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Zero mean, unit standard deviation.
    Standardize,
    /// Zero mean only; the scale vector is all ones.
    CenterOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaDetector {
    pub features: Vec<String>,
    pub scaling: Scaling,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// k orthonormal axes, each of length p.
    pub axes: Vec<Vec<f64>>,
    pub quantile: f64,
    pub threshold: f64,
}

impl PcaDetector {
    pub fn k(&self) -> usize {
        self.axes.len()
    }

    /// Fits on rows of complete observations (each of length p).
    pub fn fit(
        features: Vec<String>,
        rows: &[Vec<f64>],
        k: Option<usize>,
        quantile_level: f64,
        scaling: Scaling,
    ) -> Result<Self> {
        let p = features.len();
        if p < 2 {
            return Err(Error::InvalidParameter("PCA needs at least two features".into()));
        }
        if !(quantile_level > 0.0 && quantile_level < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile must lie in (0, 1), got {quantile_level}")));
        }
        if let Some(k) = k {
            if k == 0 || k >= p {
                return Err(Error::InvalidParameter(format!("k must satisfy 1 <= k < {p}, got {k}")));
            }
        }
        let needed = SAMPLES_PER_AXIS * k.unwrap_or(1).max(1);
        if rows.len() < needed.max(2) {
            return Err(Error::InsufficientSamples { needed: needed.max(2), available: rows.len() });
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let sd: Vec<f64> = (0..p)
            .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
            .collect();
        if let Some(j) = (0..p).find(|&j| !(sd[j] > 1e-12 * mean[j].abs().max(1.0))) {
            return Err(Error::ZeroVariance(features[j].clone()));
        }
        let scale = match scaling {
            Scaling::Standardize => sd,
            Scaling::CenterOnly => vec![1.0; p],
        };
        let z = DMatrix::from_fn(rows.len(), p, |i, j| (rows[i][j] - mean[j]) / scale[j]);
        let cov = (z.transpose() * &z) / (n - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let k = match k {
            Some(k) => k,
            None => {
                let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
                let mut acc = 0.0;
                let mut k = p - 1;
                for (m, &j) in order.iter().enumerate() {
                    acc += eig.eigenvalues[j].max(0.0);
                    if acc >= VARIANCE_TARGET * total {
                        k = m + 1;
                        break;
                    }
                }
                k.min(p - 1)
            }
        };
        if rows.len() < SAMPLES_PER_AXIS * k {
            return Err(Error::InsufficientSamples { needed: SAMPLES_PER_AXIS * k, available: rows.len() });
        }
        let axes: Vec<Vec<f64>> = order[..k]
            .iter()
            .map(|&j| {
                let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
                // Sign convention: largest component positive.
                let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                if big < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        let mut det = Self {
            features,
            scaling,
            mean,
            scale,
            axes,
            quantile: quantile_level,
            threshold: 0.0,
        };
        let errors: Vec<f64> = rows.iter().map(|r| det.error(r)).collect();
        det.threshold = quantile(&errors, quantile_level).expect("non-empty");
        Ok(det)
    }

    /// Squared distance between the scaled sample and its projection onto
    /// the axes.
    pub fn error(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect();
        let norm2: f64 = z.iter().map(|v| v * v).sum();
        let proj2: f64 = self
            .axes
            .iter()
            .map(|a| a.iter().zip(&z).map(|(u, v)| u * v).sum::<f64>().powi(2))
            .sum();
        (norm2 - proj2).max(0.0)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "features {}", self.features.join(" "));
        let scaling = match self.scaling {
            Scaling::Standardize => "standardize",
            Scaling::CenterOnly => "center_only",
        };
        let _ = writeln!(s, "scaling {scaling}");
        let _ = writeln!(s, "quantile {:e}", self.quantile);
        let _ = writeln!(s, "threshold {:e}", self.threshold);
        let _ = writeln!(s, "mean {}", join(&self.mean));
        let _ = writeln!(s, "scale {}", join(&self.scale));
        for a in &self.axes {
            let _ = writeln!(s, "axis {}", join(a));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("PCA detector file: {m}"));
        let nums = |rest: &str| -> Result<Vec<f64>> {
            rest.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number {t:?}"))))
                .collect()
        };
        let (mut features, mut scaling, mut q, mut th, mut mean, mut scale) = (None, None, None, None, None, None);
        let mut axes = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, rest) = line.trim().split_once(' ').unwrap_or((line.trim(), ""));
            match key {
                "features" => features = Some(rest.split_whitespace().map(String::from).collect::<Vec<_>>()),
                "scaling" => {
                    scaling = Some(match rest.trim() {
                        "standardize" => Scaling::Standardize,
                        "center_only" => Scaling::CenterOnly,
                        other => return Err(bad(&format!("unknown scaling {other:?}"))),
                    })
                }
                "quantile" => q = nums(rest)?.first().copied(),
                "threshold" => th = nums(rest)?.first().copied(),
                "mean" => mean = Some(nums(rest)?),
                "scale" => scale = Some(nums(rest)?),
                "axis" => axes.push(nums(rest)?),
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        let features = features.ok_or_else(|| bad("missing features"))?;
        let p = features.len();
        let det = Self {
            scaling: scaling.ok_or_else(|| bad("missing scaling"))?,
            quantile: q.ok_or_else(|| bad("missing quantile"))?,
            threshold: th.ok_or_else(|| bad("missing threshold"))?,
            mean: mean.ok_or_else(|| bad("missing mean"))?,
            scale: scale.ok_or_else(|| bad("missing scale"))?,
            axes,
            features,
        };
        if det.mean.len() != p || det.scale.len() != p || det.axes.iter().any(|a| a.len() != p) {
            return Err(bad("vector lengths do not match the feature count"));
        }
        if det.axes.is_empty() || det.axes.len() >= p {
            return Err(bad("axis count must lie in [1, features)"));
        }
        Ok(det)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn row(cols: &[&[Option<f64>]], i: usize) -> Option<Vec<f64>> {
    cols.iter().map(|c| c[i]).collect()
}

fn columns<'a>(ds: &'a VoyageDataset, features: &[String]) -> Result<Vec<&'a [Option<f64>]>> {
    features
        .iter()
        .map(|f| ds.real(f).ok_or_else(|| Error::MissingVariable(f.clone())))
        .collect()
}

/// In-trip samples, or all samples when no trips are assigned.
fn in_scope(ds: &VoyageDataset, i: usize) -> bool {
    ds.trip_id(i).is_some() || ds.trip_ids().iter().all(Option::is_none)
}

/// Fits a detector on complete in-trip samples that carry no outlier flag.
pub fn pca_fit(
    ds: &VoyageDataset,
    features: &[String],
    k: Option<usize>,
    quantile_level: f64,
) -> Result<PcaDetector> {
    let cols = columns(ds, features)?;
    let rows: Vec<Vec<f64>> = (0..ds.len())
        .filter(|&i| in_scope(ds, i) && !ds.flags(i).iter().any(|f| f.is_outlier()))
        .filter_map(|i| row(&cols, i))
        .collect();
    PcaDetector::fit(features.to_vec(), &rows, k, quantile_level, Scaling::Standardize)
}

/// Scores every complete in-trip sample; errors above the threshold are flagged
/// `correlation_outlier`. Errors go to the `pca_error` column.
pub fn pca_score(det: &PcaDetector, ds: &VoyageDataset) -> Result<(VoyageDataset, StageEntry)> {
    let mut entry = StageEntry::new("pca");
    let cols = columns(ds, &det.features)?;
    let errors: Vec<Option<f64>> = (0..ds.len())
        .into_par_iter()
        .map(|i| if in_scope(ds, i) { row(&cols, i).map(|r| det.error(&r)) } else { None })
        .collect();
    let mut out = ds.clone();
    let ts = ds.timestamps();
    let skipped = (0..ds.len()).filter(|&i| in_scope(ds, i) && errors[i].is_none()).count();
    let mut flagged = 0usize;
    for (i, e) in errors.iter().enumerate() {
        if let Some(e) = *e {
            if e > det.threshold {
                flagged += 1;
                if out.flag(i, QualityFlag::CorrelationOutlier) {
                    entry.count_flag(QualityFlag::CorrelationOutlier);
                }
                entry.detail(Some(ts[i]), PCA_ERROR, Some(det.threshold), Some(e), QualityFlag::CorrelationOutlier.as_str());
            }
        }
    }
    if skipped > 0 {
        entry.warn(format!("{skipped} incomplete samples skipped by the PCA detector"));
    }
    out.put_real(VariableSpec::linear(PCA_ERROR, ""), errors);
    entry.check(
        CheckResult::new("pca", flagged == 0)
            .metric("flagged", flagged as f64)
            .metric("skipped", skipped as f64)
            .metric("threshold", det.threshold)
            .metric("k", det.k() as f64),
    );
    Ok((out, entry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn collinear_pair() {
        let rows: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64, 2.0 * k as f64 + 1.0]).collect();
        let d = PcaDetector::fit(names(2), &rows, Some(1), 0.995, Scaling::Standardize).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.axes[0][0].abs() - h).abs() < 1e-12 && (d.axes[0][1].abs() - h).abs() < 1e-12);
        assert!(rows.iter().all(|r| d.error(r) < 1e-12));
        assert_eq!(d.error(&d.mean.clone()), 0.0);
    }

    #[test]
    fn constant_feature_rejected() {
        let rows: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64, 3.0]).collect();
        assert!(matches!(
            PcaDetector::fit(names(2), &rows, Some(1), 0.995, Scaling::Standardize),
            Err(Error::ZeroVariance(f)) if f == "x1"
        ));
    }

    #[test]
    fn too_few_samples() {
        let rows: Vec<Vec<f64>> = (0..15).map(|k| vec![k as f64, (k * k) as f64, 1.0 / (k as f64 + 1.0)]).collect();
        assert!(matches!(
            PcaDetector::fit(names(3), &rows, Some(2), 0.995, Scaling::Standardize),
            Err(Error::InsufficientSamples { needed: 20, available: 15 })
        ));
        assert!(PcaDetector::fit(names(3), &rows, Some(3), 0.9, Scaling::Standardize).is_err());
    }

    #[test]
    fn default_k_and_round_trip() {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut r);
                let e: f64 = StandardNormal.sample(&mut r);
                let f: f64 = StandardNormal.sample(&mut r);
                vec![a, a + 0.01 * e, -a + 0.01 * f, 5.0 + 2.0 * a]
            })
            .collect();
        let d = PcaDetector::fit(names(4), &rows, None, 0.99, Scaling::Standardize).unwrap();
        assert_eq!(d.k(), 1);
        let back = PcaDetector::from_text(&d.to_text()).unwrap();
        assert_eq!(back, d);
        for r in rows.iter().take(10) {
            assert_eq!(back.error(r), d.error(r));
        }
    }
}
