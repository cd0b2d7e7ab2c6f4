//! Library results against independently computed values.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};

use shipdata_core::cleaning::{PcaDetector, Scaling};
use shipdata_core::features::{haversine, initial_bearing, wind_to_reference_height, EARTH_RADIUS};
use shipdata_core::stats::{student_t_cdf, student_t_quantile};
use shipdata_core::tables::WsaFormula;
use shipdata_core::validation::shaft_power;

fn unit(lat: f64, lon: f64) -> [f64; 3] {
    let (la, lo) = (lat.to_radians(), lon.to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Central angle from unit vectors, stable for short and long arcs.
fn arc_oracle(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (a, b) = (unit(lat1, lon1), unit(lat2, lon2));
    let c = cross(a, b);
    EARTH_RADIUS * dot(c, c).sqrt().atan2(dot(a, b))
}

/// Bearing from the east and north tangent vectors at the start point.
fn bearing_oracle(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (la, lo) = (lat1.to_radians(), lon1.to_radians());
    let east = [-lo.sin(), lo.cos(), 0.0];
    let north = [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()];
    let p = unit(lat2, lon2);
    dot(p, east).atan2(dot(p, north)).to_degrees().rem_euclid(360.0)
}

#[test]
fn haversine_matches_vector_arc() {
    assert!((haversine(0.0, 0.0, 0.0, 90.0, EARTH_RADIUS) - 10_007_543.0).abs() < 1.0);
    assert!((arc_oracle(0.0, 0.0, 0.0, 90.0) - 10_007_543.0).abs() < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let (la1, lo1) = (rng.random_range(-80.0..80.0), rng.random_range(-180.0..180.0));
        let (la2, lo2) = (rng.random_range(-80.0..80.0), rng.random_range(-180.0..180.0));
        let d = haversine(la1, lo1, la2, lo2, EARTH_RADIUS);
        assert!((d - arc_oracle(la1, lo1, la2, lo2)).abs() < 1e-6 * d.max(1.0), "{la1} {lo1} {la2} {lo2}");
    }
}

#[test]
fn bearing_matches_tangent_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2000 {
        let (la1, lo1): (f64, f64) = (rng.random_range(-70.0..70.0), rng.random_range(-180.0..180.0));
        let (la2, lo2): (f64, f64) = (la1 + rng.random_range(-5.0..5.0), lo1 + rng.random_range(-5.0..5.0));
        if (la2 - la1).abs() + (lo2 - lo1).abs() < 1e-3 {
            continue;
        }
        let got = initial_bearing(la1, lo1, la2, lo2);
        let want = bearing_oracle(la1, lo1, la2, lo2);
        let diff = (got - want).rem_euclid(360.0);
        assert!(diff.min(360.0 - diff) < 1e-7, "{got} vs {want}");
    }
}

#[test]
fn power_law_by_logarithms() {
    assert!((wind_to_reference_height(10.0, 10.0, 30.0).unwrap() - 8.851).abs() < 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (v, zr, za): (f64, f64, f64) = (rng.random_range(0.0..40.0), rng.random_range(2.0..50.0), rng.random_range(2.0..80.0));
        let want = v * ((zr.ln() - za.ln()) / 9.0).exp();
        assert_relative_eq!(wind_to_reference_height(v, zr, za).unwrap(), want, max_relative = 1e-12);
    }
}

#[test]
fn shaft_power_from_revolutions_per_second() {
    assert!((shaft_power(120.0, 1000.0) - 12_566.4).abs() < 0.1);
    // One revolution per second does 2*pi joules per newton-metre.
    assert_relative_eq!(shaft_power(60.0, 1.0), 2.0 * std::f64::consts::PI, max_relative = 1e-15);
}

#[test]
fn wetted_surface_rows() {
    // 100 000 / 15 = 6666.67 and 1.9 * 270 * 15 = 7695.
    assert!((WsaFormula::TankerBulk.wetted_surface(100_000.0, 15.0, 270.0) - 14_218.0).abs() < 0.5);
    assert!((WsaFormula::Container.wetted_surface(100_000.0, 15.0, 270.0) - 14_289.8).abs() < 0.5);
    // 1.7 * 270 * 15 = 6885, (6666.67 + 6885) * 1.025 = 13 890.46.
    assert!((WsaFormula::General.wetted_surface(100_000.0, 15.0, 270.0) - 13_890.46).abs() < 0.5);
}

#[test]
fn student_t_against_statrs() {
    for df in [2.0, 3.0, 5.0, 9.0, 10.0, 19.0, 30.0, 100.0, 1000.0] {
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        for p in [0.6, 0.9, 0.95, 0.975, 0.995, 0.9995] {
            assert_relative_eq!(student_t_quantile(p, df), dist.inverse_cdf(p), max_relative = 1e-7);
        }
        for t in [-4.0, -1.3, 0.0, 0.7, 2.2, 6.0] {
            assert!((student_t_cdf(t, df) - dist.cdf(t)).abs() < 1e-10, "df {df} t {t}");
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix.
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (values, vectors)
}

#[test]
fn pca_axes_match_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let s: f64 = rng.random_range(5.0..8.0);
            let w: f64 = rng.random_range(-1.0..1.0);
            vec![s, s + 0.2 * w + noise.sample(&mut rng) * 0.3, 13.0 * s + noise.sample(&mut rng), 2.0 * w + noise.sample(&mut rng)]
        })
        .collect();
    let names: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    let det = PcaDetector::fit(names, &rows, Some(2), 0.99, Scaling::Standardize).unwrap();

    let n = rows.len() as f64;
    let p = 4;
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..p).map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()).collect();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| (0..p).map(|j| (r[j] - mean[j]) / sd[j]).collect()).collect();
    let cov: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| z.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1.0)).collect())
        .collect();
    let (values, vectors) = jacobi(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    for (axis, &j) in det.axes.iter().zip(&order) {
        let d: f64 = axis.iter().zip(&vectors[j]).map(|(x, y)| x * y).sum();
        assert!((d.abs() - 1.0).abs() < 1e-9, "axis mismatch {d}");
    }
    // Reconstruction error by explicit projection onto the oracle axes.
    for (r, zr) in rows.iter().zip(&z).take(50) {
        let mut resid = zr.clone();
        for &j in &order[..2] {
            let c: f64 = zr.iter().zip(&vectors[j]).map(|(x, y)| x * y).sum();
            resid.iter_mut().zip(&vectors[j]).for_each(|(x, y)| *x -= c * y);
        }
        let want: f64 = resid.iter().map(|x| x * x).sum();
        assert!((det.error(r) - want).abs() < 1e-9 * want.max(1.0));
    }
}
