//! Box-counting dimension of point sets on the unit sphere.
//!
//! Cells are latitude bands of angular height `eps`, each split into
//! `round(2 pi cos(lat) / eps)` longitude cells, so all cells have roughly
//! the same area `eps^2`. The dimension is the least-squares slope of
//! `log N(eps)` against `log(1/eps)` over the scales that pass the
//! saturation guards.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::Vec3;
use crate::stats::linear_fit;

/// Cell sizes `2^-3 .. 2^-9` radians in half-octave steps.
pub fn default_scales() -> Vec<f64> {
    (0..13).map(|k| 2f64.powf(-3.0 - 0.5 * k as f64)).collect()
}

/// Occupied cells and cells holding exactly one point at scale `eps`.
pub fn cell_counts(points: &[Vec3], eps: f64) -> (usize, usize) {
    let bands = (PI / eps).ceil() as u64;
    let max_lon = (2.0 * PI / eps).round().max(1.0) as u64 + 1;
    let mut keys: Vec<u64> = points
        .iter()
        .map(|r| {
            let lat = r[2].clamp(-1.0, 1.0).asin();
            let lon = r[1].atan2(r[0]);
            let b = (((lat + 0.5 * PI) / PI * bands as f64) as u64).min(bands - 1);
            let centre = -0.5 * PI + (b as f64 + 0.5) * PI / bands as f64;
            let n_lon = (2.0 * PI * centre.cos() / eps).round().max(1.0) as u64;
            let c = (((lon + PI) / (2.0 * PI) * n_lon as f64) as u64).min(n_lon - 1);
            b * max_lon + c
        })
        .collect();
    keys.sort_unstable();
    let (mut occupied, mut singles) = (0, 0);
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        occupied += 1;
        if j - i == 1 {
            singles += 1;
        }
        i = j;
    }
    (occupied, singles)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub eps: f64,
    pub count: usize,
    /// Share of points not alone in their cell, `1 - singletons/points`.
    /// Reported as a sampling diagnostic; it does not enter the fit.
    pub coverage: f64,
    pub used: bool,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    pub intercept: f64,
    pub rows: Vec<ScaleRow>,
}

pub const MIN_POINTS: usize = 10_000;

/// Slope of `log N(eps)` vs `log(1/eps)`, excluding scales with
/// `N < 10` or `N > points/10`.
pub fn box_counting_dimension(points: &[Vec3], scales: &[f64]) -> Result<DimensionEstimate> {
    if points.len() < MIN_POINTS {
        return Err(Error::InvalidParameter(format!("box counting needs at least {MIN_POINTS} points, got {}", points.len())));
    }
    if scales.len() < 4 || scales.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("box counting needs at least 4 positive scales".into()));
    }
    let (lo, hi) = scales.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if hi / lo < 10.0 {
        return Err(Error::InvalidParameter("scales must span at least one decade".into()));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::DegenerateCloud);
    }
    let n = points.len();
    let mut rows: Vec<ScaleRow> = scales
        .iter()
        .map(|&eps| {
            let (count, singles) = cell_counts(points, eps);
            ScaleRow {
                eps,
                count,
                coverage: 1.0 - singles as f64 / n as f64,
                used: count >= 10 && count * 10 <= n,
                residual: None,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.used)
        .map(|r| ((1.0 / r.eps).ln(), (r.count as f64).ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::InvalidParameter("fewer than two scales pass the saturation guards".into()))?;
    let mut res = fit.residuals.iter();
    for r in rows.iter_mut().filter(|r| r.used) {
        r.residual = res.next().copied();
    }
    Ok(DimensionEstimate { dimension: fit.slope, intercept: fit.intercept, rows })
}

/// Reference clouds with known dimension, for calibrating the estimator.
pub mod synthetic {
    use std::f64::consts::PI;

    use crate::ifs::Vec3;
    use crate::rng::{stream, uniform};

    /// Points spread uniformly on a tilted great circle.
    pub fn great_circle(n: usize, seed: u64) -> Vec<Vec3> {
        let norm = |v: Vec3| {
            let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / l, v[1] / l, v[2] / l]
        };
        let e1 = norm([1.0, 0.0, 0.3]);
        // e2 = e1 x (0.2, 1, 0), orthogonal to e1.
        let e2 = norm([-e1[2], 0.2 * e1[2], e1[0] - 0.2 * e1[1]]);
        let mut rng = stream(seed, 0);
        (0..n)
            .map(|_| {
                let t = 2.0 * PI * uniform(&mut rng);
                let (s, c) = t.sin_cos();
                [c * e1[0] + s * e2[0], c * e1[1] + s * e2[1], c * e1[2] + s * e2[2]]
            })
            .collect()
    }

    /// Uniform points on the sphere (uniform height, uniform azimuth).
    pub fn uniform_sphere(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = stream(seed, 0);
        (0..n)
            .map(|_| {
                let z = 2.0 * uniform(&mut rng) - 1.0;
                let phi = 2.0 * PI * uniform(&mut rng);
                let s = (1.0 - z * z).max(0.0).sqrt();
                [s * phi.cos(), s * phi.sin(), z]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scales_are_half_octaves() {
        let s = default_scales();
        assert_eq!(s.len(), 13);
        assert_eq!(s[0], 0.125);
        assert!((s[12] - 2f64.powi(-9)).abs() < 1e-18);
    }

    #[test]
    fn cells_have_similar_area() {
        // Uniform points should spread evenly over cells: the occupied
        // count at a coarse scale equals the number of cells.
        let pts = synthetic::uniform_sphere(200_000, 1);
        let eps = 0.25;
        let (n, _) = cell_counts(&pts, eps);
        let area = 4.0 * PI / (eps * eps);
        assert!((n as f64 / area - 1.0).abs() < 0.1, "{n} cells vs {area}");
    }

    #[test]
    fn degenerate_cloud_rejected() {
        let pts = vec![[0.0, 0.0, 1.0]; MIN_POINTS];
        assert_eq!(box_counting_dimension(&pts, &default_scales()).unwrap_err(), Error::DegenerateCloud);
    }

    #[test]
    fn too_few_points_rejected() {
        let pts = synthetic::uniform_sphere(100, 2);
        assert!(box_counting_dimension(&pts, &default_scales()).is_err());
    }
}
