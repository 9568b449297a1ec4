//! Simultaneous fuzzy measurement of four spin directions.
//!
//! Four detectors point along the vertices of a regular tetrahedron. Each
//! event applies one of the maps `a_i = (I + a n_i . sigma)/2` to the spin
//! state and renormalizes; map `i` is chosen with probability
//! `|a_i phi|^2 / (1 + a^2)`, which depends on the current state. Iterating
//! gives a chaos game on the Bloch sphere whose attractor is a fractal.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{C64, I};
use crate::rng::{stream, uniform};

pub type Spinor = [C64; 2];
pub type Vec3 = [f64; 3];

/// The four detector directions, `n[0]` at the north pole.
#[derive(Clone, Debug, PartialEq)]
pub struct TetrahedronFrame {
    pub n: [Vec3; 4],
}

pub fn tetrahedron_directions() -> TetrahedronFrame {
    let cos_t = -1.0 / 3.0;
    let sin_t = 2.0 * 2f64.sqrt() / 3.0;
    let mut n = [[0.0, 0.0, 1.0]; 4];
    for (k, v) in n.iter_mut().enumerate().skip(1) {
        let phi = 2.0 * std::f64::consts::PI * (k - 1) as f64 / 3.0;
        *v = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t];
    }
    TetrahedronFrame { n }
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Bloch vector of a normalized spinor.
pub fn bloch(phi: &Spinor) -> Vec3 {
    let c = phi[0].conj() * phi[1];
    [2.0 * c.re, 2.0 * c.im, phi[0].norm_sqr() - phi[1].norm_sqr()]
}

/// A spinor whose Bloch vector points along the unit vector `r`.
pub fn spinor_from_bloch(r: &Vec3) -> Spinor {
    let theta = r[2].clamp(-1.0, 1.0).acos();
    let phi = r[1].atan2(r[0]);
    [C64::new((0.5 * theta).cos(), 0.0), C64::from_polar((0.5 * theta).sin(), phi)]
}

pub fn normalize(phi: &Spinor) -> Spinor {
    let n = (phi[0].norm_sqr() + phi[1].norm_sqr()).sqrt();
    [phi[0] / n, phi[1] / n]
}

/// Below this norm an image counts as zero.
const MIN_IMAGE_NORM: f64 = 1e-150;

/// `a_i phi`, unnormalized.
pub fn ifs_map_raw(frame: &TetrahedronFrame, i: usize, phi: &Spinor, a: f64) -> Spinor {
    let [nx, ny, nz] = frame.n[i];
    let off = C64::new(a * nx, 0.0);
    let offy = I * (a * ny);
    [
        (phi[0] * (1.0 + a * nz) + (off - offy) * phi[1]) * 0.5,
        ((off + offy) * phi[0] + phi[1] * (1.0 - a * nz)) * 0.5,
    ]
}

/// Applies map `i` and renormalizes. Returns the new state and the weight
/// `|a_i phi|^2 = (1 + a^2 + 2a n_i . r)/4`.
pub fn ifs_map_apply(frame: &TetrahedronFrame, i: usize, phi: &Spinor, a: f64) -> Result<(Spinor, f64)> {
    if i >= 4 {
        return Err(Error::InvalidParameter(format!("map index {i} out of range")));
    }
    let img = ifs_map_raw(frame, i, phi, a);
    let w = img[0].norm_sqr() + img[1].norm_sqr();
    if !(w.sqrt() >= MIN_IMAGE_NORM) {
        return Err(Error::ZeroImage { map: i });
    }
    let n = w.sqrt();
    Ok(([img[0] / n, img[1] / n], w))
}

/// `p_i = (1 + a^2 + 2a n_i . r) / (4 (1 + a^2))`.
pub fn jump_probabilities(frame: &TetrahedronFrame, r: &Vec3, a: f64) -> [f64; 4] {
    let denom = 4.0 * (1.0 + a * a);
    std::array::from_fn(|i| ((1.0 + a * a + 2.0 * a * dot(&frame.n[i], r)) / denom).max(0.0))
}

/// Inverse-CDF choice of a channel for the uniform `u`.
pub fn choose_channel(p: &[f64; 4], u: f64) -> usize {
    let total: f64 = p.iter().sum();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u * total < acc {
            return i;
        }
    }
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(3)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochPointCloud {
    pub points: Vec<Vec3>,
    pub a: f64,
    pub seed: u64,
}

pub fn validate_coupling(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("coupling a = {a} outside [0, 1]")));
    }
    Ok(())
}

/// Chaos game from `phi0`: `burn_in` unrecorded steps, then `n` recorded
/// Bloch vectors. One uniform is drawn per step from stream `(seed, 0)`.
pub fn iterate(phi0: &Spinor, a: f64, n: usize, burn_in: usize, seed: u64) -> Result<BlochPointCloud> {
    let mut rng = stream(seed, 0);
    iterate_with(phi0, a, n, burn_in, &mut rng).map(|points| BlochPointCloud { points, a, seed })
}

pub fn iterate_with<R: Rng + ?Sized>(phi0: &Spinor, a: f64, n: usize, burn_in: usize, rng: &mut R) -> Result<Vec<Vec3>> {
    validate_coupling(a)?;
    if n == 0 {
        return Err(Error::InvalidParameter("point count must be at least 1".into()));
    }
    let frame = tetrahedron_directions();
    let mut phi = normalize(phi0);
    let mut points = Vec::with_capacity(n);
    for step in 0..burn_in + n {
        let p = jump_probabilities(&frame, &bloch(&phi), a);
        let i = choose_channel(&p, uniform(rng));
        phi = ifs_map_apply(&frame, i, &phi, a)?.0;
        if step >= burn_in {
            points.push(bloch(&phi));
        }
    }
    Ok(points)
}

/// Applies a fixed sequence of maps and returns the Bloch vector after
/// each one.
pub fn iterate_channels(phi0: &Spinor, a: f64, channels: &[usize]) -> Result<Vec<Vec3>> {
    validate_coupling(a)?;
    let frame = tetrahedron_directions();
    let mut phi = normalize(phi0);
    channels
        .iter()
        .map(|&i| {
            phi = ifs_map_apply(&frame, i, &phi, a)?.0;
            Ok(bloch(&phi))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_geometry() {
        let f = tetrahedron_directions();
        assert_eq!(f.n[0], [0.0, 0.0, 1.0]);
        for i in 0..4 {
            assert!((dot(&f.n[i], &f.n[i]) - 1.0).abs() < 1e-15);
            for j in 0..i {
                assert!((dot(&f.n[i], &f.n[j]) + 1.0 / 3.0).abs() < 1e-12);
            }
        }
        for c in 0..3 {
            assert!(f.n.iter().map(|v| v[c]).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn eigenstate_is_fixed_point() {
        let f = tetrahedron_directions();
        for i in 0..4 {
            let phi = spinor_from_bloch(&f.n[i]);
            let (out, w) = ifs_map_apply(&f, i, &phi, 0.6).unwrap();
            assert!((w - 0.8f64.powi(2)).abs() < 1e-12);
            let r = bloch(&out);
            assert!((0..3).all(|c| (r[c] - f.n[i][c]).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_coupling_is_identity() {
        let f = tetrahedron_directions();
        let phi = normalize(&[C64::new(0.3, 0.2), C64::new(-0.5, 0.7)]);
        let (out, _) = ifs_map_apply(&f, 2, &phi, 0.0).unwrap();
        assert!((out[0] - phi[0]).norm() < 1e-15 && (out[1] - phi[1]).norm() < 1e-15);
        assert_eq!(jump_probabilities(&f, &bloch(&phi), 0.0), [0.25; 4]);
    }

    #[test]
    fn full_coupling_at_pole() {
        let f = tetrahedron_directions();
        let p = jump_probabilities(&f, &[0.0, 0.0, 1.0], 1.0);
        let expected = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        assert!(p.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn antipodal_state_at_full_coupling_is_annihilated() {
        let f = tetrahedron_directions();
        let phi = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert_eq!(ifs_map_apply(&f, 0, &phi, 1.0).unwrap_err(), Error::ZeroImage { map: 0 });
    }

    #[test]
    fn seeded_cloud_is_reproducible() {
        let phi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let a = iterate(&phi, 0.75, 500, 10, 4).unwrap();
        let b = iterate(&phi, 0.75, 500, 10, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|r| (dot(r, r).sqrt() - 1.0).abs() <= 1e-12));
        let still = iterate(&phi, 0.0, 50, 0, 4).unwrap();
        assert!(still.points.iter().all(|r| *r == [0.0, 0.0, 1.0]));
    }
}
