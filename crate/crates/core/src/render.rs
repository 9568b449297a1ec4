//! Density images of Bloch point clouds, seen from the north pole.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ifs::Vec3;

pub const MIN_RESOLUTION: usize = 64;

/// 8-bit grayscale image, row-major, 0 = black.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Fraction of pixels that are not white.
    pub fn dark_fraction(&self) -> f64 {
        self.pixels.iter().filter(|&&p| p < 255).count() as f64 / self.pixels.len() as f64
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Azimuthal equidistant projection centred on `(0,0,1)`: the polar angle
/// maps linearly to pixel radius (the south pole lands on the inscribed
/// circle), azimuth is preserved. Counts are log-scaled, dense = dark.
pub fn render_projection(points: &[Vec3], resolution: usize) -> Result<GrayImage> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidParameter(format!("resolution {resolution} below {MIN_RESOLUTION}")));
    }
    let n = resolution;
    let mut counts = vec![0u64; n * n];
    let c = (n - 1) as f64 / 2.0;
    for r in points {
        let theta = r[2].clamp(-1.0, 1.0).acos();
        let phi = r[1].atan2(r[0]);
        let rho = theta / PI * (n as f64 / 2.0);
        let px = (c + rho * phi.cos()).round();
        let py = (c - rho * phi.sin()).round();
        if (0.0..n as f64).contains(&px) && (0.0..n as f64).contains(&py) {
            counts[py as usize * n + px as usize] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let scale = ((max + 1) as f64).ln();
    let pixels = counts
        .iter()
        .map(|&k| {
            if k == 0 {
                255
            } else {
                // A single hit is already visibly grey; the densest pixel is black.
                let level = ((k + 1) as f64).ln() / scale;
                (200.0 * (1.0 - level)).round() as u8
            }
        })
        .collect();
    Ok(GrayImage { width: n, height: n, pixels })
}
