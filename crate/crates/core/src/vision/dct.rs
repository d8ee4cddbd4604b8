use std::f64::consts::PI;

use super::{GrayImage, PixelSet};
use crate::error::{Error, Result};

/// Low band radius is `min(bw, bh) / DEFAULT_LOW_BAND_DIVISOR`.
pub const DEFAULT_LOW_BAND_DIVISOR: f64 = 4.0;

const EPS: f64 = 1e-12;

/// `basis[k * n + x] = a(k) cos(pi (2x + 1) k / 2n)`.
fn dct_basis(n: usize) -> Vec<f64> {
    let mut basis = vec![0.0; n * n];
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let a = if k == 0 { scale0 } else { scale };
        for x in 0..n {
            basis[k * n + x] = a * (PI * (2 * x + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    basis
}

/// Separable orthonormal 2-D DCT-II of a row-major `width x height` block.
/// Output is indexed `[v * width + u]` (v vertical, u horizontal frequency).
pub fn dct2_orthonormal(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(data.len(), width * height);
    let bx = dct_basis(width);
    let by = dct_basis(height);

    let mut rows = vec![0.0; width * height];
    for y in 0..height {
        let src = &data[y * width..(y + 1) * width];
        for u in 0..width {
            let b = &bx[u * width..(u + 1) * width];
            rows[y * width + u] = src.iter().zip(b).map(|(s, c)| s * c).sum();
        }
    }

    let mut out = vec![0.0; width * height];
    for v in 0..height {
        let b = &by[v * height..(v + 1) * height];
        for u in 0..width {
            let mut acc = 0.0;
            for (y, c) in b.iter().enumerate() {
                acc += rows[y * width + u] * c;
            }
            out[v * width + u] = acc;
        }
    }
    out
}

/// High-to-low frequency energy ratio of the region's bounding-box crop.
///
/// Region pixels are centred on their mean and everything outside the region
/// is zeroed before the transform. Coefficients with index radius below
/// `min(bw, bh) / 4` form the low band; DC is excluded from both bands.
pub fn dct_band_ratio(img: &GrayImage, region: &PixelSet) -> Result<f64> {
    dct_band_ratio_with_divisor(img, region, DEFAULT_LOW_BAND_DIVISOR)
}

pub fn dct_band_ratio_with_divisor(img: &GrayImage, region: &PixelSet, divisor: f64) -> Result<f64> {
    region.check_frame(img.dimensions())?;
    let (x0, y0, x1, y1) = region.bounding_box().ok_or(Error::EmptyRegion)?;
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);

    let crop = centred_crop(img, region, (x0, y0, bw, bh));
    let coeffs = dct2_orthonormal(&crop, bw, bh);
    Ok(band_ratio(&coeffs, bw, bh, divisor))
}

pub(crate) fn centred_crop(img: &GrayImage, region: &PixelSet, (x0, y0, bw, bh): (usize, usize, usize, usize)) -> Vec<f64> {
    let n = region.count() as f64;
    let mean = region.iter().map(|(x, y)| img.get(x, y)).sum::<f64>() / n;
    let mut crop = vec![0.0; bw * bh];
    for y in 0..bh {
        for x in 0..bw {
            if region.contains(x0 + x, y0 + y) {
                crop[y * bw + x] = img.get(x0 + x, y0 + y) - mean;
            }
        }
    }
    crop
}

pub(crate) fn band_ratio(coeffs: &[f64], bw: usize, bh: usize, divisor: f64) -> f64 {
    let cutoff = bw.min(bh) as f64 / divisor;
    let (mut low, mut high) = (0.0, 0.0);
    for v in 0..bh {
        for u in 0..bw {
            if u == 0 && v == 0 {
                continue;
            }
            let r = ((u * u + v * v) as f64).sqrt();
            let c = coeffs[v * bw + u].abs();
            if r < cutoff {
                low += c;
            } else {
                high += c;
            }
        }
    }
    high / low.max(EPS)
}
