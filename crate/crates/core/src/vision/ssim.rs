use super::{GrayImage, PixelSet};
use crate::error::{Error, Result};

/// Side of the uniform square window.
pub const SSIM_WINDOW: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn combine(&self, mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
        let (c1, c2) = (self.c1(), self.c2());
        ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    }
}

/// Summed-area table over `f(a, b)` with a zero guard row and column.
struct Integral {
    stride: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn build(a: &GrayImage, b: &GrayImage, f: impl Fn(f64, f64) -> f64) -> Self {
        let (w, h) = a.dimensions();
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(a.get(x, y), b.get(x, y));
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { stride, sums }
    }

    /// Sum over `[x, x+n) x [y, y+n)`.
    fn window(&self, x: usize, y: usize, n: usize) -> f64 {
        let s = self.stride;
        self.sums[(y + n) * s + x + n] - self.sums[y * s + x + n] - self.sums[(y + n) * s + x] + self.sums[y * s + x]
    }
}

/// Mean local SSIM over every 8x8 window lying inside the region's bounding
/// box. When the box is smaller than the window, a single global SSIM is
/// taken over the region pixels instead.
pub fn ssim(a: &GrayImage, b: &GrayImage, region: &PixelSet) -> Result<f64> {
    ssim_with(a, b, region, &SsimParams::default())
}

pub fn ssim_with(a: &GrayImage, b: &GrayImage, region: &PixelSet, params: &SsimParams) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch(a.dimensions(), b.dimensions()));
    }
    region.check_frame(a.dimensions())?;
    let (x0, y0, x1, y1) = region.bounding_box().ok_or(Error::EmptyRegion)?;
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);

    if bw < SSIM_WINDOW || bh < SSIM_WINDOW {
        return Ok(global_ssim(a, b, region, params));
    }

    let sa = Integral::build(a, b, |p, _| p);
    let sb = Integral::build(a, b, |_, q| q);
    let saa = Integral::build(a, b, |p, _| p * p);
    let sbb = Integral::build(a, b, |_, q| q * q);
    let sab = Integral::build(a, b, |p, q| p * q);

    let n = SSIM_WINDOW;
    let count = (n * n) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for y in y0..=(y1 + 1 - n) {
        for x in x0..=(x1 + 1 - n) {
            let mu_a = sa.window(x, y, n) / count;
            let mu_b = sb.window(x, y, n) / count;
            let var_a = saa.window(x, y, n) / count - mu_a * mu_a;
            let var_b = sbb.window(x, y, n) / count - mu_b * mu_b;
            let cov = sab.window(x, y, n) / count - mu_a * mu_b;
            total += params.combine(mu_a, mu_b, var_a, var_b, cov);
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

fn global_ssim(a: &GrayImage, b: &GrayImage, region: &PixelSet, params: &SsimParams) -> f64 {
    let pa: Vec<f64> = region.iter().map(|(x, y)| a.get(x, y)).collect();
    let pb: Vec<f64> = region.iter().map(|(x, y)| b.get(x, y)).collect();
    let n = pa.len() as f64;
    let mu_a = pa.iter().sum::<f64>() / n;
    let mu_b = pb.iter().sum::<f64>() / n;
    let cov = |u: &[f64], mu: f64, v: &[f64], mv: f64| u.iter().zip(v).map(|(p, q)| (p - mu) * (q - mv)).sum::<f64>() / n;
    let var_a = cov(&pa, mu_a, &pa, mu_a);
    let var_b = cov(&pb, mu_b, &pb, mu_b);
    let cab = cov(&pa, mu_a, &pb, mu_b);
    params.combine(mu_a, mu_b, var_a, var_b, cab)
}
