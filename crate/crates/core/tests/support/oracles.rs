//! Direct-definition versions of the image kernels. They share no code with
//! the library: no integral images, no separable transforms.

use std::f64::consts::PI;

use fftg_core::vision::{GrayImage, PixelSet};

fn at(img: &GrayImage, x: isize, y: isize) -> f64 {
    let xc = x.clamp(0, img.width() as isize - 1) as usize;
    let yc = y.clamp(0, img.height() as isize - 1) as usize;
    img.data()[yc * img.width() + xc]
}

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

pub fn laplacian_variance(img: &GrayImage, region: &PixelSet) -> f64 {
    let mut vals = Vec::new();
    for (x, y) in region.iter() {
        let (x, y) = (x as isize, y as isize);
        vals.push(at(img, x - 1, y) + at(img, x + 1, y) + at(img, x, y - 1) + at(img, x, y + 1) - 4.0 * at(img, x, y));
    }
    variance(&vals)
}

pub fn sobel_magnitude(img: &GrayImage, x: usize, y: usize) -> f64 {
    let (x, y) = (x as isize, y as isize);
    let p = |dx, dy| at(img, x + dx, y + dy);
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    (gx * gx + gy * gy).sqrt()
}

fn level(v: f64) -> i64 {
    ((v + 0.5).floor() as i64).clamp(0, 255)
}

/// Enumerate every ordered 4-neighbour pair inside the region.
pub fn glcm_contrast(img: &GrayImage, region: &PixelSet) -> f64 {
    let (w, h) = img.dimensions();
    let (mut sum, mut pairs) = (0.0, 0usize);
    for (x, y) in region.iter() {
        for (dx, dy) in [(1isize, 0isize), (0, 1), (-1, 0), (0, -1)] {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize || !region.contains(nx as usize, ny as usize) {
                continue;
            }
            let d = level(img.get(x, y)) - level(img.get(nx as usize, ny as usize));
            sum += (d * d) as f64;
            pairs += 1;
        }
    }
    sum / pairs as f64 / 65536.0
}

const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn ssim_of(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let va = a.iter().map(|p| (p - ma) * (p - ma)).sum::<f64>() / n;
    let vb = b.iter().map(|q| (q - mb) * (q - mb)).sum::<f64>() / n;
    let cov = a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n;
    ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2))
}

/// Mean SSIM of every 8x8 window inside the region's bounding box, or one
/// global SSIM over the region pixels when the box is too small.
pub fn ssim(a: &GrayImage, b: &GrayImage, region: &PixelSet) -> f64 {
    let (x0, y0, x1, y1) = region.bounding_box().unwrap();
    if x1 - x0 + 1 < 8 || y1 - y0 + 1 < 8 {
        let pa: Vec<f64> = region.iter().map(|(x, y)| a.get(x, y)).collect();
        let pb: Vec<f64> = region.iter().map(|(x, y)| b.get(x, y)).collect();
        return ssim_of(&pa, &pb);
    }
    let mut scores = Vec::new();
    for wy in y0..=y1 + 1 - 8 {
        for wx in x0..=x1 + 1 - 8 {
            let mut pa = Vec::with_capacity(64);
            let mut pb = Vec::with_capacity(64);
            for y in wy..wy + 8 {
                for x in wx..wx + 8 {
                    pa.push(a.get(x, y));
                    pb.push(b.get(x, y));
                }
            }
            scores.push(ssim_of(&pa, &pb));
        }
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Orthonormal DCT-II by the double-sum definition.
pub fn dct2(data: &[f64], w: usize, h: usize) -> Vec<f64> {
    let alpha = |k: usize, n: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    let mut out = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = 0.0;
            for y in 0..h {
                for x in 0..w {
                    acc += data[y * w + x]
                        * (PI * (2 * x + 1) as f64 * u as f64 / (2 * w) as f64).cos()
                        * (PI * (2 * y + 1) as f64 * v as f64 / (2 * h) as f64).cos();
                }
            }
            out[v * w + u] = alpha(u, w) * alpha(v, h) * acc;
        }
    }
    out
}

/// High/low DCT energy ratio on the mean-centred, zero-padded bounding box.
pub fn dct_band_ratio(img: &GrayImage, region: &PixelSet) -> f64 {
    let (x0, y0, x1, y1) = region.bounding_box().unwrap();
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let vals: Vec<f64> = region.iter().map(|(x, y)| img.get(x, y)).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let mut crop = vec![0.0; w * h];
    for (x, y) in region.iter() {
        crop[(y - y0) * w + (x - x0)] = img.get(x, y) - mean;
    }
    let c = dct2(&crop, w, h);
    let cutoff = w.min(h) as f64 / 4.0;
    let (mut low, mut high) = (0.0, 0.0);
    for v in 0..h {
        for u in 0..w {
            if u + v == 0 {
                continue;
            }
            if (((u * u + v * v) as f64).sqrt()) < cutoff {
                low += c[v * w + u].abs();
            } else {
                high += c[v * w + u].abs();
            }
        }
    }
    high / low.max(1e-12)
}
