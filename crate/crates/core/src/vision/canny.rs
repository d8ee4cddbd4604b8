use std::collections::VecDeque;

use super::filter::sobel_gradients;
use super::{GrayImage, PixelSet};

const GAUSS_RADIUS: isize = 2;
pub(crate) const CANNY_SIGMA: f64 = 1.4;

fn gaussian_taps(sigma: f64) -> [f64; 5] {
    let mut taps = [0.0; 5];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - GAUSS_RADIUS as f64;
        *t = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// 5x5 Gaussian smoothing (separable, replicate padding).
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let taps = gaussian_taps(sigma);
    let (w, h) = img.dimensions();
    let mut horiz = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let v: f64 = (-GAUSS_RADIUS..=GAUSS_RADIUS)
                .map(|d| taps[(d + GAUSS_RADIUS) as usize] * img.get_clamped(x + d, y))
                .sum();
            horiz.push(v);
        }
    }
    let horiz = GrayImage::from_raw_unchecked(w, h, horiz);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let v: f64 = (-GAUSS_RADIUS..=GAUSS_RADIUS)
                .map(|d| taps[(d + GAUSS_RADIUS) as usize] * horiz.get_clamped(x, y + d))
                .sum();
            out.push(v);
        }
    }
    GrayImage::from_raw_unchecked(w, h, out)
}

/// Canny edge detector: Gaussian smoothing (sigma 1.4), Sobel gradients,
/// non-maximum suppression over four angle sectors, then hysteresis with
/// 8-connected growth from strong pixels.
///
/// A pixel is strong when its suppressed magnitude is `>= high` and weak when
/// it is `>= low`; zero magnitudes never count.
pub fn canny(img: &GrayImage, low: f64, high: f64) -> PixelSet {
    let (w, h) = img.dimensions();
    let blurred = gaussian_blur(img, CANNY_SIGMA);
    let (gx, gy) = sobel_gradients(&blurred);
    let mag: Vec<f64> = gx.data().iter().zip(gy.data()).map(|(a, b)| a.hypot(*b)).collect();
    let at = |x: isize, y: isize| -> f64 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        mag[cy * w + cx]
    };

    let mut thin = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag[y * w + x];
            if m == 0.0 {
                continue;
            }
            let mut angle = gy.get(x, y).atan2(gx.get(x, y)).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = at(xi - dx, yi - dy);
            let after = at(xi + dx, yi + dy);
            // Ties go to the pixel further along the gradient so plateaus stay one pixel thick.
            if m > before && m >= after {
                thin[y * w + x] = m;
            }
        }
    }

    let mut edges = PixelSet::empty(w, h);
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > 0.0 && m >= high {
            edges.insert(i % w, i / w);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let j = ny * w + nx;
                if !edges.contains(nx, ny) && thin[j] > 0.0 && thin[j] >= low {
                    edges.insert(nx, ny);
                    queue.push_back(j);
                }
            }
        }
    }
    edges
}
