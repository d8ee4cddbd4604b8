use super::{GrayImage, PixelSet};
use crate::error::{Error, Result};

/// 4-neighbour Laplacian stencil.
pub const LAPLACIAN_KERNEL: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]];

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// 3x3 correlation with replicate padding. `kernel[row][col]`.
pub fn convolve3x3(img: &GrayImage, kernel: &[[f64; 3]; 3]) -> GrayImage {
    let (w, h) = img.dimensions();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (ky, row) in kernel.iter().enumerate() {
                for (kx, &k) in row.iter().enumerate() {
                    if k != 0.0 {
                        acc += k * img.get_clamped(x + kx as isize - 1, y + ky as isize - 1);
                    }
                }
            }
            out.push(acc);
        }
    }
    GrayImage::from_raw_unchecked(w, h, out)
}

pub fn laplacian(img: &GrayImage) -> GrayImage {
    convolve3x3(img, &LAPLACIAN_KERNEL)
}

/// Population variance of the Laplacian response restricted to `region`.
pub fn laplacian_variance(img: &GrayImage, region: &PixelSet) -> Result<f64> {
    region.check_frame(img.dimensions())?;
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let lap = laplacian(img);
    let values: Vec<f64> = region.iter().map(|(x, y)| lap.get(x, y)).collect();
    Ok(population_variance(&values))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Two-pass population variance.
pub(crate) fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Horizontal and vertical Sobel responses.
pub fn sobel_gradients(img: &GrayImage) -> (GrayImage, GrayImage) {
    (convolve3x3(img, &SOBEL_X), convolve3x3(img, &SOBEL_Y))
}

/// Per-pixel `sqrt(gx^2 + gy^2)`.
pub fn sobel_magnitude(img: &GrayImage) -> GrayImage {
    let (gx, gy) = sobel_gradients(img);
    let data = gx.data().iter().zip(gy.data()).map(|(a, b)| a.hypot(*b)).collect();
    GrayImage::from_raw_unchecked(img.width(), img.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_constant_is_zero() {
        let img = GrayImage::filled(6, 5, 77.0).unwrap();
        assert!(laplacian(&img).data().iter().all(|&v| v == 0.0));
        assert_eq!(laplacian_variance(&img, &PixelSet::full(6, 5)).unwrap(), 0.0);
    }

    #[test]
    fn single_pixel_region_has_zero_variance() {
        let img = GrayImage::from_fn(5, 5, |x, y| (x * 31 + y * 7) as f64).unwrap();
        let mut r = PixelSet::empty(5, 5);
        r.insert(2, 2);
        assert_eq!(laplacian_variance(&img, &r).unwrap(), 0.0);
    }

    #[test]
    fn empty_region_rejected() {
        let img = GrayImage::filled(3, 3, 1.0).unwrap();
        assert!(matches!(laplacian_variance(&img, &PixelSet::empty(3, 3)), Err(Error::EmptyRegion)));
        assert!(laplacian_variance(&img, &PixelSet::full(4, 3)).is_err());
    }

    #[test]
    fn checkerboard_interior_variance() {
        // Interior response alternates between -1020 and +1020, so the variance is 1020^2.
        let img = GrayImage::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 255.0 } else { 0.0 }).unwrap();
        let interior = PixelSet::rect(8, 8, 1, 1, 7, 7);
        let v = laplacian_variance(&img, &interior).unwrap();
        assert!((v - 1020.0 * 1020.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn sobel_step_edges() {
        let v = GrayImage::from_fn(8, 6, |x, _| if x < 4 { 0.0 } else { 255.0 }).unwrap();
        let m = sobel_magnitude(&v);
        assert_eq!(m.get(3, 3), 1020.0);
        assert_eq!(m.get(4, 3), 1020.0);
        assert_eq!(m.get(1, 3), 0.0);

        let h = GrayImage::from_fn(6, 8, |_, y| if y < 4 { 0.0 } else { 255.0 }).unwrap();
        let (gx, gy) = sobel_gradients(&h);
        assert_eq!(gy.get(3, 3), 1020.0);
        assert_eq!(gx.get(3, 3), 0.0);
        assert_eq!(sobel_magnitude(&h).get(3, 4), 1020.0);
    }

    #[test]
    fn sobel_of_constant_is_zero() {
        let img = GrayImage::filled(5, 5, 200.0).unwrap();
        assert!(sobel_magnitude(&img).data().iter().all(|&v| v == 0.0));
    }
}
