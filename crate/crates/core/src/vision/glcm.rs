use super::{GrayImage, PixelSet};
use crate::error::{Error, Result};

pub const GLCM_LEVELS: usize = 256;

/// Offsets for right, down, left and up neighbours.
const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Round half up to an integer gray level in `0..=255`.
pub fn quantize_level(v: f64) -> usize {
    (v + 0.5).floor().clamp(0.0, (GLCM_LEVELS - 1) as f64) as usize
}

/// Gray-level co-occurrence matrix averaged over the four orthogonal
/// directions at distance 1, normalized to unit mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Glcm {
    levels: usize,
    matrix: Vec<f64>,
}

impl Glcm {
    /// Counts only pairs where both pixels lie in `region`.
    pub fn from_region(img: &GrayImage, region: &PixelSet) -> Result<Self> {
        region.check_frame(img.dimensions())?;
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let (w, h) = img.dimensions();
        let levels = GLCM_LEVELS;
        let mut counts = vec![0u64; levels * levels];
        let mut total = 0u64;
        for (x, y) in region.iter() {
            let i = quantize_level(img.get(x, y));
            for (dx, dy) in DIRECTIONS {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if !region.contains(nx, ny) {
                    continue;
                }
                let j = quantize_level(img.get(nx, ny));
                counts[i * levels + j] += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::NoPairs);
        }
        // The four-direction average divides every cell by 4; normalizing
        // afterwards cancels it, so one division by the total suffices.
        let total = total as f64;
        let matrix = counts.into_iter().map(|c| c as f64 / total).collect();
        Ok(Self { levels, matrix })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `(1/65536) * sum |i-j|^2 P(i,j)`.
    pub fn contrast(&self) -> f64 {
        let n = (self.levels * self.levels) as f64;
        let mut acc = 0.0;
        for i in 0..self.levels {
            for j in 0..self.levels {
                let p = self.matrix[i * self.levels + j];
                if p != 0.0 {
                    let d = i as f64 - j as f64;
                    acc += d * d * p;
                }
            }
        }
        acc / n
    }
}

pub fn glcm_contrast(img: &GrayImage, region: &PixelSet) -> Result<f64> {
    Ok(Glcm::from_region(img, region)?.contrast())
}
