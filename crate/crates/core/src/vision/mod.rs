//! Image primitives shared by every detector: raster types, color conversion,
//! filtering, similarity, texture, frequency and morphology kernels.
//!
//! All kernels are pure functions over immutable buffers. Border handling is
//! replicate padding throughout.

mod canny;
mod color;
mod dct;
mod filter;
mod glcm;
pub mod io;
mod morphology;
mod ssim;

pub use canny::{canny, gaussian_blur};
pub use color::{rgb_to_lab, to_grayscale};
pub use dct::{dct_band_ratio, dct_band_ratio_with_divisor, dct2_orthonormal, DEFAULT_LOW_BAND_DIVISOR};
pub use filter::{convolve3x3, laplacian, laplacian_variance, sobel_gradients, sobel_magnitude, LAPLACIAN_KERNEL};
pub use glcm::{glcm_contrast, quantize_level, Glcm, GLCM_LEVELS};
pub use morphology::{dilate, erode};
pub use ssim::{ssim, SsimParams, SSIM_WINDOW};

use crate::error::{Error, Result};

fn check_len(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    if width * height * channels != len {
        return Err(Error::InvalidBuffer {
            width,
            height,
            channels,
            len,
        });
    }
    Ok(())
}

/// 8-bit interleaved RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, 3, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        check_len(width, height, 3, width * height * 3)?;
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        check_len(width, height, 3, width * height * 3)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// One channel as a real-valued plane.
    pub fn channel(&self, c: usize) -> GrayImage {
        let data = self.data.iter().skip(c).step_by(3).map(|&v| f64::from(v)).collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Real-valued single-channel raster, row-major. Natural range is [0, 255].
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width, height, 1, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("gray image values must be finite".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Replicate-padded access.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage::from_raw_unchecked(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// 8-bit serialization: `round(value)` clamped to [0, 255].
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect()
    }
}

/// CIELAB raster in the 8-bit-scaled convention: `L*255/100`, `a+128`, `b+128`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width, height, 3, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Apply `f` to one channel in place.
    pub fn map_channel(&mut self, c: usize, f: impl Fn(f64) -> f64) {
        for v in self.data.iter_mut().skip(c).step_by(3) {
            *v = f(*v);
        }
    }
}

/// Boolean membership over a frame. Set operations require matching frames.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PixelSet {
    width: usize,
    height: usize,
    members: Vec<bool>,
}

impl PixelSet {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            members: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            members: vec![true; width * height],
        }
    }

    pub fn new(width: usize, height: usize, members: Vec<bool>) -> Result<Self> {
        check_len(width, height, 1, members.len())?;
        Ok(Self {
            width,
            height,
            members,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut members = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                members.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            members,
        }
    }

    /// Axis-aligned rectangle `[x0, x1) x [y0, y1)`, clipped to the frame.
    pub fn rect(width: usize, height: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self::from_fn(width, height, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.members[y * self.width + x]
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.members[y * self.width + x] = true;
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn is_full(&self) -> bool {
        self.members.iter().all(|&m| m)
    }

    /// Member coordinates in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)`, or `None` when empty.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for (x, y) in self.iter() {
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bb
    }

    pub fn check_frame(&self, dims: (usize, usize)) -> Result<()> {
        if self.dimensions() != dims {
            return Err(Error::DimensionMismatch(self.dimensions(), dims));
        }
        Ok(())
    }

    fn zip_with(&self, other: &PixelSet, f: impl Fn(bool, bool) -> bool) -> Result<PixelSet> {
        other.check_frame(self.dimensions())?;
        Ok(PixelSet {
            width: self.width,
            height: self.height,
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn union(&self, other: &PixelSet) -> Result<PixelSet> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &PixelSet) -> Result<PixelSet> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &PixelSet) -> Result<PixelSet> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &PixelSet) -> bool {
        self.dimensions() == other.dimensions()
            && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &PixelSet) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !(a && b))
    }
}
