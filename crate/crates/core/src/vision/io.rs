//! 8-bit PNG read/write for RGB and grayscale rasters.

use std::path::Path;

use super::{GrayImage, RgbImage};
use crate::error::{Error, Result};

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let img = image::open(path.as_ref())?.into_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::new(w as usize, h as usize, img.into_raw())
}

pub fn save_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    image::save_buffer(
        path,
        img.data(),
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let img = image::open(path.as_ref())?.into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::new(w as usize, h as usize, img.into_raw().into_iter().map(f64::from).collect())
}

/// Writes `round(value)` clamped to [0, 255].
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    save_luma8(&img.to_u8(), img.width(), img.height(), path)
}

pub(crate) fn save_luma8(data: &[u8], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    image::save_buffer(path, data, width as u32, height as u32, image::ExtendedColorType::L8)?;
    Ok(())
}
