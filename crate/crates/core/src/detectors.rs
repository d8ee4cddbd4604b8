//! The five forgery-type deciders. Each returns a [`TypeEvidence`] carrying
//! the boolean decision together with the raw metrics it was derived from.
//!
//! All comparisons are strict, and all statistics are population statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::ForgeryMask;
use crate::vision::{
    canny, dct_band_ratio_with_divisor, dilate, erode, glcm_contrast, laplacian_variance, rgb_to_lab, sobel_magnitude,
    ssim, to_grayscale, GrayImage, LabImage, PixelSet, RgbImage, DEFAULT_LOW_BAND_DIVISOR,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForgeryType {
    ColorDifference,
    Blur,
    StructureAbnormal,
    TextureAbnormal,
    BlendBoundary,
}

impl ForgeryType {
    /// Fixed reporting order.
    pub const ALL: [ForgeryType; 5] = [
        ForgeryType::ColorDifference,
        ForgeryType::Blur,
        ForgeryType::StructureAbnormal,
        ForgeryType::TextureAbnormal,
        ForgeryType::BlendBoundary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ForgeryType::ColorDifference => "ColorDifference",
            ForgeryType::Blur => "Blur",
            ForgeryType::StructureAbnormal => "StructureAbnormal",
            ForgeryType::TextureAbnormal => "TextureAbnormal",
            ForgeryType::BlendBoundary => "BlendBoundary",
        }
    }
}

impl fmt::Display for ForgeryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForgeryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ForgeryType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownType(s.to_string()))
    }
}

/// Which blend-boundary metric crossed its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCue {
    Gradient,
    Edge,
    Frequency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorThresholds {
    pub color_mean: f64,
    pub color_std: f64,
    pub blur: f64,
    pub ssim: f64,
    pub texture: f64,
    pub blend_gradient: f64,
    pub blend_edge: f64,
    pub blend_frequency: f64,
    /// Width in pixels of the inner and outer boundary bands.
    pub boundary_width: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    pub dct_low_band_divisor: f64,
}

impl Default for DetectorThresholds {
    fn default() -> Self {
        Self {
            color_mean: 1.0,
            color_std: 0.5,
            blur: 100.0,
            ssim: 0.97,
            texture: 0.7,
            blend_gradient: 15.0,
            blend_edge: 0.10,
            blend_frequency: 0.5,
            boundary_width: 5,
            canny_low: 50.0,
            canny_high: 100.0,
            dct_low_band_divisor: DEFAULT_LOW_BAND_DIVISOR,
        }
    }
}

impl DetectorThresholds {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("color_mean", self.color_mean),
            ("color_std", self.color_std),
            ("blur", self.blur),
            ("ssim", self.ssim),
            ("texture", self.texture),
            ("blend_gradient", self.blend_gradient),
            ("blend_edge", self.blend_edge),
            ("blend_frequency", self.blend_frequency),
            ("canny_low", self.canny_low),
            ("canny_high", self.canny_high),
        ];
        for (name, value) in named {
            if value.is_nan() || value < 0.0 {
                return Err(Error::InvalidThreshold { name, value });
            }
        }
        if !(self.ssim > 0.0 && self.ssim <= 1.0) {
            return Err(Error::InvalidThreshold { name: "ssim", value: self.ssim });
        }
        if self.canny_low > self.canny_high {
            return Err(Error::InvalidThreshold { name: "canny_low", value: self.canny_low });
        }
        if self.dct_low_band_divisor.is_nan() || self.dct_low_band_divisor <= 0.0 {
            return Err(Error::InvalidThreshold {
                name: "dct_low_band_divisor",
                value: self.dct_low_band_divisor,
            });
        }
        Ok(())
    }
}

/// Outcome of one detector on one region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeEvidence {
    pub forgery_type: ForgeryType,
    pub triggered: bool,
    pub metrics: BTreeMap<String, f64>,
    /// Blend-boundary cues that crossed their thresholds; empty for other types.
    pub cues: Vec<BoundaryCue>,
    /// Set when the detector could not run; `triggered` is then false.
    pub note: Option<String>,
}

impl TypeEvidence {
    fn new(forgery_type: ForgeryType, metrics: &[(&str, f64)], th: &DetectorThresholds) -> Self {
        let metrics: BTreeMap<String, f64> = metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let cues = boundary_cues(forgery_type, &metrics, th);
        let triggered = decide(forgery_type, &metrics, th).unwrap_or(false);
        Self {
            forgery_type,
            triggered,
            metrics,
            cues,
            note: None,
        }
    }

    pub fn failed(forgery_type: ForgeryType, err: &Error) -> Self {
        Self {
            forgery_type,
            triggered: false,
            metrics: BTreeMap::new(),
            cues: Vec::new(),
            note: Some(err.to_string()),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    /// Re-derive the decision from the stored metrics.
    pub fn recompute(&self, th: &DetectorThresholds) -> bool {
        self.note.is_none() && decide(self.forgery_type, &self.metrics, th).unwrap_or(false)
    }
}

fn boundary_cues(t: ForgeryType, m: &BTreeMap<String, f64>, th: &DetectorThresholds) -> Vec<BoundaryCue> {
    if t != ForgeryType::BlendBoundary {
        return Vec::new();
    }
    let mut cues = Vec::new();
    if m.get("s_g").is_some_and(|&v| v > th.blend_gradient) {
        cues.push(BoundaryCue::Gradient);
    }
    if m.get("s_e").is_some_and(|&v| v > th.blend_edge) {
        cues.push(BoundaryCue::Edge);
    }
    if m.get("s_f").is_some_and(|&v| v > th.blend_frequency) {
        cues.push(BoundaryCue::Frequency);
    }
    cues
}

/// The decision rule of each detector, as a function of its metrics.
fn decide(t: ForgeryType, m: &BTreeMap<String, f64>, th: &DetectorThresholds) -> Option<bool> {
    let g = |k: &str| m.get(k).copied();
    Some(match t {
        ForgeryType::ColorDifference => g("m")? > th.color_mean && g("s")? > th.color_std,
        ForgeryType::Blur => {
            let (r, f) = (g("r_var")?, g("f_var")?);
            r > f && (r - f) > th.blur
        }
        ForgeryType::StructureAbnormal => g("ssim")? < th.ssim,
        ForgeryType::TextureAbnormal => {
            let (r, f) = (g("c_d_real")?, g("c_d_fake")?);
            r > f && (r - f) > th.texture
        }
        ForgeryType::BlendBoundary => boundary_cues(t, m, th).len() >= 2,
    })
}

fn channel_stats(lab: &LabImage, region: &PixelSet) -> ([f64; 3], [f64; 3]) {
    let n = region.count() as f64;
    let mut mean = [0.0; 3];
    for (x, y) in region.iter() {
        let p = lab.pixel(x, y);
        for c in 0..3 {
            mean[c] += p[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for (x, y) in region.iter() {
        let p = lab.pixel(x, y);
        for c in 0..3 {
            var[c] += (p[c] - mean[c]).powi(2);
        }
    }
    (mean, var.map(|v| (v / n).sqrt()))
}

/// Color difference on already converted Lab rasters.
pub fn detect_color_difference_lab(
    real: &LabImage,
    fake: &LabImage,
    region: &PixelSet,
    th: &DetectorThresholds,
) -> Result<TypeEvidence> {
    if real.dimensions() != fake.dimensions() {
        return Err(Error::DimensionMismatch(real.dimensions(), fake.dimensions()));
    }
    region.check_frame(real.dimensions())?;
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (mr, sr) = channel_stats(real, region);
    let (mf, sf) = channel_stats(fake, region);
    let dm: [f64; 3] = std::array::from_fn(|c| (mr[c] - mf[c]).abs());
    let ds: [f64; 3] = std::array::from_fn(|c| (sr[c] - sf[c]).abs());
    let m = (dm[0] + dm[1] + dm[2]) / 3.0;
    let s = (ds[0] + ds[1] + ds[2]) / 3.0;
    Ok(TypeEvidence::new(
        ForgeryType::ColorDifference,
        &[
            ("l_m", dm[0]),
            ("a_m", dm[1]),
            ("b_m", dm[2]),
            ("l_s", ds[0]),
            ("a_s", ds[1]),
            ("b_s", ds[2]),
            ("m", m),
            ("s", s),
        ],
        th,
    ))
}

/// Lab mean/std distance; triggers when `m > color_mean` and `s > color_std`.
pub fn detect_color_difference(
    real: &RgbImage,
    fake: &RgbImage,
    region: &PixelSet,
    th: &DetectorThresholds,
) -> Result<TypeEvidence> {
    if real.dimensions() != fake.dimensions() {
        return Err(Error::DimensionMismatch(real.dimensions(), fake.dimensions()));
    }
    detect_color_difference_lab(&rgb_to_lab(real), &rgb_to_lab(fake), region, th)
}

/// Triggers when the real region is sharper than the fake one by more than `blur`.
pub fn detect_blur(real: &GrayImage, fake: &GrayImage, region: &PixelSet, th: &DetectorThresholds) -> Result<TypeEvidence> {
    let r_var = laplacian_variance(real, region)?;
    let f_var = laplacian_variance(fake, region)?;
    Ok(TypeEvidence::new(ForgeryType::Blur, &[("r_var", r_var), ("f_var", f_var)], th))
}

/// Triggers when SSIM between the regions drops below `ssim`.
pub fn detect_structure_abnormal(
    real: &GrayImage,
    fake: &GrayImage,
    region: &PixelSet,
    th: &DetectorThresholds,
) -> Result<TypeEvidence> {
    let s = ssim(real, fake, region)?;
    Ok(TypeEvidence::new(ForgeryType::StructureAbnormal, &[("ssim", s)], th))
}

/// Triggers when the real GLCM contrast exceeds the fake one by more than `texture`.
pub fn detect_texture_abnormal(
    real: &GrayImage,
    fake: &GrayImage,
    region: &PixelSet,
    th: &DetectorThresholds,
) -> Result<TypeEvidence> {
    let c_r = glcm_contrast(real, region)?;
    let c_f = glcm_contrast(fake, region)?;
    Ok(TypeEvidence::new(
        ForgeryType::TextureAbnormal,
        &[("c_d_real", c_r), ("c_d_fake", c_f)],
        th,
    ))
}

/// Inner band `mask - erode(mask, w)` and outer band `dilate(mask, w) - mask`.
pub fn boundary_bands(mask: &PixelSet, width: usize) -> Result<(PixelSet, PixelSet)> {
    let inner = mask.difference(&erode(mask, width))?;
    let outer = dilate(mask, width).difference(mask)?;
    Ok((inner, outer))
}

/// Gradient, edge and frequency evidence on the mask boundary; triggers when
/// at least two of the three exceed their thresholds.
pub fn detect_blend_boundary(image: &GrayImage, mask: &PixelSet, th: &DetectorThresholds) -> Result<TypeEvidence> {
    mask.check_frame(image.dimensions())?;
    let (inner, outer) = boundary_bands(mask, th.boundary_width)?;
    if inner.is_empty() || outer.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let band = inner.union(&outer)?;

    let mag = sobel_magnitude(image);
    let band_mean = |set: &PixelSet| set.iter().map(|(x, y)| mag.get(x, y)).sum::<f64>() / set.count() as f64;
    let s_g = (band_mean(&inner) - band_mean(&outer)).abs();

    let edges = canny(image, th.canny_low, th.canny_high);
    let s_e = edges.intersection(&band)?.count() as f64 / band.count() as f64;

    let s_f = dct_band_ratio_with_divisor(image, &band, th.dct_low_band_divisor)?;

    let votes = [s_g > th.blend_gradient, s_e > th.blend_edge, s_f > th.blend_frequency]
        .iter()
        .filter(|&&v| v)
        .count();
    Ok(TypeEvidence::new(
        ForgeryType::BlendBoundary,
        &[("s_g", s_g), ("s_e", s_e), ("s_f", s_f), ("evidence_count", votes as f64)],
        th,
    ))
}

/// Runs all five detectors on one region and returns their evidence in
/// [`ForgeryType::ALL`] order. A failing detector reports `triggered = false`
/// with a note instead of aborting.
///
/// Blend boundary runs on the fake image with the mask binarized at half its
/// maximum and restricted to `region`.
pub fn decide_types(
    real: &RgbImage,
    fake: &RgbImage,
    region: &PixelSet,
    mask: &ForgeryMask,
    th: &DetectorThresholds,
) -> Vec<TypeEvidence> {
    let real_gray = to_grayscale(real);
    let fake_gray = to_grayscale(fake);
    let blend_mask = mask.binarize_half_max().intersection(region);

    let run = |t: ForgeryType| -> Result<TypeEvidence> {
        match t {
            ForgeryType::ColorDifference => detect_color_difference(real, fake, region, th),
            ForgeryType::Blur => detect_blur(&real_gray, &fake_gray, region, th),
            ForgeryType::StructureAbnormal => detect_structure_abnormal(&real_gray, &fake_gray, region, th),
            ForgeryType::TextureAbnormal => detect_texture_abnormal(&real_gray, &fake_gray, region, th),
            ForgeryType::BlendBoundary => {
                let m = blend_mask.as_ref().map_err(|e| Error::Config(e.to_string()))?;
                if m.is_empty() {
                    return Err(Error::EmptyRegion);
                }
                detect_blend_boundary(&fake_gray, m, th)
            }
        }
    };
    ForgeryType::ALL
        .into_iter()
        .map(|t| run(t).unwrap_or_else(|e| TypeEvidence::failed(t, &e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th() -> DetectorThresholds {
        DetectorThresholds::default()
    }

    #[test]
    fn defaults_validate() {
        th().validate().unwrap();
        let mut bad = th();
        bad.ssim = 0.0;
        assert!(bad.validate().is_err());
        bad = th();
        bad.blur = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn type_names_round_trip() {
        for t in ForgeryType::ALL {
            assert_eq!(t.as_str().parse::<ForgeryType>().unwrap(), t);
        }
        assert!(matches!("Smudge".parse::<ForgeryType>(), Err(Error::UnknownType(_))));
    }

    #[test]
    fn lab_shift_moves_mean_but_not_std() {
        let real = rgb_to_lab(&RgbImage::from_fn(6, 6, |x, y| [(x * 30) as u8, (y * 20) as u8, 90]).unwrap());
        let mut fake = real.clone();
        fake.map_channel(0, |v| v + 10.0);
        let ev = detect_color_difference_lab(&real, &fake, &PixelSet::full(6, 6), &th()).unwrap();
        assert!((ev.metric("m").unwrap() - 10.0 / 3.0).abs() < 1e-9);
        assert!(ev.metric("s").unwrap() < 1e-9);
        assert!(!ev.triggered);
    }

    #[test]
    fn identical_regions_do_not_trigger() {
        let img = RgbImage::from_fn(16, 16, |x, y| [(x * 15) as u8, (y * 15) as u8, ((x * y) % 255) as u8]).unwrap();
        let region = PixelSet::rect(16, 16, 2, 2, 14, 14);
        let ev = detect_color_difference(&img, &img, &region, &th()).unwrap();
        assert_eq!((ev.metric("m"), ev.metric("s")), (Some(0.0), Some(0.0)));
        assert!(!ev.triggered);
    }

    fn checkerboard(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| if (x + y) % 2 == 0 { 255.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn blur_sign_condition() {
        let sharp = checkerboard(12, 12);
        let flat = GrayImage::filled(12, 12, 127.0).unwrap();
        let region = PixelSet::rect(12, 12, 2, 2, 10, 10);
        let ev = detect_blur(&sharp, &flat, &region, &th()).unwrap();
        assert!(ev.triggered);
        assert_eq!(ev.metric("f_var"), Some(0.0));
        assert!(!detect_blur(&flat, &sharp, &region, &th()).unwrap().triggered);
        assert!(!detect_blur(&sharp, &sharp, &region, &th()).unwrap().triggered);
    }

    #[test]
    fn structure_threshold_is_strict() {
        let a = GrayImage::filled(8, 8, 100.0).unwrap();
        let b = GrayImage::filled(8, 8, 50.0).unwrap();
        let full = PixelSet::full(8, 8);
        let ev = detect_structure_abnormal(&a, &b, &full, &th()).unwrap();
        assert!(ev.triggered);
        let mut at = th();
        at.ssim = ev.metric("ssim").unwrap();
        assert!(!detect_structure_abnormal(&a, &b, &full, &at).unwrap().triggered);
        assert!(!detect_structure_abnormal(&a, &a, &full, &th()).unwrap().triggered);
    }

    #[test]
    fn texture_checkerboard_against_constant() {
        let real = checkerboard(8, 8);
        let fake = GrayImage::filled(8, 8, 128.0).unwrap();
        let ev = detect_texture_abnormal(&real, &fake, &PixelSet::full(8, 8), &th()).unwrap();
        assert!((ev.metric("c_d_real").unwrap() - 65025.0 / 65536.0).abs() < 1e-12);
        assert_eq!(ev.metric("c_d_fake"), Some(0.0));
        assert!(ev.triggered);

        let stripes = GrayImage::from_fn(8, 8, |x, _| if x % 2 == 0 { 0.0 } else { 255.0 }).unwrap();
        let ev = detect_texture_abnormal(&stripes, &fake, &PixelSet::full(8, 8), &th()).unwrap();
        assert!((ev.metric("c_d_real").unwrap() - 0.4961).abs() < 1e-4);
        assert!(!ev.triggered);
    }

    #[test]
    fn blend_boundary_on_constant_image() {
        let img = GrayImage::filled(40, 40, 0.0).unwrap();
        let mask = PixelSet::rect(40, 40, 10, 10, 30, 30);
        let ev = detect_blend_boundary(&img, &mask, &th()).unwrap();
        assert_eq!(ev.metric("s_g"), Some(0.0));
        assert_eq!(ev.metric("s_e"), Some(0.0));
        assert_eq!(ev.metric("s_f"), Some(0.0));
        assert!(!ev.triggered);

        let gray = GrayImage::filled(40, 40, 117.0).unwrap();
        assert!(!detect_blend_boundary(&gray, &mask, &th()).unwrap().triggered);
    }

    #[test]
    fn blend_boundary_on_hard_paste() {
        let img = GrayImage::from_fn(48, 48, |x, y| {
            if (12..36).contains(&x) && (12..36).contains(&y) {
                220.0
            } else {
                30.0
            }
        })
        .unwrap();
        let mask = PixelSet::rect(48, 48, 12, 12, 36, 36);
        let ev = detect_blend_boundary(&img, &mask, &th()).unwrap();
        assert!(ev.metric("evidence_count").unwrap() >= 2.0, "{:?}", ev.metrics);
        assert!(ev.triggered);
        assert!(ev.cues.contains(&BoundaryCue::Gradient));
    }

    #[test]
    fn blend_boundary_needs_both_bands() {
        let img = GrayImage::filled(10, 10, 0.0).unwrap();
        assert!(matches!(
            detect_blend_boundary(&img, &PixelSet::full(10, 10), &th()),
            Err(Error::EmptyBoundary)
        ));
    }

    #[test]
    fn decide_types_identical_pair() {
        let img = RgbImage::from_fn(32, 32, |x, y| [(x * 7) as u8, (y * 7) as u8, 60]).unwrap();
        let mask = crate::region::generate_mask(&img, &img).unwrap();
        let ev = decide_types(&img, &img, &PixelSet::rect(32, 32, 4, 4, 28, 28), &mask, &th());
        let order: Vec<_> = ev.iter().map(|e| e.forgery_type).collect();
        assert_eq!(order, ForgeryType::ALL);
        assert!(ev.iter().all(|e| !e.triggered));
        assert!(ev[4].note.is_some());
    }
}
