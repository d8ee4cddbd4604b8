//! Forgery mask generation, landmark-driven facial region partition and
//! thresholded forgery-region extraction.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vision::{dilate, GrayImage, PixelSet, RgbImage};

/// Default extraction threshold on the mean mask value.
pub const DEFAULT_THETA: f64 = 0.05;

/// Eye hulls are grown by this many pixels to take in lids and brow shadow.
pub const EYE_DILATION: usize = 4;

/// Per-pixel manipulation intensity in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ForgeryMask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ForgeryMask {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if values.len() != width * height {
            return Err(Error::InvalidBuffer {
                width,
                height,
                channels: 1,
                len: values.len(),
            });
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("mask values must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, values })
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Pixels at or above `level`.
    pub fn binarize(&self, level: f64) -> PixelSet {
        PixelSet::from_fn(self.width, self.height, |x, y| self.get(x, y) >= level)
    }

    /// Pixels at or above half the mask maximum; empty for an all-zero mask.
    pub fn binarize_half_max(&self) -> PixelSet {
        let max = self.max();
        if max <= 0.0 {
            return PixelSet::empty(self.width, self.height);
        }
        self.binarize(0.5 * max)
    }

    /// 8-bit export: `round(255 * M)`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.values.iter().map(|v| (255.0 * v).round() as u8).collect()
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(self.width, self.height, self.values.iter().map(|v| 255.0 * v).collect())
            .expect("mask frame is valid")
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::vision::io::save_luma8(&self.to_u8(), self.width, self.height, path)
    }
}

/// `M = mean_c |real_c - fake_c| / 255`, reduced to one plane by channel mean.
pub fn generate_mask(real: &RgbImage, fake: &RgbImage) -> Result<ForgeryMask> {
    if real.dimensions() != fake.dimensions() {
        return Err(Error::DimensionMismatch(real.dimensions(), fake.dimensions()));
    }
    let values = real
        .data()
        .chunks_exact(3)
        .zip(fake.data().chunks_exact(3))
        .map(|(r, f)| {
            let sum: u32 = r.iter().zip(f).map(|(&a, &b)| u32::from(a.abs_diff(b))).sum();
            f64::from(sum) / (3.0 * 255.0)
        })
        .collect();
    ForgeryMask::new(real.width(), real.height(), values)
}

/// The four facial areas, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionName {
    Mouth,
    Nose,
    Eyes,
    Face,
}

impl RegionName {
    pub const ALL: [RegionName; 4] = [RegionName::Mouth, RegionName::Nose, RegionName::Eyes, RegionName::Face];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionName::Mouth => "mouth",
            RegionName::Nose => "nose",
            RegionName::Eyes => "eyes",
            RegionName::Face => "face",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RegionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownRegion(s.to_string()))
    }
}

/// 68 facial landmarks in the common iBUG/DLIB ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub points: Vec<[f64; 2]>,
}

impl Landmarks {
    pub const COUNT: usize = 68;

    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() != Self::COUNT {
            return Err(Error::LandmarkCount(points.len()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("landmark coordinates must be finite".into()));
        }
        Ok(Self { points })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Landmarks = serde_json::from_str(text)?;
        Self::new(raw.points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn clamped(&self, width: usize, height: usize) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p[0].clamp(0.0, (width - 1) as f64), p[1].clamp(0.0, (height - 1) as f64)))
            .collect()
    }
}

/// Landmark index ranges.
const JAW_TO_MOUTH: std::ops::Range<usize> = 0..68;
const NOSE: std::ops::Range<usize> = 27..36;
const RIGHT_EYE: std::ops::Range<usize> = 36..42;
const LEFT_EYE: std::ops::Range<usize> = 42..48;
const MOUTH: std::ops::Range<usize> = 48..68;

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Returns the hull in counter-clockwise order
/// (for a y-up frame), without collinear points.
pub(crate) fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        acc += a.0 * b.1 - b.0 * a.1;
    }
    acc.abs() / 2.0
}

/// Pixels whose centres (integer coordinates) lie inside or on the convex
/// hull of `points`.
fn filled_hull(points: &[(f64, f64)], width: usize, height: usize, name: &'static str) -> Result<PixelSet> {
    let hull = convex_hull(points);
    if polygon_area(&hull) <= 1e-9 {
        return Err(Error::DegenerateHull(name));
    }
    const EPS: f64 = 1e-9;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &hull {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let xs = x0.ceil().max(0.0) as usize;
    let ys = y0.ceil().max(0.0) as usize;
    let xe = (x1.floor() as usize).min(width - 1);
    let ye = (y1.floor() as usize).min(height - 1);
    let mut set = PixelSet::empty(width, height);
    for y in ys..=ye {
        for x in xs..=xe {
            let p = (x as f64, y as f64);
            let inside = (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) >= -EPS);
            if inside {
                set.insert(x, y);
            }
        }
    }
    Ok(set)
}

/// Pixel memberships for the four facial areas. Pairwise disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    regions: [PixelSet; 4],
}

impl RegionMap {
    /// Builds a map from explicit sets. Overlaps are removed with priority
    /// mouth, nose, eyes, face.
    pub fn from_sets(mouth: PixelSet, nose: PixelSet, eyes: PixelSet, face: PixelSet) -> Result<Self> {
        let dims = mouth.dimensions();
        for s in [&nose, &eyes, &face] {
            s.check_frame(dims)?;
        }
        let nose = nose.difference(&mouth)?;
        let taken = mouth.union(&nose)?;
        let eyes = eyes.difference(&taken)?;
        let taken = taken.union(&eyes)?;
        let face = face.difference(&taken)?;
        Ok(Self {
            regions: [mouth, nose, eyes, face],
        })
    }

    pub fn get(&self, name: RegionName) -> &PixelSet {
        &self.regions[name.index()]
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.regions[0].dimensions()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionName, &PixelSet)> {
        RegionName::ALL.into_iter().zip(self.regions.iter())
    }
}

/// Mouth = hull of 48-67; nose = hull of 27-35; eyes = both eye hulls
/// dilated by [`EYE_DILATION`]; face = hull of all 68 points minus the rest.
pub fn partition_regions(landmarks: &Landmarks, width: usize, height: usize) -> Result<RegionMap> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    let pts = landmarks.clamped(width, height);
    let mouth = filled_hull(&pts[MOUTH], width, height, "mouth")?;
    let nose = filled_hull(&pts[NOSE], width, height, "nose")?;
    let right = dilate(&filled_hull(&pts[RIGHT_EYE], width, height, "right eye")?, EYE_DILATION);
    let left = dilate(&filled_hull(&pts[LEFT_EYE], width, height, "left eye")?, EYE_DILATION);
    let eyes = right.union(&left)?;
    let face = filled_hull(&pts[JAW_TO_MOUTH], width, height, "face")?;
    RegionMap::from_sets(mouth, nose, eyes, face)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMean {
    pub region: RegionName,
    pub mean: f64,
}

/// Regions whose mean mask value exceeds the threshold, by descending mean.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ForgeryRegionList {
    entries: Vec<RegionMean>,
}

impl ForgeryRegionList {
    pub fn entries(&self) -> &[RegionMean] {
        &self.entries
    }

    pub fn regions(&self) -> impl Iterator<Item = RegionName> + '_ {
        self.entries.iter().map(|e| e.region)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, region: RegionName) -> bool {
        self.entries.iter().any(|e| e.region == region)
    }
}

/// Mean mask value of every region in canonical order.
pub fn region_means(mask: &ForgeryMask, map: &RegionMap) -> Result<Vec<RegionMean>> {
    if mask.dimensions() != map.dimensions() {
        return Err(Error::DimensionMismatch(mask.dimensions(), map.dimensions()));
    }
    map.iter()
        .map(|(region, set)| {
            let n = set.count();
            if n == 0 {
                return Err(Error::EmptyRegionMap(region.as_str()));
            }
            let sum: f64 = set.iter().map(|(x, y)| mask.get(x, y)).sum();
            Ok(RegionMean {
                region,
                mean: sum / n as f64,
            })
        })
        .collect()
}

/// Keeps regions with `mean > theta`, sorted by descending mean (ties in
/// canonical order).
pub fn extract_forgery_regions(mask: &ForgeryMask, map: &RegionMap, theta: f64) -> Result<ForgeryRegionList> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidThreshold { name: "theta", value: theta });
    }
    Ok(filter_means(&region_means(mask, map)?, theta))
}

/// Threshold and order precomputed region means.
pub fn filter_means(means: &[RegionMean], theta: f64) -> ForgeryRegionList {
    let mut entries: Vec<RegionMean> = means.iter().copied().filter(|e| e.mean > theta).collect();
    entries.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    ForgeryRegionList { entries }
}

/// Uniform seeded choice of one region from the list.
pub fn select_region(list: &ForgeryRegionList, seed: u64) -> Result<RegionName> {
    if list.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(list.entries[rng.gen_range(0..list.len())].region)
}
