//! Deterministic synthetic faces with 68 landmarks and localized edits, used
//! for fixtures and end-to-end checks where real datasets are unavailable.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{partition_regions, Landmarks, RegionName};
use crate::vision::{io, PixelSet, RgbImage};

/// Localized manipulation applied inside one region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    /// Two passes of a 5x5 box filter.
    Blur,
    /// Per-channel additive offset.
    ColorShift,
    /// Content displaced by a few pixels.
    Warp,
    /// Independent strong noise.
    Noise,
}

impl EditKind {
    pub const ALL: [EditKind; 4] = [EditKind::Blur, EditKind::ColorShift, EditKind::Warp, EditKind::Noise];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub region: RegionName,
    pub kind: EditKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticPair {
    pub real: RgbImage,
    pub fake: RgbImage,
    pub landmarks: Landmarks,
    pub edits: Vec<Edit>,
}

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64, n: usize, start: f64, end: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = start + (end - start) * i as f64 / (n - 1) as f64;
            [cx + rx * t.cos(), cy + ry * t.sin()]
        })
        .collect()
}

fn closed_ring(cx: f64, cy: f64, rx: f64, ry: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = PI + 2.0 * PI * i as f64 / n as f64;
            [cx + rx * t.cos(), cy + ry * t.sin()]
        })
        .collect()
}

/// 68 points in the usual ordering on a unit square, jittered by `rng`.
fn unit_landmarks(rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut j = |s: f64| rng.gen_range(-s..s);
    let (dx, dy) = (j(0.02), j(0.02));
    let mut pts = Vec::with_capacity(68);
    // Jaw 0-16: lower half ellipse from left ear to right ear.
    pts.extend(ellipse(0.5, 0.45, 0.36 + j(0.01), 0.45, 17, PI, 0.0));
    // Brows 17-26.
    for (x0, x1) in [(0.2, 0.43), (0.57, 0.8)] {
        for i in 0..5 {
            let x = x0 + (x1 - x0) * i as f64 / 4.0;
            let arch = 0.03 * (1.0 - ((i as f64 - 2.0) / 2.0).powi(2));
            pts.push([x, 0.29 - arch]);
        }
    }
    // Nose bridge 27-30 and base 31-35.
    for i in 0..4 {
        pts.push([0.5, 0.38 + 0.055 * i as f64]);
    }
    for i in 0..5 {
        let x = 0.42 + 0.04 * i as f64;
        pts.push([x, 0.58 + 0.015 * (1.0 - ((i as f64 - 2.0) / 2.0).abs())]);
    }
    // Eyes 36-41 and 42-47.
    for cx in [0.34, 0.66] {
        pts.extend(closed_ring(cx, 0.4 + j(0.01), 0.075, 0.03, 6));
    }
    // Outer lip 48-59 and inner lip 60-67.
    let mouth_y = 0.74 + j(0.015);
    pts.extend(closed_ring(0.5, mouth_y, 0.14 + j(0.01), 0.055, 12));
    pts.extend(closed_ring(0.5, mouth_y, 0.09, 0.022, 8));
    for p in &mut pts {
        p[0] += dx;
        p[1] += dy;
    }
    pts
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn render_real(size: usize, landmarks: &Landmarks, rng: &mut ChaCha8Rng) -> Result<RgbImage> {
    let map = partition_regions(landmarks, size, size)?;
    let tone: [f64; 3] = [165.0 + rng.gen_range(-15.0..15.0), 125.0 + rng.gen_range(-15.0..15.0), 105.0];
    let mut img = RgbImage::filled(size, size, [0; 3])?;
    for y in 0..size {
        for x in 0..size {
            let shade = 20.0 * ((x as f64 / size as f64) - 0.5) + 10.0 * ((y as f64 / size as f64) - 0.5);
            let n: f64 = rng.gen_range(-60.0..60.0);
            let base = if map.get(RegionName::Mouth).contains(x, y) {
                [tone[0] + 20.0, tone[1] - 45.0, tone[2] - 30.0]
            } else if map.get(RegionName::Eyes).contains(x, y) {
                [tone[0] - 70.0, tone[1] - 60.0, tone[2] - 45.0]
            } else if map.get(RegionName::Face).contains(x, y) || map.get(RegionName::Nose).contains(x, y) {
                tone
            } else {
                [70.0, 90.0, 120.0]
            };
            img.set_pixel(x, y, std::array::from_fn(|c| clamp_u8(base[c] + shade + n)));
        }
    }
    Ok(img)
}

fn box_blur(img: &RgbImage, radius: isize) -> RgbImage {
    let (w, h) = img.dimensions();
    RgbImage::from_fn(w, h, |x, y| {
        let mut acc = [0.0; 3];
        let mut n = 0.0;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                let p = img.pixel(sx, sy);
                for c in 0..3 {
                    acc[c] += f64::from(p[c]);
                }
                n += 1.0;
            }
        }
        acc.map(|v| clamp_u8(v / n))
    })
    .expect("same non-zero size")
}

/// Apply `kind` to `img` inside `region` only.
pub fn apply_edit(img: &RgbImage, region: &PixelSet, kind: EditKind, rng: &mut ChaCha8Rng) -> RgbImage {
    let (w, h) = img.dimensions();
    let mut out = img.clone();
    match kind {
        EditKind::Blur => {
            let blurred = box_blur(&box_blur(img, 2), 2);
            for (x, y) in region.iter() {
                out.set_pixel(x, y, blurred.pixel(x, y));
            }
        }
        EditKind::ColorShift => {
            let sign = |r: &mut ChaCha8Rng| if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            let offset: [f64; 3] = std::array::from_fn(|_| sign(rng) * rng.gen_range(35.0..50.0));
            for (x, y) in region.iter() {
                let p = img.pixel(x, y);
                out.set_pixel(x, y, std::array::from_fn(|c| clamp_u8(f64::from(p[c]) + offset[c])));
            }
        }
        EditKind::Warp => {
            let (dx, dy) = (rng.gen_range(3..6) as isize, rng.gen_range(2..5) as isize);
            for (x, y) in region.iter() {
                let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                out.set_pixel(x, y, img.pixel(sx, sy));
            }
        }
        EditKind::Noise => {
            for (x, y) in region.iter() {
                let p = img.pixel(x, y);
                let n: f64 = rng.gen_range(-70.0..70.0);
                out.set_pixel(x, y, std::array::from_fn(|c| clamp_u8(f64::from(p[c]) + n)));
            }
        }
    }
    out
}

/// A face of `size x size` pixels with `edits` applied to produce the fake.
/// An empty edit list yields an identical (real) pair.
pub fn generate_pair(size: usize, seed: u64, edits: &[Edit]) -> Result<SyntheticPair> {
    if size < 48 {
        return Err(Error::Config(format!("synthetic face size {size} is below the 48 px minimum")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let points = unit_landmarks(&mut rng).into_iter().map(|[x, y]| [x * s, y * s]).collect();
    let landmarks = Landmarks::new(points)?;
    let real = render_real(size, &landmarks, &mut rng)?;
    let map = partition_regions(&landmarks, size, size)?;
    let mut fake = real.clone();
    for e in edits {
        fake = apply_edit(&fake, map.get(e.region), e.kind, &mut rng);
    }
    Ok(SyntheticPair {
        real,
        fake,
        landmarks,
        edits: edits.to_vec(),
    })
}

/// One or two random edits on distinct regions, drawn from `seed`.
pub fn random_edits(seed: u64) -> Vec<Edit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ed17);
    let n = rng.gen_range(1..=2);
    let mut regions = RegionName::ALL.to_vec();
    (0..n)
        .map(|_| {
            let region = regions.remove(rng.gen_range(0..regions.len()));
            Edit {
                region,
                kind: EditKind::ALL[rng.gen_range(0..EditKind::ALL.len())],
            }
        })
        .collect()
}

/// Method tag used for fixture fakes.
pub const FIXTURE_METHOD: &str = "synth";

/// Writes `pairs` pairs under `root` in the `real/`, `fake/<method>/`,
/// `landmarks/` layout. Every seventh pair is unedited. Ids look like
/// `v003_020` (video 3, frame 20).
pub fn write_fixture(root: impl AsRef<Path>, pairs: usize, size: usize, seed: u64) -> Result<Vec<(String, Vec<Edit>)>> {
    let root = root.as_ref();
    let mut written = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let id = format!("v{:03}_{:03}", i / 3, (i % 3) * 10);
        let pair_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        let edits = if i % 7 == 6 { Vec::new() } else { random_edits(pair_seed) };
        let pair = generate_pair(size, pair_seed, &edits)?;
        io::save_rgb(&pair.real, root.join("real").join(format!("{id}.png")))?;
        io::save_rgb(&pair.fake, root.join("fake").join(FIXTURE_METHOD).join(format!("{id}.png")))?;
        let lm_dir = root.join("landmarks");
        std::fs::create_dir_all(&lm_dir).map_err(|e| Error::io(&lm_dir, e))?;
        let lm_path = lm_dir.join(format!("{id}.json"));
        let text = serde_json::to_string(&pair.landmarks)?;
        std::fs::write(&lm_path, text).map_err(|e| Error::io(&lm_path, e))?;
        written.push((id, edits));
    }
    Ok(written)
}
