//! Shared helpers for integration tests: brute-force kernel oracles, random
//! instances and a scripted HTTP stub.

#![allow(dead_code)]

pub mod oracles;
pub mod stub;

use fftg_core::vision::{GrayImage, PixelSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random 8-bit-valued gray image.
pub fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| f64::from(rng.gen::<u8>())).unwrap()
}

/// Random rectangle of at least `min` pixels per side with a few holes
/// punched in it.
pub fn random_region(rng: &mut ChaCha8Rng, w: usize, h: usize, min: usize) -> PixelSet {
    let x0 = rng.gen_range(0..=w - min);
    let y0 = rng.gen_range(0..=h - min);
    let x1 = rng.gen_range(x0 + min..=w);
    let y1 = rng.gen_range(y0 + min..=h);
    let holes = rng.gen_range(0..4);
    let mut members = PixelSet::rect(w, h, x0, y0, x1, y1).members().to_vec();
    for _ in 0..holes {
        let (x, y) = (rng.gen_range(x0 + 1..x1 - 1), rng.gen_range(y0 + 1..y1 - 1));
        members[y * w + x] = false;
    }
    PixelSet::new(w, h, members).unwrap()
}

/// `|a - b| <= tol * max(|b|, floor)`.
pub fn close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(floor)
}
