use super::{GrayImage, LabImage, RgbImage};

/// BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
        .collect();
    GrayImage::from_raw_unchecked(img.width(), img.height(), data)
}

// D65 reference white.
const XN: f64 = 0.950_47;
const YN: f64 = 1.0;
const ZN: f64 = 1.088_83;

fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

pub(crate) fn rgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let r = srgb_to_linear(rgb[0]);
    let g = srgb_to_linear(rgb[1]);
    let b = srgb_to_linear(rgb[2]);

    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;

    let fx = lab_f(x / XN);
    let fy = lab_f(y / YN);
    let fz = lab_f(z / ZN);

    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);

    [
        (l * 255.0 / 100.0).clamp(0.0, 255.0),
        (a + 128.0).clamp(0.0, 255.0),
        (bb + 128.0).clamp(0.0, 255.0),
    ]
}

/// sRGB (D65) to CIELAB, scaled into the 8-bit convention
/// `L*255/100`, `a+128`, `b+128`, each clamped to [0, 255].
pub fn rgb_to_lab(img: &RgbImage) -> LabImage {
    let mut data = Vec::with_capacity(img.data().len());
    for p in img.data().chunks_exact(3) {
        data.extend_from_slice(&rgb_pixel_to_lab([p[0], p[1], p[2]]));
    }
    LabImage::new(img.width(), img.height(), data).expect("same frame as the source")
}
