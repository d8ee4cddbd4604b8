use super::PixelSet;

const CROSS: [(isize, isize); 5] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];

fn step(mask: &PixelSet, grow: bool) -> PixelSet {
    let (w, h) = mask.dimensions();
    PixelSet::from_fn(w, h, |x, y| {
        let mut hits = CROSS.iter().map(|(dx, dy)| {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            // Outside the frame counts as background.
            nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize && mask.contains(nx as usize, ny as usize)
        });
        if grow {
            hits.any(|m| m)
        } else {
            hits.all(|m| m)
        }
    })
}

/// `radius` iterations of a 3x3 cross dilation.
pub fn dilate(mask: &PixelSet, radius: usize) -> PixelSet {
    (0..radius).fold(mask.clone(), |m, _| step(&m, true))
}

/// `radius` iterations of a 3x3 cross erosion.
pub fn erode(mask: &PixelSet, radius: usize) -> PixelSet {
    (0..radius).fold(mask.clone(), |m, _| step(&m, false))
}
