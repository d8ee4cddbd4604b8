//! Mixed-forgery synthesis: alpha or Poisson blending of a fake region into
//! the real image, chosen by a seeded draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::ForgeryType;
use crate::error::{Error, Result};
use crate::vision::{PixelSet, RgbImage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlendConfig {
    pub alpha: f64,
    /// Probability of taking the alpha branch.
    pub poisson_probability: f64,
    pub solver_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            poisson_probability: 0.5,
            solver_tolerance: 1e-5,
            max_iterations: 10_000,
        }
    }
}

impl BlendConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidThreshold { name: "alpha", value: self.alpha });
        }
        if !(0.0..=1.0).contains(&self.poisson_probability) {
            return Err(Error::InvalidThreshold {
                name: "poisson_probability",
                value: self.poisson_probability,
            });
        }
        if self.solver_tolerance.is_nan() || self.solver_tolerance <= 0.0 {
            return Err(Error::InvalidThreshold {
                name: "solver_tolerance",
                value: self.solver_tolerance,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendKind {
    Alpha,
    Poisson,
}

fn check_inputs(real: &RgbImage, fake: &RgbImage, region: &PixelSet) -> Result<()> {
    if real.dimensions() != fake.dimensions() {
        return Err(Error::DimensionMismatch(real.dimensions(), fake.dimensions()));
    }
    region.check_frame(real.dimensions())
}

/// Round half away from zero into a byte.
fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Inside `region`: `round(alpha * fake + (1 - alpha) * real)`; outside: `real`.
pub fn alpha_blend(real: &RgbImage, fake: &RgbImage, region: &PixelSet, alpha: f64) -> Result<RgbImage> {
    check_inputs(real, fake, region)?;
    let mut out = real.clone();
    for (x, y) in region.iter() {
        let r = real.pixel(x, y);
        let f = fake.pixel(x, y);
        let px = std::array::from_fn(|c| to_byte(alpha * f64::from(f[c]) + (1.0 - alpha) * f64::from(r[c])));
        out.set_pixel(x, y, px);
    }
    Ok(out)
}

/// Real-valued solution for one channel of a Poisson blend.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonChannel {
    /// Full-frame field; equals the real channel outside the region.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub max_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonOutput {
    pub image: RgbImage,
    pub channels: Vec<PoissonChannel>,
}

impl PoissonOutput {
    pub fn converged(&self) -> bool {
        self.channels.iter().all(|c| c.converged)
    }

    pub fn max_residual(&self) -> f64 {
        self.channels.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}

const NEIGHBOURS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Gauss-Seidel solve of `lap(u) = lap(source)` on `region` with `u = target`
/// elsewhere. Both planes are full-frame and row-major.
pub fn poisson_solve_channel(
    target: &[f64],
    source: &[f64],
    width: usize,
    height: usize,
    region: &PixelSet,
    tolerance: f64,
    max_iterations: usize,
) -> PoissonChannel {
    assert_eq!(target.len(), width * height);
    assert_eq!(source.len(), width * height);
    let pixels: Vec<usize> = region.iter().map(|(x, y)| y * width + x).collect();
    let neighbours = |i: usize| {
        let (x, y) = ((i % width) as isize, (i / width) as isize);
        NEIGHBOURS.map(|(dx, dy)| ((y + dy) * width as isize + (x + dx)) as usize)
    };
    // Guidance: 4 f_p - sum f_q.
    let guidance: Vec<f64> = pixels
        .iter()
        .map(|&i| 4.0 * source[i] - neighbours(i).iter().map(|&j| source[j]).sum::<f64>())
        .collect();

    let mut u = target.to_vec();
    let residual = |u: &[f64]| -> f64 {
        pixels
            .iter()
            .zip(&guidance)
            .map(|(&i, b)| (4.0 * u[i] - neighbours(i).iter().map(|&j| u[j]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    };

    let mut max_residual = residual(&u);
    let mut iterations = 0;
    while max_residual >= tolerance && iterations < max_iterations {
        for (&i, b) in pixels.iter().zip(&guidance) {
            let s: f64 = neighbours(i).iter().map(|&j| u[j]).sum();
            u[i] = (s + b) / 4.0;
        }
        iterations += 1;
        max_residual = residual(&u);
    }
    PoissonChannel {
        values: u,
        iterations,
        max_residual,
        converged: max_residual < tolerance,
    }
}

/// Seamless clone of `fake` into `real` over `region`, one channel at a time.
/// Non-convergence is reported through [`PoissonOutput::converged`] with the
/// best iterate returned.
pub fn poisson_blend(real: &RgbImage, fake: &RgbImage, region: &PixelSet, cfg: &BlendConfig) -> Result<PoissonOutput> {
    check_inputs(real, fake, region)?;
    let (w, h) = real.dimensions();
    if region.iter().any(|(x, y)| x == 0 || y == 0 || x + 1 == w || y + 1 == h) {
        return Err(Error::RegionTouchesBorder);
    }
    let channels: Vec<PoissonChannel> = (0..3)
        .into_par_iter()
        .map(|c| {
            let t = real.channel(c);
            let s = fake.channel(c);
            poisson_solve_channel(t.data(), s.data(), w, h, region, cfg.solver_tolerance, cfg.max_iterations)
        })
        .collect();
    if !channels.iter().all(|c| c.converged) {
        log::warn!(
            "poisson blend stopped after {} iterations without converging",
            cfg.max_iterations
        );
    }
    let mut image = real.clone();
    for (x, y) in region.iter() {
        let i = y * w + x;
        image.set_pixel(x, y, std::array::from_fn(|c| to_byte(channels[c].values[i])));
    }
    Ok(PoissonOutput { image, channels })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedForgery {
    pub image: RgbImage,
    pub kind: BlendKind,
    /// The uniform draw that selected the branch.
    pub draw: f64,
    pub implied_types: Vec<ForgeryType>,
    /// Solver state for the Poisson branch.
    pub converged: Option<bool>,
}

/// Draw `p` uniformly from (0, 1]; `p <= poisson_probability` takes the alpha
/// branch (which implies a blend boundary), otherwise Poisson.
pub fn make_mixed_forgery(
    real: &RgbImage,
    fake: &RgbImage,
    region: &PixelSet,
    cfg: &BlendConfig,
    seed: u64,
) -> Result<MixedForgery> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = 1.0 - rng.gen::<f64>();
    if p <= cfg.poisson_probability {
        Ok(MixedForgery {
            image: alpha_blend(real, fake, region, cfg.alpha)?,
            kind: BlendKind::Alpha,
            draw: p,
            implied_types: vec![ForgeryType::BlendBoundary],
            converged: None,
        })
    } else {
        let out = poisson_blend(real, fake, region, cfg)?;
        let converged = out.converged();
        Ok(MixedForgery {
            image: out.image,
            kind: BlendKind::Poisson,
            draw: p,
            implied_types: Vec::new(),
            converged: Some(converged),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (RgbImage, RgbImage) {
        let real = RgbImage::filled(9, 9, [100, 100, 100]).unwrap();
        let fake = RgbImage::filled(9, 9, [200, 200, 200]).unwrap();
        (real, fake)
    }

    #[test]
    fn alpha_extremes_and_midpoint() {
        let (real, fake) = pair();
        let region = PixelSet::rect(9, 9, 2, 2, 7, 7);
        let one = alpha_blend(&real, &fake, &region, 1.0).unwrap();
        assert_eq!(one.pixel(4, 4), [200; 3]);
        assert_eq!(one.pixel(0, 0), [100; 3]);
        assert_eq!(alpha_blend(&real, &fake, &region, 0.0).unwrap(), real);
        assert_eq!(alpha_blend(&real, &fake, &region, 0.9).unwrap().pixel(3, 3), [190; 3]);
    }

    #[test]
    fn poisson_identity_source() {
        let real = RgbImage::from_fn(9, 9, |x, y| [(x * 20) as u8, (y * 20) as u8, 50]).unwrap();
        let region = PixelSet::rect(9, 9, 2, 2, 7, 7);
        let out = poisson_blend(&real, &real, &region, &BlendConfig::default()).unwrap();
        assert_eq!(out.image, real);
        assert!(out.channels.iter().all(|c| c.iterations == 0));
    }

    #[test]
    fn poisson_constant_fill_takes_boundary_value() {
        let (real, fake) = pair();
        let region = PixelSet::rect(9, 9, 2, 2, 7, 7);
        let out = poisson_blend(&real, &fake, &region, &BlendConfig::default()).unwrap();
        assert_eq!(out.image, real);
    }

    #[test]
    fn poisson_rejects_border_regions() {
        let (real, fake) = pair();
        let region = PixelSet::rect(9, 9, 0, 2, 4, 7);
        assert!(matches!(
            poisson_blend(&real, &fake, &region, &BlendConfig::default()),
            Err(Error::RegionTouchesBorder)
        ));
    }

    #[test]
    fn branch_extremes() {
        let (real, fake) = pair();
        let region = PixelSet::rect(9, 9, 2, 2, 7, 7);
        let mut cfg = BlendConfig { poisson_probability: 1.0, ..Default::default() };
        for seed in 0..20 {
            assert_eq!(make_mixed_forgery(&real, &fake, &region, &cfg, seed).unwrap().kind, BlendKind::Alpha);
        }
        cfg.poisson_probability = 0.0;
        for seed in 0..20 {
            let m = make_mixed_forgery(&real, &fake, &region, &cfg, seed).unwrap();
            assert_eq!(m.kind, BlendKind::Poisson);
            assert!(m.implied_types.is_empty());
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let real = RgbImage::from_fn(12, 12, |x, y| [(x * 9) as u8, (y * 13) as u8, 77]).unwrap();
        let fake = RgbImage::from_fn(12, 12, |x, y| [(y * 11) as u8, 30, (x * 17) as u8]).unwrap();
        let region = PixelSet::rect(12, 12, 3, 3, 9, 9);
        let cfg = BlendConfig::default();
        let a = make_mixed_forgery(&real, &fake, &region, &cfg, 7).unwrap();
        let b = make_mixed_forgery(&real, &fake, &region, &cfg, 7).unwrap();
        assert_eq!(a, b);
    }
}
