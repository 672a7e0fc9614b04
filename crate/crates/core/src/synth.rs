//! Synthetic low-light degradation and procedural test scenes.

use crate::error::{Error, Result};
use crate::image::{global_mean, ImageF};
use crate::noise::add_gaussian_noise;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSettings {
    pub gamma: f64,
    /// Gaussian noise added after darkening, unit scale.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DegradeSettings {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// `x = (1 - mean(s))^(3 gamma) * s^(2 gamma)`, optionally with clamped Gaussian noise.
///
/// `mean(s)` is the scalar mean over every sample. `gamma = 0` gives the all-ones image.
pub fn degrade(s: &ImageF, settings: &DegradeSettings) -> Result<ImageF> {
    if !(settings.gamma >= 0.0 && settings.gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be finite and >= 0, got {}",
            settings.gamma
        )));
    }
    let scale = (1.0 - global_mean(s)).max(0.0).powf(3.0 * settings.gamma);
    let exponent = 2.0 * settings.gamma;
    let dark = s.map(|v| (scale * v.clamp(0.0, 1.0).powf(exponent)).clamp(0.0, 1.0));
    if settings.noise_sigma > 0.0 {
        add_gaussian_noise(&dark, settings.noise_sigma, settings.seed, true)
    } else if settings.noise_sigma == 0.0 {
        Ok(dark)
    } else {
        Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {}",
            settings.noise_sigma
        )))
    }
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_open01()
}

/// A smooth RGB scene: tilted colour gradient plus a handful of soft-edged ellipses.
///
/// Values stay inside `[0.05, 0.95]`. Deterministic in `seed`.
pub fn scene(seed: u64, height: usize, width: usize) -> ImageF {
    let mut rng = SplitMix64::new(seed);
    let base: Vec<f64> = (0..3).map(|_| uniform(&mut rng, 0.25, 0.6)).collect();
    let tilt: Vec<(f64, f64)> = (0..3)
        .map(|_| {
            (
                uniform(&mut rng, -0.25, 0.25),
                uniform(&mut rng, -0.25, 0.25),
            )
        })
        .collect();
    let blobs: Vec<[f64; 7]> = (0..5)
        .map(|_| {
            [
                uniform(&mut rng, 0.0, 1.0),
                uniform(&mut rng, 0.0, 1.0),
                uniform(&mut rng, 0.08, 0.3),
                uniform(&mut rng, 0.08, 0.3),
                uniform(&mut rng, -0.3, 0.3),
                uniform(&mut rng, -0.3, 0.3),
                uniform(&mut rng, -0.3, 0.3),
            ]
        })
        .collect();
    let (hf, wf) = (height.max(2) as f64 - 1.0, width.max(2) as f64 - 1.0);
    let edge = 2.0 / height.max(width) as f64;

    ImageF::from_fn(height, width, 3, |r, c, k| {
        let (y, x) = (r as f64 / hf, c as f64 / wf);
        let mut v = base[k] + tilt[k].0 * (y - 0.5) + tilt[k].1 * (x - 0.5);
        for b in &blobs {
            let d = (((y - b[0]) / b[2]).powi(2) + ((x - b[1]) / b[3]).powi(2)).sqrt();
            let inside = 1.0 / (1.0 + ((d - 1.0) / (edge / b[2].min(b[3]))).exp());
            v += b[4 + k] * inside;
        }
        v.clamp(0.05, 0.95)
    })
    .expect("scene samples are finite")
}

/// A textured RGB scene: a smooth gradient with two superimposed sinusoidal
/// gratings of 6..12 pixel period.
pub fn textured_scene(seed: u64, height: usize, width: usize) -> ImageF {
    let mut rng = SplitMix64::new(seed ^ 0x7E57_0000);
    let base = uniform(&mut rng, 0.35, 0.55);
    let gratings: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            let period = uniform(&mut rng, 6.0, 12.0);
            let angle = uniform(&mut rng, 0.0, std::f64::consts::PI);
            let amp = uniform(&mut rng, 0.08, 0.15);
            let phase = uniform(&mut rng, 0.0, std::f64::consts::TAU);
            (period, angle, amp, phase)
        })
        .collect();
    let tint: Vec<f64> = (0..3).map(|_| uniform(&mut rng, -0.08, 0.08)).collect();

    ImageF::from_fn(height, width, 3, |r, c, k| {
        let mut v = base + tint[k] + 0.1 * (r as f64 / height as f64 - 0.5);
        for &(period, angle, amp, phase) in &gratings {
            let t = (c as f64 * angle.cos() + r as f64 * angle.sin()) / period;
            v += amp * (std::f64::consts::TAU * t + phase).sin();
        }
        v.clamp(0.02, 0.98)
    })
    .expect("scene samples are finite")
}
