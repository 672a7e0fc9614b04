//! The two-stage enhancement: gated denoising, then illumination interpolation.

use crate::config::{PipelineConfig, Variant};
use crate::denoise::denoise;
use crate::error::Result;
use crate::illum::{mean_interpolate, optimize_alpha};
use crate::image::ImageF;
use crate::noise::{estimate_sigma, NoiseEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnhanceOptions {
    /// Run the noise-removal stage (still subject to the gate).
    pub denoise: bool,
}

impl Default for EnhanceOptions {
    fn default() -> Self {
        Self { denoise: true }
    }
}

/// Every intermediate of one enhancement run; all images have three channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Enhanced {
    pub u: ImageF,
    pub v: ImageF,
    pub y: ImageF,
    pub s: ImageF,
    pub alpha: ImageF,
    pub noise: NoiseEstimate,
    pub denoised: bool,
    pub energy_trace: Vec<f64>,
    pub loss_trace: Vec<f64>,
}

pub fn enhance(x: &ImageF, config: &PipelineConfig) -> Result<Enhanced> {
    enhance_with(x, config, EnhanceOptions::default())
}

/// Grayscale input is promoted to three identical channels first.
pub fn enhance_with(
    x: &ImageF,
    config: &PipelineConfig,
    options: EnhanceOptions,
) -> Result<Enhanced> {
    config.validate()?;
    let x = x.to_rgb();
    let noise = estimate_sigma(&x, config.order)?;

    let (u, v, denoised, energy_trace) = if options.denoise {
        let d = denoise(&x, &noise, &config.gate()?, &config.denoise_settings())?;
        (d.u, d.v, d.applied, d.energy_trace)
    } else {
        let zeros = ImageF::zeros_like(&x);
        (x.clone(), zeros, false, Vec::new())
    };

    let illum = match config.variant {
        Variant::Mean => mean_interpolate(&u, config.epsilon_div),
        Variant::Optimized => optimize_alpha(&u, config)?,
    };

    Ok(Enhanced {
        u,
        v,
        y: illum.y,
        s: illum.s,
        alpha: illum.alpha,
        noise,
        denoised,
        energy_trace,
        loss_trace: illum.loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_is_fixed_point() {
        let x = ImageF::filled(12, 12, 3, 1.0);
        for variant in [Variant::Mean, Variant::Optimized] {
            let cfg = PipelineConfig {
                variant,
                ..PipelineConfig::default()
            };
            let out = enhance(&x, &cfg).unwrap();
            assert!(out.v.data().iter().all(|&v| v == 0.0));
            assert!(out.y.data().iter().all(|&v| v == 1.0));
            assert!(out.s.data().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn flat_quarter_mean_variant() {
        let x = ImageF::filled(12, 12, 3, 0.25);
        let cfg = PipelineConfig {
            variant: Variant::Mean,
            ..PipelineConfig::default()
        };
        let out = enhance(&x, &cfg).unwrap();
        assert!(!out.denoised);
        assert!(out
            .s
            .data()
            .iter()
            .all(|&v| (v - 0.5714285714285714).abs() < 1e-12));
    }

    #[test]
    fn grayscale_is_promoted() {
        let x = ImageF::filled(12, 12, 1, 0.25);
        let out = enhance(&x, &PipelineConfig::default()).unwrap();
        assert_eq!(out.s.channels(), 3);
    }
}
