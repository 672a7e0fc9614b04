//! Noise-aware illuminance interpolation for low-light image enhancement.
//!
//! The pipeline runs in two stages. A gradient-statistics estimator measures the
//! Gaussian noise level of the input, and a gated total-variation denoiser removes
//! it (`x = u + v`). The denoised image `u` is then lifted by an illumination map
//! built as a convex interpolation between `u` and white (`y = u*alpha + (1 - alpha)`),
//! and the reflectance `s = u / y` is the enhanced result.
//!
//! ```
//! use lii_core::{enhance, ImageF, PipelineConfig, Variant};
//!
//! let dark = ImageF::filled(16, 16, 3, 0.25);
//! let config = PipelineConfig { variant: Variant::Mean, ..PipelineConfig::default() };
//! let out = enhance(&dark, &config).unwrap();
//! assert!((out.s.data()[0] - 0.25 / 0.4375).abs() < 1e-12);
//! ```

pub mod config;
pub mod denoise;
mod error;
pub mod illum;
pub mod image;
pub mod loss;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod pngio;
pub mod rng;
pub mod synth;

pub use config::{PipelineConfig, Variant};
pub use denoise::{denoise, tv, DenoiseSettings, Denoised};
pub use error::{Error, Result};
pub use illum::{
    interpolate_with_alpha, mean_interpolate, optimize_alpha, IllumResult, InterpolationField,
};
pub use image::{channel_mean, gradient, Axis, GradientField, ImageF};
pub use loss::{nr_loss, srr_loss, total_loss, LossWeights, SrrConstants};
pub use metrics::{
    diff_heatmap, illum_diagnostics, loe, mse, psnr, ssim, DiffMap, IllumDiagnostics, MetricsReport,
};
pub use noise::{
    add_gaussian_noise, binom_denominator, estimate_sigma, gate, validate_estimator, NoiseEstimate,
    NoiseGate, ValidationPlan, ValidationRow,
};
pub use pipeline::{enhance, enhance_with, EnhanceOptions, Enhanced};
pub use pngio::{decode_png, encode_png};
pub use synth::{degrade, DegradeSettings};
