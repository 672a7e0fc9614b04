//! Gaussian noise level estimation from high-order gradient statistics.
//!
//! For `x = u + v` with i.i.d. `v ~ N(0, sigma^2)`, the order-`n` difference of the
//! noise is `T = sum_k (-1)^k C(n,k) v(p+k)`, itself normal with variance
//! `sigma^2 * sum_k C(n,k)^2 = sigma^2 * C(2n, n)`. Hence `E|T| = sigma * sqrt(2 C(2n,n) / pi)`
//! and, when the clean image is smooth enough that `E|grad^n x| ~ E|T|`,
//!
//! ```text
//! sigma ~ sqrt(pi) * E|grad^n x| / sqrt(2 C(2n, n))
//! ```
//!
//! Horizontal and vertical differences are pooled into a single mean.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{gradient, Axis, ImageF};
use crate::rng::{derive_seed, Gaussian};

pub const MAX_ORDER: usize = 16;

/// Per-channel and aggregate noise level on the unit intensity scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseEstimate {
    pub per_channel_sigma: Vec<f64>,
    pub aggregate_sigma: f64,
    pub order: usize,
}

impl NoiseEstimate {
    /// Builds an estimate whose aggregate is the channel mean.
    pub fn from_channels(per_channel_sigma: Vec<f64>, order: usize) -> Self {
        let aggregate_sigma =
            per_channel_sigma.iter().sum::<f64>() / per_channel_sigma.len().max(1) as f64;
        Self {
            per_channel_sigma,
            aggregate_sigma,
            order,
        }
    }

    /// The same estimate expressed on the 0..255 scale.
    pub fn to_255(&self) -> NoiseEstimate {
        NoiseEstimate {
            per_channel_sigma: self.per_channel_sigma.iter().map(|s| s * 255.0).collect(),
            aggregate_sigma: self.aggregate_sigma * 255.0,
            order: self.order,
        }
    }
}

/// Disables denoising unless the estimated noise strictly exceeds `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGate {
    threshold: f64,
}

impl NoiseGate {
    pub const DEFAULT_THRESHOLD: f64 = 0.01;

    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gate threshold must be finite and >= 0, got {threshold}"
            )));
        }
        Ok(Self { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for NoiseGate {
    fn default() -> Self {
        Self {
            threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

/// `sign(relu(sigma - threshold))`: true only when sigma is strictly above the threshold.
pub fn gate(estimate: &NoiseEstimate, gate: &NoiseGate) -> bool {
    estimate.aggregate_sigma - gate.threshold > 0.0
}

fn central_binomial(n: usize) -> u64 {
    // C(2n, n) by the multiplicative formula; every intermediate is an exact integer.
    (1..=n as u64).fold(1u64, |acc, k| acc * (n as u64 + k) / k)
}

/// `sqrt(2 * sum_k C(n,k)^2) = sqrt(2 * C(2n, n))`.
pub fn binom_denominator(order: usize) -> Result<f64> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "gradient order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    Ok((2.0 * central_binomial(order) as f64).sqrt())
}

pub fn estimate_sigma(img: &ImageF, order: usize) -> Result<NoiseEstimate> {
    let denom = binom_denominator(order)?;
    let gx = gradient(img, order, Axis::Horizontal)?;
    let gy = gradient(img, order, Axis::Vertical)?;
    let count = (gx.data().len() + gy.data().len()) / img.channels();

    let per_channel = (0..img.channels())
        .map(|ch| {
            let abs_sum: f64 = gx
                .channel_values(ch)
                .chain(gy.channel_values(ch))
                .map(f64::abs)
                .sum();
            std::f64::consts::PI.sqrt() * (abs_sum / count as f64) / denom
        })
        .collect();
    Ok(NoiseEstimate::from_channels(per_channel, order))
}

/// Adds i.i.d. `N(0, sigma^2)` to every sample, drawing from a SplitMix64/Box-Muller stream.
pub fn add_gaussian_noise(img: &ImageF, sigma: f64, seed: u64, clamp: bool) -> Result<ImageF> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut gauss = Gaussian::new(seed);
    let data: Vec<f64> = img
        .data()
        .iter()
        .map(|&v| {
            let out = v + sigma * gauss.next_standard();
            if clamp {
                out.clamp(0.0, 1.0)
            } else {
                out
            }
        })
        .collect();
    ImageF::new(img.height(), img.width(), img.channels(), data)
}

/// Parameters of the estimator validation study.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationPlan {
    /// Reference noise levels on the unit scale.
    pub sigmas: Vec<f64>,
    pub orders: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Clamp noisy images to `[0, 1]` before estimating.
    pub clamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    /// Reference sigma on the 0..255 scale.
    pub sigma_ref: f64,
    pub order: usize,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
}

pub const VALIDATION_CSV_HEADER: &str = "sigma_ref,order,mean_rel_error,std_rel_error";

/// Monte-Carlo relative error of [`estimate_sigma`] over a corpus.
///
/// Every `(image, sigma, trial)` cell draws its noise from a stream seeded by
/// `derive_seed(seed, [image, sigma, trial])`, so the table does not depend on
/// scheduling. All orders share a cell's noise realisation.
pub fn validate_estimator(plan: &ValidationPlan, corpus: &[ImageF]) -> Result<Vec<ValidationRow>> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("validation corpus is empty".into()));
    }
    if plan.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if plan.sigmas.is_empty() || plan.orders.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one sigma and one order are required".into(),
        ));
    }
    if let Some(s) = plan.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "reference sigma must be > 0, got {s}"
        )));
    }
    for &n in &plan.orders {
        binom_denominator(n)?;
    }

    let cells: Vec<(usize, usize, usize)> = (0..corpus.len())
        .flat_map(|i| {
            (0..plan.sigmas.len()).flat_map(move |s| (0..plan.trials).map(move |t| (i, s, t)))
        })
        .collect();

    // errors[cell][order_idx]
    let errors: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(i, s, t)| -> Result<Vec<f64>> {
            let sigma = plan.sigmas[s];
            let seed = derive_seed(plan.seed, &[i as u64, s as u64, t as u64]);
            let noisy = add_gaussian_noise(&corpus[i], sigma, seed, plan.clamp)?;
            plan.orders
                .iter()
                .map(|&n| {
                    let est = estimate_sigma(&noisy, n)?;
                    Ok((est.aggregate_sigma - sigma).abs() / sigma)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(plan.sigmas.len() * plan.orders.len());
    for (s, &sigma) in plan.sigmas.iter().enumerate() {
        for (k, &order) in plan.orders.iter().enumerate() {
            let samples: Vec<f64> = cells
                .iter()
                .zip(&errors)
                .filter(|((_, cs, _), _)| *cs == s)
                .map(|(_, e)| e[k])
                .collect();
            let (mean, std) = mean_std(&samples);
            rows.push(ValidationRow {
                sigma_ref: sigma * 255.0,
                order,
                mean_rel_error: mean,
                std_rel_error: std,
            });
        }
    }
    Ok(rows)
}

/// Sample mean and (n-1)-normalised standard deviation; std is 0 for a single sample.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn validation_csv(rows: &[ValidationRow]) -> String {
    let mut out = String::from(VALIDATION_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.sigma_ref, r.order, r.mean_rel_error, r.std_rel_error
        ));
    }
    out
}
