//! Reference-free losses: the brightness-band recovery loss on the reflectance
//! and the noise-weighted TV energy on the denoised image.

use crate::denoise::tv;
use crate::error::{Error, Result};
use crate::image::{channel_mean, ImageF};

/// Target channel means and the half-width of the zero-loss band around them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrrConstants {
    pub eta1: [f64; 3],
    pub eta2: [f64; 3],
}

impl Default for SrrConstants {
    /// ImageNet channel means and standard deviations.
    fn default() -> Self {
        Self {
            eta1: [0.485, 0.456, 0.406],
            eta2: [0.229, 0.224, 0.225],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_srr: f64,
    pub lambda_nr: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_srr: 1.0,
            lambda_nr: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda_srr: f64, lambda_nr: f64) -> Result<Self> {
        for (name, v) in [("lambda_srr", lambda_srr), ("lambda_nr", lambda_nr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self {
            lambda_srr,
            lambda_nr,
        })
    }
}

/// Loss and its derivative with respect to each channel mean.
///
/// Per channel `exp(relu(|m - eta1| - eta2)) - 1`, averaged over the three channels.
pub fn srr_from_means(means: &[f64; 3], constants: &SrrConstants) -> (f64, [f64; 3]) {
    let mut loss = 0.0;
    let mut grad = [0.0; 3];
    for c in 0..3 {
        let dev = means[c] - constants.eta1[c];
        let excess = dev.abs() - constants.eta2[c];
        if excess > 0.0 {
            let e = excess.exp();
            loss += e - 1.0;
            grad[c] = e * dev.signum() / 3.0;
        }
    }
    (loss / 3.0, grad)
}

pub fn srr_loss(s: &ImageF, constants: &SrrConstants) -> Result<f64> {
    if s.channels() != 3 {
        return Err(Error::InvalidParameter(format!(
            "brightness loss needs 3 channels, got {}",
            s.channels()
        )));
    }
    let m = channel_mean(s);
    Ok(srr_from_means(&[m[0], m[1], m[2]], constants).0)
}

/// `(||u - x||^2 + eta * sigma * TV(u)) / N` with `N` the sample count.
pub fn nr_loss(u: &ImageF, x: &ImageF, sigma: f64, eta: f64, epsilon: f64) -> Result<f64> {
    u.ensure_same_shape(x)?;
    let fidelity: f64 = u
        .data()
        .iter()
        .zip(x.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let weight = eta * sigma;
    let reg = if weight == 0.0 {
        0.0
    } else {
        weight * tv(u, epsilon)
    };
    Ok((fidelity + reg) / u.len() as f64)
}

/// `lambda_srr * srr(s) + lambda_nr * nr(u, x)`.
#[allow(clippy::too_many_arguments)]
pub fn total_loss(
    s: &ImageF,
    u: &ImageF,
    x: &ImageF,
    weights: &LossWeights,
    constants: &SrrConstants,
    sigma: f64,
    eta: f64,
    epsilon: f64,
) -> Result<f64> {
    let srr = srr_loss(s, constants)?;
    let nr = nr_loss(u, x, sigma, eta, epsilon)?;
    Ok(weights.lambda_srr * srr + weights.lambda_nr * nr)
}
