//! Noise-weighted total-variation denoising.
//!
//! Minimises `E(u) = (||u - x||^2 + eta * sigma * TV(u)) / N` by gradient descent
//! from `u = x`, where `sigma` is the estimated noise level and `TV` is the
//! epsilon-smoothed isotropic total variation. The stage is skipped entirely when
//! the noise gate does not fire.

use crate::error::{Error, Result};
use crate::image::ImageF;
use crate::loss::nr_loss;
use crate::noise::{gate, NoiseEstimate, NoiseGate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseSettings {
    /// Regularisation coefficient; the TV weight is `eta * sigma`.
    pub eta: f64,
    pub tv_epsilon: f64,
    pub max_iters: usize,
    /// Initial step, in per-sample units (the gradient of `N * E`).
    pub step: f64,
    /// Stop once the relative energy decrease of an accepted step falls below this.
    pub rel_tol: f64,
}

impl Default for DenoiseSettings {
    fn default() -> Self {
        Self {
            eta: 2.0,
            tv_epsilon: 1e-3,
            max_iters: 200,
            step: 0.1,
            rel_tol: 1e-6,
        }
    }
}

impl DenoiseSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("eta", self.eta)?;
        positive("tv_epsilon", self.tv_epsilon)?;
        positive("step", self.step)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be finite and >= 0, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Output of [`denoise`]: `x = u + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub u: ImageF,
    pub v: ImageF,
    /// Whether the gate fired and the energy was minimised.
    pub applied: bool,
    /// Energy at the start and after every accepted step.
    pub energy_trace: Vec<f64>,
}

/// Smoothed isotropic total variation.
///
/// `sum sqrt(dx^2 + dy^2 + eps^2) - eps` over all pixels and channels, with forward
/// differences set to zero past the last column (for `dx`) and last row (for `dy`).
pub fn tv(img: &ImageF, epsilon: f64) -> f64 {
    let (h, w, ch) = img.shape();
    let d = img.data();
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            let i = (r * w + c) * ch;
            for k in 0..ch {
                let dx = if c + 1 < w {
                    d[i + ch + k] - d[i + k]
                } else {
                    0.0
                };
                let dy = if r + 1 < h {
                    d[i + w * ch + k] - d[i + k]
                } else {
                    0.0
                };
                total += (dx * dx + dy * dy + epsilon * epsilon).sqrt() - epsilon;
            }
        }
    }
    total
}

/// Gradient of [`tv`] with respect to every sample.
pub(crate) fn tv_gradient(img: &ImageF, epsilon: f64) -> Vec<f64> {
    let (h, w, ch) = img.shape();
    let d = img.data();
    let mut g = vec![0.0; d.len()];
    for r in 0..h {
        for c in 0..w {
            let i = (r * w + c) * ch;
            for k in 0..ch {
                let has_x = c + 1 < w;
                let has_y = r + 1 < h;
                let dx = if has_x { d[i + ch + k] - d[i + k] } else { 0.0 };
                let dy = if has_y {
                    d[i + w * ch + k] - d[i + k]
                } else {
                    0.0
                };
                let mag = (dx * dx + dy * dy + epsilon * epsilon).sqrt();
                let (px, py) = (dx / mag, dy / mag);
                g[i + k] -= px + py;
                if has_x {
                    g[i + ch + k] += px;
                }
                if has_y {
                    g[i + w * ch + k] += py;
                }
            }
        }
    }
    g
}

// Backtracking gives up once the step has shrunk this far.
const MIN_STEP: f64 = 1e-12;

pub fn denoise(
    x: &ImageF,
    estimate: &NoiseEstimate,
    noise_gate: &NoiseGate,
    settings: &DenoiseSettings,
) -> Result<Denoised> {
    settings.validate()?;
    if !gate(estimate, noise_gate) {
        return Ok(Denoised {
            u: x.clone(),
            v: ImageF::zeros_like(x),
            applied: false,
            energy_trace: Vec::new(),
        });
    }

    let sigma = estimate.aggregate_sigma;
    let weight = settings.eta * sigma;
    let energy = |u: &ImageF| nr_loss(u, x, sigma, settings.eta, settings.tv_epsilon);

    let mut u = x.clone();
    let mut current = energy(&u)?;
    let mut trace = vec![current];
    let mut step = settings.step;

    'outer: for iteration in 1..=settings.max_iters {
        let tv_grad = if weight == 0.0 {
            vec![0.0; u.len()]
        } else {
            tv_gradient(&u, settings.tv_epsilon)
        };
        let grad: Vec<f64> = u
            .data()
            .iter()
            .zip(x.data())
            .zip(&tv_grad)
            .map(|((a, b), t)| 2.0 * (a - b) + weight * t)
            .collect();

        let (candidate, next) = loop {
            let data: Vec<f64> = u
                .data()
                .iter()
                .zip(&grad)
                .map(|(a, g)| a - step * g)
                .collect();
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    stage: "denoise",
                    iteration,
                });
            }
            let cand = ImageF::from_parts(u.height(), u.width(), u.channels(), data);
            let e = energy(&cand)?;
            if !e.is_finite() {
                return Err(Error::Divergence {
                    stage: "denoise",
                    iteration,
                });
            }
            if e <= current {
                break (cand, e);
            }
            step *= 0.5;
            if step < MIN_STEP {
                break 'outer;
            }
        };

        let decrease = (current - next) / current.max(f64::MIN_POSITIVE);
        debug_assert!(next <= current);
        u = candidate;
        current = next;
        trace.push(current);
        if decrease < settings.rel_tol {
            break;
        }
    }

    let u = u.clamp01();
    let v = x.zip_map(&u, |a, b| a - b)?;
    Ok(Denoised {
        u,
        v,
        applied: true,
        energy_trace: trace,
    })
}
