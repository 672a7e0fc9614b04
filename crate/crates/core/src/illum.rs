//! Illumination by interpolation between the image and white.
//!
//! The illumination is `y = u*alpha + e*(1 - alpha)` with `alpha` in `[0, 1]`, so
//! `u <= y <= 1` holds by construction and the reflectance `s = u / y` satisfies
//! `u <= s <= 1`. Two ways of choosing `alpha` are provided:
//!
//! * [`mean_interpolate`]: `alpha_c = 1 - mean(u_c)`, no free parameters.
//! * [`optimize_alpha`]: a coarse `G x G` grid per channel, squashed by the
//!   logistic function and bilinearly upsampled, fitted by gradient descent on the
//!   brightness-band loss of `s`. The coarse grid keeps the illumination smooth.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::image::{channel_mean, ImageF};
use crate::loss::{srr_from_means, SrrConstants};

/// Pre-squash parameters are kept in `[-PARAM_CLAMP, PARAM_CLAMP]`.
pub const PARAM_CLAMP: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IllumResult {
    pub y: ImageF,
    pub s: ImageF,
    /// Full-resolution interpolation weight; `beta = 1 - alpha`.
    pub alpha: ImageF,
    /// Loss at initialisation followed by the loss after each step (optimised variant only).
    pub loss_trace: Vec<f64>,
}

#[inline]
fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

#[inline]
fn logit_clamped(a: f64) -> f64 {
    let t = (a / (1.0 - a)).ln();
    if t.is_nan() {
        0.0
    } else {
        t.clamp(-PARAM_CLAMP, PARAM_CLAMP)
    }
}

/// `(y, s, ds/dalpha)` for one sample.
#[inline]
fn recover(u: f64, alpha: f64, eps_div: f64) -> (f64, f64, f64) {
    let y = 1.0 + alpha * (u - 1.0);
    let (s, ds) = if y >= eps_div {
        (u / y, u * (1.0 - u) / (y * y))
    } else {
        (u / eps_div, 0.0)
    };
    if s > 1.0 {
        (y, 1.0, 0.0)
    } else if s < 0.0 {
        (y, 0.0, 0.0)
    } else {
        (y, s, ds)
    }
}

fn compose(u: &ImageF, alpha: ImageF, eps_div: f64) -> IllumResult {
    let (h, w, c) = u.shape();
    let mut y = Vec::with_capacity(u.len());
    let mut s = Vec::with_capacity(u.len());
    for (&uv, &av) in u.data().iter().zip(alpha.data()) {
        let (yv, sv, _) = recover(uv, av, eps_div);
        y.push(yv);
        s.push(sv);
    }
    IllumResult {
        y: ImageF::from_parts(h, w, c, y),
        s: ImageF::from_parts(h, w, c, s),
        alpha,
        loss_trace: Vec::new(),
    }
}

/// `y = u*alpha + (1 - alpha)`, `s = u / max(y, eps_div)`.
pub fn interpolate_with_alpha(u: &ImageF, alpha: &ImageF, eps_div: f64) -> Result<IllumResult> {
    u.ensure_same_shape(alpha)?;
    if let Some(i) = alpha.data().iter().position(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::ConstraintViolation(format!(
            "alpha sample {i} = {} is outside [0, 1]",
            alpha.data()[i]
        )));
    }
    Ok(compose(u, alpha.clone(), eps_div))
}

/// Closed-form interpolation with `alpha_c = 1 - mean(u_c)`.
pub fn mean_interpolate(u: &ImageF, eps_div: f64) -> IllumResult {
    let g: Vec<f64> = channel_mean(u).into_iter().map(|m| 1.0 - m).collect();
    let (h, w, c) = u.shape();
    let alpha: Vec<f64> = (0..h * w).flat_map(|_| g.iter().copied()).collect();
    compose(u, ImageF::from_parts(h, w, c, alpha), eps_div)
}

#[derive(Debug, Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

/// Corner-aligned bilinear taps from `n` output samples onto a `grid`-point axis.
fn taps(n: usize, grid: usize) -> Vec<Tap> {
    (0..n)
        .map(|i| {
            let t = if n > 1 && grid > 1 {
                i as f64 * (grid - 1) as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let lo = (t.floor() as usize).min(grid - 1);
            let hi = (lo + 1).min(grid - 1);
            Tap {
                lo,
                hi,
                frac: t - lo as f64,
            }
        })
        .collect()
}

/// Coarse per-channel alpha grid, stored pre-squash.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationField {
    grid_size: usize,
    channels: usize,
    height: usize,
    width: usize,
    /// `[grid_row][grid_col][channel]`
    params: Vec<f64>,
}

impl InterpolationField {
    pub fn new(
        params: Vec<f64>,
        grid_size: usize,
        channels: usize,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        if grid_size == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidParameter(
                "interpolation field dimensions must be positive".into(),
            ));
        }
        if params.len() != grid_size * grid_size * channels {
            return Err(Error::InvalidParameter(format!(
                "expected {} grid parameters, got {}",
                grid_size * grid_size * channels,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid parameter is not finite".into(),
            ));
        }
        Ok(Self {
            grid_size,
            channels,
            height,
            width,
            params,
        })
    }

    /// A flat field whose squashed value is `alpha[c]` in every cell of channel `c`,
    /// up to the pre-squash clamp.
    pub fn constant(alpha: &[f64], grid_size: usize, height: usize, width: usize) -> Result<Self> {
        let per_channel: Vec<f64> = alpha.iter().map(|&a| logit_clamped(a)).collect();
        let params = (0..grid_size * grid_size)
            .flat_map(|_| per_channel.iter().copied())
            .collect();
        Self::new(params, grid_size, alpha.len(), height, width)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(
            params,
            self.grid_size,
            self.channels,
            self.height,
            self.width,
        )
    }

    /// Logistic-squashed grid values, each strictly inside `(0, 1)`.
    pub fn squashed(&self) -> Vec<f64> {
        self.params.iter().map(|&p| logistic(p)).collect()
    }

    /// Full-resolution alpha by bilinear upsampling of the squashed grid.
    pub fn alpha(&self) -> ImageF {
        let grid = self.squashed();
        let (g, ch) = (self.grid_size, self.channels);
        let rows = taps(self.height, g);
        let cols = taps(self.width, g);
        let mut out = Vec::with_capacity(self.height * self.width * ch);
        for rt in &rows {
            for ct in &cols {
                for k in 0..ch {
                    let at = |r: usize, c: usize| grid[(r * g + c) * ch + k];
                    let top = at(rt.lo, ct.lo) * (1.0 - ct.frac) + at(rt.lo, ct.hi) * ct.frac;
                    let bot = at(rt.hi, ct.lo) * (1.0 - ct.frac) + at(rt.hi, ct.hi) * ct.frac;
                    out.push(top * (1.0 - rt.frac) + bot * rt.frac);
                }
            }
        }
        ImageF::from_parts(self.height, self.width, ch, out)
    }

    /// Pulls a gradient with respect to full-resolution alpha back onto the parameters.
    pub fn backprop(&self, d_alpha: &[f64]) -> Vec<f64> {
        let (g, ch) = (self.grid_size, self.channels);
        let rows = taps(self.height, g);
        let cols = taps(self.width, g);
        let mut d_grid = vec![0.0; self.params.len()];
        let mut idx = 0;
        for rt in &rows {
            for ct in &cols {
                for k in 0..ch {
                    let d = d_alpha[idx];
                    idx += 1;
                    if d == 0.0 {
                        continue;
                    }
                    let mut add = |r: usize, c: usize, wgt: f64| {
                        d_grid[(r * g + c) * ch + k] += d * wgt;
                    };
                    add(rt.lo, ct.lo, (1.0 - rt.frac) * (1.0 - ct.frac));
                    add(rt.lo, ct.hi, (1.0 - rt.frac) * ct.frac);
                    add(rt.hi, ct.lo, rt.frac * (1.0 - ct.frac));
                    add(rt.hi, ct.hi, rt.frac * ct.frac);
                }
            }
        }
        for (d, &p) in d_grid.iter_mut().zip(&self.params) {
            let a = logistic(p);
            *d *= a * (1.0 - a);
        }
        d_grid
    }
}

/// `lambda * srr(s)` for the field's alpha and its gradient with respect to the
/// field parameters.
pub fn srr_objective(
    u: &ImageF,
    field: &InterpolationField,
    constants: &SrrConstants,
    lambda: f64,
    eps_div: f64,
) -> Result<(f64, Vec<f64>)> {
    if u.channels() != 3 {
        return Err(Error::InvalidParameter(format!(
            "alpha optimisation needs 3 channels, got {}",
            u.channels()
        )));
    }
    let alpha = field.alpha();
    u.ensure_same_shape(&alpha)?;

    let mut sums = [0.0f64; 3];
    let mut ds = Vec::with_capacity(u.len());
    for (px_u, px_a) in u.data().chunks_exact(3).zip(alpha.data().chunks_exact(3)) {
        for k in 0..3 {
            let (_, s, d) = recover(px_u[k], px_a[k], eps_div);
            sums[k] += s;
            ds.push(d);
        }
    }
    let n = u.pixel_count() as f64;
    let means = sums.map(|s| s / n);
    let (loss, d_means) = srr_from_means(&means, constants);

    let d_alpha: Vec<f64> = ds
        .iter()
        .enumerate()
        .map(|(i, d)| lambda * d_means[i % 3] * d / n)
        .collect();
    Ok((lambda * loss, field.backprop(&d_alpha)))
}

/// Fits a coarse alpha grid to the brightness-band loss, starting from the
/// mean interpolator, and returns the lowest-loss iterate.
pub fn optimize_alpha(u: &ImageF, config: &PipelineConfig) -> Result<IllumResult> {
    config.validate()?;
    let constants = SrrConstants::default();
    let eps = config.epsilon_div;
    let lambda = config.lambda_srr;

    let init: Vec<f64> = channel_mean(u).into_iter().map(|m| 1.0 - m).collect();
    let mut field = InterpolationField::constant(&init, config.alpha_grid, u.height(), u.width())?;
    let (mut loss, mut grad) = srr_objective(u, &field, &constants, lambda, eps)?;
    if !loss.is_finite() {
        return Err(Error::Divergence {
            stage: "alpha optimisation",
            iteration: 0,
        });
    }

    // Each grid node sees roughly 1/G^2 of the pixels; scale the step back up so it
    // does not depend on the grid size.
    let step = config.opt_step * (config.alpha_grid * config.alpha_grid) as f64;
    let mut best = (loss, field.clone());
    let mut trace = vec![loss];

    for iteration in 1..=config.opt_iters {
        if grad.iter().all(|&g| g == 0.0) {
            break;
        }
        let params = field
            .params()
            .iter()
            .zip(&grad)
            .map(|(p, g)| (p - step * g).clamp(-PARAM_CLAMP, PARAM_CLAMP))
            .collect::<Vec<_>>();
        if params.iter().any(|p| p.is_nan()) {
            return Err(Error::Divergence {
                stage: "alpha optimisation",
                iteration,
            });
        }
        field = field.with_params(params)?;
        (loss, grad) = srr_objective(u, &field, &constants, lambda, eps)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                stage: "alpha optimisation",
                iteration,
            });
        }
        trace.push(loss);
        if loss < best.0 {
            best = (loss, field.clone());
        }
    }

    let mut result = compose(u, best.1.alpha(), eps);
    result.loss_trace = trace;
    Ok(result)
}
