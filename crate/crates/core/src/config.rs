//! Pipeline configuration and its `key = value` file format.
//!
//! ```text
//! # comments run to end of line
//! order = 1
//! variant = optimized
//! ```
//!
//! Keys are the field names of [`PipelineConfig`]. Unknown keys, duplicate keys
//! and malformed values are errors.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::denoise::DenoiseSettings;
use crate::error::{Error, Result};
use crate::loss::LossWeights;
use crate::noise::{NoiseGate, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Closed-form `alpha = 1 - mean(u)` per channel.
    Mean,
    /// Per-image optimised coarse `alpha` grid.
    Optimized,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Variant::Mean),
            "optimized" => Ok(Variant::Optimized),
            other => Err(Error::InvalidParameter(format!(
                "unknown variant {other:?} (expected mean or optimized)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Mean => "mean",
            Variant::Optimized => "optimized",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Gradient order of the noise estimator.
    pub order: usize,
    /// Noise gate threshold on the unit scale.
    pub sigma_gate: f64,
    pub eta: f64,
    pub tv_epsilon: f64,
    pub denoise_iters: usize,
    pub denoise_step: f64,
    pub rel_tol: f64,
    pub variant: Variant,
    /// Side of the coarse alpha grid.
    pub alpha_grid: usize,
    pub opt_iters: usize,
    pub opt_step: f64,
    pub lambda_srr: f64,
    pub lambda_nr: f64,
    /// Floor on the illumination in `s = u / max(y, epsilon_div)`.
    pub epsilon_div: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            order: 1,
            sigma_gate: NoiseGate::DEFAULT_THRESHOLD,
            eta: 2.0,
            tv_epsilon: 1e-3,
            denoise_iters: 200,
            denoise_step: 0.1,
            rel_tol: 1e-6,
            variant: Variant::Optimized,
            alpha_grid: 16,
            opt_iters: 200,
            opt_step: 0.5,
            lambda_srr: 1.0,
            lambda_nr: 1.0,
            epsilon_div: 1e-4,
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "order",
    "sigma_gate",
    "eta",
    "tv_epsilon",
    "denoise_iters",
    "denoise_step",
    "rel_tol",
    "variant",
    "alpha_grid",
    "opt_iters",
    "opt_step",
    "lambda_srr",
    "lambda_nr",
    "epsilon_div",
    "seed",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    /// Sets one field from its textual value. Does not validate ranges.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "order" => self.order = parse_num(key, value)?,
            "sigma_gate" => self.sigma_gate = parse_num(key, value)?,
            "eta" => self.eta = parse_num(key, value)?,
            "tv_epsilon" => self.tv_epsilon = parse_num(key, value)?,
            "denoise_iters" => self.denoise_iters = parse_num(key, value)?,
            "denoise_step" => self.denoise_step = parse_num(key, value)?,
            "rel_tol" => self.rel_tol = parse_num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "alpha_grid" => self.alpha_grid = parse_num(key, value)?,
            "opt_iters" => self.opt_iters = parse_num(key, value)?,
            "opt_step" => self.opt_step = parse_num(key, value)?,
            "lambda_srr" => self.lambda_srr = parse_num(key, value)?,
            "lambda_nr" => self.lambda_nr = parse_num(key, value)?,
            "epsilon_div" => self.epsilon_div = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies the lines of a config file on top of `self`, then validates.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key {key:?}"),
                });
            }
            self.set(key, value).map_err(|e| Error::Config {
                line: line_no,
                message: match e {
                    Error::InvalidParameter(m) => m,
                    other => other.to_string(),
                },
            })?;
        }
        self.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=MAX_ORDER).contains(&self.order) {
            return err(format!(
                "order must be in 1..={MAX_ORDER}, got {}",
                self.order
            ));
        }
        NoiseGate::new(self.sigma_gate)?;
        self.denoise_settings().validate()?;
        if self.alpha_grid == 0 {
            return err("alpha_grid must be >= 1".into());
        }
        if !(self.opt_step > 0.0 && self.opt_step.is_finite()) {
            return err(format!(
                "opt_step must be finite and > 0, got {}",
                self.opt_step
            ));
        }
        LossWeights::new(self.lambda_srr, self.lambda_nr)?;
        if !(self.epsilon_div > 0.0 && self.epsilon_div < 1.0) {
            return err(format!(
                "epsilon_div must be in (0, 1), got {}",
                self.epsilon_div
            ));
        }
        Ok(())
    }

    pub fn denoise_settings(&self) -> DenoiseSettings {
        DenoiseSettings {
            eta: self.eta,
            tv_epsilon: self.tv_epsilon,
            max_iters: self.denoise_iters,
            step: self.denoise_step,
            rel_tol: self.rel_tol,
        }
    }

    pub fn gate(&self) -> Result<NoiseGate> {
        NoiseGate::new(self.sigma_gate)
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda_srr: self.lambda_srr,
            lambda_nr: self.lambda_nr,
        }
    }
}

impl fmt::Display for PipelineConfig {
    /// Renders the config in the file format, one key per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order = {}", self.order)?;
        writeln!(f, "sigma_gate = {}", self.sigma_gate)?;
        writeln!(f, "eta = {}", self.eta)?;
        writeln!(f, "tv_epsilon = {}", self.tv_epsilon)?;
        writeln!(f, "denoise_iters = {}", self.denoise_iters)?;
        writeln!(f, "denoise_step = {}", self.denoise_step)?;
        writeln!(f, "rel_tol = {}", self.rel_tol)?;
        writeln!(f, "variant = {}", self.variant)?;
        writeln!(f, "alpha_grid = {}", self.alpha_grid)?;
        writeln!(f, "opt_iters = {}", self.opt_iters)?;
        writeln!(f, "opt_step = {}", self.opt_step)?;
        writeln!(f, "lambda_srr = {}", self.lambda_srr)?;
        writeln!(f, "lambda_nr = {}", self.lambda_nr)?;
        writeln!(f, "epsilon_div = {}", self.epsilon_div)?;
        writeln!(f, "seed = {}", self.seed)
    }
}
