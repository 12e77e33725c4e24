//! Hyper-parameters of the adaptive mixture and their validation.
//!
//! A config with `capacity` set behaves as the constrained baseline (the
//! weakest mode is evicted when the cap is exceeded); without it the mixture
//! grows freely and relies on merging to stay compact.
//!
//! The initial variance `z` of a freshly created mode may be a scalar or a
//! per-dimension vector. The usual choice is four times the per-dimension
//! variance of the first training part, see
//! [`InitialVariance::scaled_sample_variance`]. Whether that variance should
//! be pooled across dimensions is not pinned down anywhere; per-dimension is
//! what this crate does.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Root-form Mahalanobis radius holding ~68% of a 20-dimensional Gaussian.
pub const DEFAULT_THETA_MATCH: f64 = 4.8;
pub const DEFAULT_W0: f64 = 0.001;
pub const DEFAULT_G: f64 = 0.95;
pub const DEFAULT_THETA_BHAT: f64 = 0.95;
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;

/// Initial variance given to a newly created mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialVariance {
    Scalar(f64),
    PerDimension(Vec<f64>),
}

impl InitialVariance {
    /// Expands to one variance per dimension.
    pub fn broadcast(&self, dimension: usize) -> Vec<f64> {
        match self {
            InitialVariance::Scalar(z) => vec![*z; dimension],
            InitialVariance::PerDimension(v) => v.clone(),
        }
    }

    /// `factor` times the unbiased per-dimension variance of `samples`.
    pub fn scaled_sample_variance<S: AsRef<[f64]>>(samples: &[S], factor: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::NotEnoughSamples {
                needed: 2,
                found: samples.len(),
            });
        }
        let dim = samples[0].as_ref().len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in samples {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.len(),
                });
            }
            for (m, x) in mean.iter_mut().zip(s) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for s in samples {
            for ((v, x), m) in var.iter_mut().zip(s.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        Ok(InitialVariance::PerDimension(
            var.into_iter().map(|v| factor * v / (n - 1.0)).collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dimension: usize,
    /// Model update rate.
    pub alpha: f64,
    /// Mahalanobis distance below which a sample hits a mode.
    pub theta_match: f64,
    /// Weight of a freshly created mode, before normalization.
    pub w0: f64,
    /// Variance of a freshly created mode.
    pub z: InitialVariance,
    /// Cumulative weight that the normal modes must reach.
    pub g: f64,
    /// Bhattacharyya distance below which two modes merge.
    pub theta_bhat: f64,
    /// Maximum number of modes. `None` means unconstrained.
    pub capacity: Option<usize>,
    pub merge_enabled: bool,
    pub variance_floor: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::uagmm(DEFAULT_DIMENSION)
    }
}

impl ModelConfig {
    /// Unconstrained mixture with merging.
    pub fn uagmm(dimension: usize) -> Self {
        Self {
            dimension,
            alpha: DEFAULT_ALPHA,
            theta_match: DEFAULT_THETA_MATCH,
            w0: DEFAULT_W0,
            z: InitialVariance::Scalar(1.0),
            g: DEFAULT_G,
            theta_bhat: DEFAULT_THETA_BHAT,
            capacity: None,
            merge_enabled: true,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }

    /// Capacity-limited baseline without merging.
    pub fn agmm(dimension: usize, capacity: usize) -> Self {
        Self {
            capacity: Some(capacity),
            merge_enabled: false,
            ..Self::uagmm(dimension)
        }
    }

    pub fn with_z(mut self, z: InitialVariance) -> Self {
        self.z = z;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn is_constrained(&self) -> bool {
        self.capacity.is_some()
    }

    /// Checks every field against its allowed range.
    pub fn validate(self) -> Result<Self> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidConfig {
                field,
                reason: reason.into(),
            }
        }
        if self.dimension == 0 {
            return Err(bad("dimension", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(bad("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(self.theta_match > 0.0 && self.theta_match.is_finite()) {
            return Err(bad(
                "theta_match",
                format!("{} must be positive", self.theta_match),
            ));
        }
        if !(self.w0 > 0.0 && self.w0 < 1.0) {
            return Err(bad("w0", format!("{} not in (0, 1)", self.w0)));
        }
        match &self.z {
            InitialVariance::Scalar(z) => {
                if !(*z > 0.0 && z.is_finite()) {
                    return Err(bad("z", format!("{z} must be positive")));
                }
            }
            InitialVariance::PerDimension(v) => {
                if v.len() != self.dimension {
                    return Err(bad(
                        "z",
                        format!("has {} entries, dimension is {}", v.len(), self.dimension),
                    ));
                }
                if let Some(z) = v.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
                    return Err(bad("z", format!("entry {z} must be positive")));
                }
            }
        }
        if !(self.g > 0.0 && self.g <= 1.0) {
            return Err(bad("g", format!("{} not in (0, 1]", self.g)));
        }
        if !(self.theta_bhat > 0.0 && self.theta_bhat.is_finite()) {
            return Err(bad(
                "theta_bhat",
                format!("{} must be positive", self.theta_bhat),
            ));
        }
        if self.capacity == Some(0) {
            return Err(bad("capacity", "must be at least 1"));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(bad(
                "variance_floor",
                format!("{} must be positive", self.variance_floor),
            ));
        }
        Ok(self)
    }

    /// Parses the flat `key = value` format. Unlisted keys keep their
    /// defaults; `capacity` (alias `k`) switches to the constrained baseline
    /// and turns merging off unless `merge_enabled` is given explicitly.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        let mut merge_explicit = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("`{key}`: {e}"),
                })
            };
            match key.as_str() {
                "dimension" | "d" => {
                    cfg.dimension = value.parse().map_err(|e| Error::Parse {
                        line: line_no,
                        message: format!("`dimension`: {e}"),
                    })?
                }
                "alpha" => cfg.alpha = num(value)?,
                "theta_match" => cfg.theta_match = num(value)?,
                "w0" => cfg.w0 = num(value)?,
                "z" => {
                    cfg.z = if value.contains(',') {
                        InitialVariance::PerDimension(
                            value
                                .split(',')
                                .map(|v| num(v.trim()))
                                .collect::<Result<_>>()?,
                        )
                    } else {
                        InitialVariance::Scalar(num(value)?)
                    }
                }
                "g" => cfg.g = num(value)?,
                "theta_bhat" => cfg.theta_bhat = num(value)?,
                "capacity" | "k" => {
                    cfg.capacity = match value {
                        "" | "none" => None,
                        v => Some(v.parse().map_err(|e| Error::Parse {
                            line: line_no,
                            message: format!("`capacity`: {e}"),
                        })?),
                    }
                }
                "merge_enabled" => {
                    merge_explicit = true;
                    cfg.merge_enabled = value.parse().map_err(|e| Error::Parse {
                        line: line_no,
                        message: format!("`merge_enabled`: {e}"),
                    })?
                }
                "variance_floor" => cfg.variance_floor = num(value)?,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if !merge_explicit {
            cfg.merge_enabled = cfg.capacity.is_none();
        }
        cfg.validate()
    }

    /// Renders the config in the `key = value` format accepted by
    /// [`ModelConfig::parse_kv`].
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dimension = {}", self.dimension);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "theta_match = {}", self.theta_match);
        let _ = writeln!(out, "w0 = {}", self.w0);
        match &self.z {
            InitialVariance::Scalar(z) => {
                let _ = writeln!(out, "z = {z}");
            }
            InitialVariance::PerDimension(v) => {
                let joined: Vec<String> = v.iter().map(|z| z.to_string()).collect();
                let _ = writeln!(out, "z = {}", joined.join(", "));
            }
        }
        let _ = writeln!(out, "g = {}", self.g);
        let _ = writeln!(out, "theta_bhat = {}", self.theta_bhat);
        if let Some(k) = self.capacity {
            let _ = writeln!(out, "capacity = {k}");
        }
        let _ = writeln!(out, "merge_enabled = {}", self.merge_enabled);
        let _ = writeln!(out, "variance_floor = {}", self.variance_floor);
        out
    }
}
