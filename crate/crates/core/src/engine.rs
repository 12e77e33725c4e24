//! The per-sample adaptive loop.
//!
//! Each sample is matched against the mixture by Mahalanobis distance. A hit
//! pulls the matched mode towards the sample at a rate that shrinks with the
//! distance; a miss spawns a new wide, light mode centred on the sample.
//! Weights decay exponentially towards the hit indicator, so a mode's weight
//! tracks how often it has been matched recently, and the anomaly score is
//! one minus the weight of the mode that took the sample.
//!
//! Step order inside [`AdaptiveModel::process_sample`]:
//!
//! 1. best match
//! 2. weight decay / reinforcement
//! 3. hit update or mode creation
//! 4. capacity enforcement (constrained models only)
//! 5. normalization
//! 6. merge pass (when merging is enabled), then re-normalization
//! 7. score and label
//!
//! Scoring comes after normalization so scores are comparable over time.

use std::collections::BTreeSet;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::merge::{merge_pass, merge_pass_touching, MergeEvent};
use crate::types::{FeatureVector, Label, Mixture, Mode, ModeId, ScoredSample};

/// Best-match outcome. `mode_index` is set only on a hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub mode_index: Option<usize>,
    pub distance: Option<f64>,
}

impl MatchResult {
    pub const MISS: MatchResult = MatchResult {
        mode_index: None,
        distance: None,
    };

    pub fn is_hit(&self) -> bool {
        self.mode_index.is_some()
    }
}

/// Square-root Mahalanobis distance under the mode's diagonal covariance.
pub fn mahalanobis_distance(x: &[f64], mode: &Mode) -> Result<f64> {
    if x.len() != mode.dimension() {
        return Err(Error::DimensionMismatch {
            expected: mode.dimension(),
            found: x.len(),
        });
    }
    let sq: f64 = x
        .iter()
        .zip(&mode.mean)
        .zip(&mode.variance)
        .map(|((xi, mu), var)| {
            let d = xi - mu;
            d * d / var
        })
        .sum();
    Ok(sq.sqrt())
}

/// Finds the closest mode and reports a hit if it lies within `theta_match`.
/// Equal distances resolve to the lowest id.
pub fn find_best_match(mix: &Mixture, x: &[f64], theta_match: f64) -> Result<MatchResult> {
    let mut best: Option<(usize, f64)> = None;
    for (i, mode) in mix.modes().iter().enumerate() {
        let d = mahalanobis_distance(x, mode)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    Ok(match best {
        Some((i, d)) if d < theta_match => MatchResult {
            mode_index: Some(i),
            distance: Some(d),
        },
        _ => MatchResult::MISS,
    })
}

/// Exponential weight update: the hit mode moves towards one, every other
/// mode decays by `1 - alpha`.
pub fn update_weights(mix: &mut Mixture, hit_index: Option<usize>, alpha: f64) {
    for (i, mode) in mix.modes.iter_mut().enumerate() {
        let matched = if hit_index == Some(i) { 1.0 } else { 0.0 };
        mode.weight = (1.0 - alpha) * mode.weight + alpha * matched;
    }
}

/// Learning factor for a hit at distance `dist`: `alpha` at zero distance,
/// falling linearly to zero at `theta_match`.
pub fn compute_beta(dist: f64, theta_match: f64, alpha: f64) -> Result<f64> {
    if !(dist >= 0.0 && dist < theta_match) {
        return Err(Error::NotAHit {
            distance: dist,
            theta_match,
        });
    }
    // `theta - dist` is exact and positive for every `dist < theta`, unlike
    // `1 - dist / theta`, which rounds to zero just below the threshold.
    Ok((theta_match - dist) / theta_match * alpha)
}

/// Moves the hit mode towards `x`. The variance update uses the already
/// updated mean.
pub fn update_hit_mode(mode: &mut Mode, x: &[f64], beta: f64, variance_floor: f64) {
    for ((mu, var), xi) in mode.mean.iter_mut().zip(mode.variance.iter_mut()).zip(x) {
        *mu = (1.0 - beta) * *mu + beta * xi;
        let d = xi - *mu;
        *var = (1.0 - beta) * *var + beta * d * d;
    }
    mode.floor_variance(variance_floor);
}

/// A new mode centred on `x` with weight `w0` and the configured initial
/// variance.
pub fn create_mode(id: ModeId, x: &[f64], cfg: &ModelConfig) -> Mode {
    let mut mode = Mode {
        id,
        weight: cfg.w0,
        mean: x.to_vec(),
        variance: cfg.z.broadcast(cfg.dimension),
    };
    mode.floor_variance(cfg.variance_floor);
    mode
}

/// Evicts the lightest modes until at most `capacity` remain. Equal weights
/// evict the oldest id first. `protect` (the mode just created) is never
/// evicted. Returns the evicted ids.
pub fn enforce_capacity(
    mix: &mut Mixture,
    capacity: usize,
    protect: Option<ModeId>,
) -> Vec<ModeId> {
    let mut evicted = Vec::new();
    while mix.len() > capacity {
        let victim = mix
            .modes()
            .iter()
            .filter(|m| Some(m.id) != protect)
            .min_by(|a, b| a.weight.total_cmp(&b.weight).then(a.id.cmp(&b.id)))
            .map(|m| m.id);
        let Some(id) = victim else { break };
        mix.remove(id);
        evicted.push(id);
    }
    evicted
}

/// Rescales weights to sum to one.
pub fn normalize_weights(mix: &mut Mixture) -> Result<()> {
    if mix.is_empty() {
        return Err(Error::EmptyMixture);
    }
    let total = mix.total_weight();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateWeights(total));
    }
    for mode in &mut mix.modes {
        mode.weight /= total;
    }
    Ok(())
}

/// One minus the (normalized) weight of `matched_id`, clamped to `[0, 1]`.
pub fn anomaly_score(mix: &Mixture, matched_id: ModeId) -> Result<f64> {
    let mode = mix.get(matched_id).ok_or(Error::UnknownMode(matched_id))?;
    Ok((1.0 - mode.weight).clamp(0.0, 1.0))
}

/// Ids of the normal modes.
///
/// Modes are ranked by `weight / rms_std` (heavy, tight modes first) and
/// taken from the top until their cumulative weight reaches `g`.
pub fn classify_modes(mix: &Mixture, g: f64) -> BTreeSet<ModeId> {
    let mut ranked: Vec<(f64, &Mode)> = mix
        .modes()
        .iter()
        .map(|m| (m.weight / m.rms_std(), m))
        .collect();
    ranked.sort_by(|(fa, a), (fb, b)| fb.total_cmp(fa).then(a.id.cmp(&b.id)));
    let mut normal = BTreeSet::new();
    let mut cumulative = 0.0;
    for (_, mode) in ranked {
        normal.insert(mode.id);
        cumulative += mode.weight;
        if cumulative >= g {
            break;
        }
    }
    normal
}

/// A single adaptive mixture instance: configuration plus evolving state.
#[derive(Debug, Clone)]
pub struct AdaptiveModel {
    config: ModelConfig,
    mixture: Mixture,
    merge_log: Vec<MergeEvent>,
    /// Whether every pair of modes is known to be at least `theta_bhat`
    /// apart, so the next merge pass only needs the touched mode.
    settled: bool,
}

impl AdaptiveModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        Ok(Self {
            config: config.validate()?,
            mixture: Mixture::new(),
            merge_log: Vec::new(),
            settled: true,
        })
    }

    /// Resumes from a previously saved state.
    pub fn from_state(config: ModelConfig, mixture: Mixture) -> Result<Self> {
        let config = config.validate()?;
        for mode in mixture.modes() {
            if mode.mean.len() != config.dimension || mode.variance.len() != config.dimension {
                return Err(Error::DimensionMismatch {
                    expected: config.dimension,
                    found: mode.mean.len(),
                });
            }
        }
        Ok(Self {
            config,
            mixture,
            merge_log: Vec::new(),
            settled: false,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    /// Merge events since the last call.
    pub fn take_merge_events(&mut self) -> Vec<MergeEvent> {
        std::mem::take(&mut self.merge_log)
    }

    pub fn normal_modes(&self) -> BTreeSet<ModeId> {
        classify_modes(&self.mixture, self.config.g)
    }

    /// Checks `values` and feeds them through [`AdaptiveModel::process_sample`].
    pub fn process(&mut self, values: &[f64]) -> Result<ScoredSample> {
        let x = FeatureVector::with_dimension(values.to_vec(), self.config.dimension)?;
        self.process_sample(&x)
    }

    pub fn process_sample(&mut self, x: &FeatureVector) -> Result<ScoredSample> {
        let cfg = &self.config;
        if x.dimension() != cfg.dimension {
            return Err(Error::DimensionMismatch {
                expected: cfg.dimension,
                found: x.dimension(),
            });
        }
        let x = x.as_slice();
        let mix = &mut self.mixture;

        let found = find_best_match(mix, x, cfg.theta_match)?;
        update_weights(mix, found.mode_index, cfg.alpha);

        let mut matched = match (found.mode_index, found.distance) {
            (Some(i), Some(dist)) => {
                let beta = compute_beta(dist, cfg.theta_match, cfg.alpha)?;
                update_hit_mode(&mut mix.modes[i], x, beta, cfg.variance_floor);
                mix.modes[i].id
            }
            _ => {
                let id = mix.allocate_id();
                mix.push(create_mode(id, x, cfg));
                if let Some(k) = cfg.capacity {
                    enforce_capacity(mix, k, Some(id));
                }
                id
            }
        };

        normalize_weights(mix)?;
        mix.samples_seen += 1;

        if cfg.merge_enabled {
            let events = if self.settled {
                merge_pass_touching(mix, &[matched], cfg.theta_bhat, cfg.variance_floor)?
            } else {
                merge_pass(mix, cfg.theta_bhat, cfg.variance_floor)?
            };
            self.settled = true;
            if !events.is_empty() {
                for ev in &events {
                    if ev.absorbed_ids.0 == matched || ev.absorbed_ids.1 == matched {
                        matched = ev.result_id;
                    }
                }
                normalize_weights(mix)?;
                self.merge_log.extend(events);
            }
        }

        let score = anomaly_score(mix, matched)?;
        let label = if classify_modes(mix, cfg.g).contains(&matched) {
            Label::Normal
        } else {
            Label::Abnormal
        };
        Ok(ScoredSample {
            score,
            matched_mode_id: matched,
            was_hit: found.is_hit(),
            label,
            mode_count_after: mix.len(),
        })
    }
}
