//! Value types shared across the engine: feature vectors, modes and the
//! mixture that holds them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a mode. Ids are handed out monotonically and never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(pub u64);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite, fixed-length embedding fed to the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Wraps `values`, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// Like [`FeatureVector::new`] but also checks the length.
    pub fn with_dimension(values: Vec<f64>, dimension: usize) -> Result<Self> {
        if values.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// One diagonal-covariance Gaussian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub id: ModeId,
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl Mode {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Root-mean-square of the per-dimension standard deviations.
    pub fn rms_std(&self) -> f64 {
        let n = self.variance.len().max(1) as f64;
        (self.variance.iter().sum::<f64>() / n).sqrt()
    }

    pub(crate) fn floor_variance(&mut self, floor: f64) {
        for v in &mut self.variance {
            if *v < floor {
                *v = floor;
            }
        }
    }
}

/// The full model state: modes kept in ascending id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mixture {
    pub(crate) modes: Vec<Mode>,
    pub(crate) next_id: u64,
    pub(crate) samples_seen: u64,
}

impl Mixture {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a mixture from persisted parts.
    ///
    /// Modes are re-sorted by id; duplicate ids or an id at or above `next_id`
    /// are rejected.
    pub fn from_parts(mut modes: Vec<Mode>, next_id: u64, samples_seen: u64) -> Result<Self> {
        modes.sort_by_key(|m| m.id);
        for pair in modes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("duplicate mode id {}", pair[0].id),
                });
            }
        }
        if let Some(last) = modes.last() {
            if last.id.0 >= next_id {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("mode id {} not below next_id {next_id}", last.id),
                });
            }
        }
        Ok(Self {
            modes,
            next_id,
            samples_seen,
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    pub fn get(&self, id: ModeId) -> Option<&Mode> {
        self.index_of(id).map(|i| &self.modes[i])
    }

    pub fn index_of(&self, id: ModeId) -> Option<usize> {
        self.modes.binary_search_by_key(&id, |m| m.id).ok()
    }

    pub(crate) fn allocate_id(&mut self) -> ModeId {
        let id = ModeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Appends a mode whose id was allocated from this mixture.
    pub(crate) fn push(&mut self, mode: Mode) {
        debug_assert!(self.modes.last().is_none_or(|m| m.id < mode.id));
        self.modes.push(mode);
    }

    pub(crate) fn remove(&mut self, id: ModeId) -> Option<Mode> {
        self.index_of(id).map(|i| self.modes.remove(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Abnormal,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        })
    }
}

/// Outcome of feeding one sample through the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    /// Anomaly score in `[0, 1]`: one minus the matched mode's normalized weight.
    pub score: f64,
    /// Mode that absorbed the sample (after any merge this step).
    pub matched_mode_id: ModeId,
    pub was_hit: bool,
    pub label: Label,
    pub mode_count_after: usize,
}
