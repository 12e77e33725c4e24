//! Synthetic concept-drift streams.
//!
//! Normal identities are Gaussian blobs whose centres translate along a fixed
//! random direction by `drift_rate` per normal sample. Anomaly identities are
//! static blobs placed well clear of every normal trajectory, emitted in
//! round-robin order between normal samples with probability `anomaly_rate`.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-coordinate spread of identity centres, in units of `identity_spread`.
const CENTRE_SCALE: f64 = 4.0;
/// Minimum Euclidean clearance of an anomaly centre from any normal
/// trajectory and from other anomaly centres, in units of
/// `identity_spread * sqrt(dimension)`.
const ANOMALY_CLEARANCE: f64 = 3.5;
const MAX_PLACEMENT_TRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSpec {
    pub dimension: usize,
    pub n_normal_identities: usize,
    pub n_anomaly_identities: usize,
    /// Normal samples per part; the stream carries `n_parts` parts.
    pub samples_per_part: usize,
    pub n_parts: usize,
    /// Displacement of each normal centre per normal sample.
    pub drift_rate: f64,
    /// Within-identity standard deviation.
    pub identity_spread: f64,
    /// Probability of an anomaly after each normal sample.
    pub anomaly_rate: f64,
    pub seed: u64,
}

impl Default for StreamSpec {
    fn default() -> Self {
        Self {
            dimension: 20,
            n_normal_identities: 1,
            n_anomaly_identities: 8,
            samples_per_part: 600,
            n_parts: 6,
            drift_rate: 0.01,
            identity_spread: 1.0,
            anomaly_rate: 0.01,
            seed: 7,
        }
    }
}

impl StreamSpec {
    pub fn validate(self) -> Result<Self> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidSpec {
                field,
                reason: reason.into(),
            }
        }
        if self.dimension == 0 {
            return Err(bad("dimension", "must be at least 1"));
        }
        if self.n_normal_identities == 0 {
            return Err(bad("n_normal_identities", "must be at least 1"));
        }
        if self.n_parts == 0 {
            return Err(bad("n_parts", "must be at least 1"));
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate.is_finite()) {
            return Err(bad(
                "drift_rate",
                format!("{} must be >= 0", self.drift_rate),
            ));
        }
        if !(self.identity_spread > 0.0 && self.identity_spread.is_finite()) {
            return Err(bad(
                "identity_spread",
                format!("{} must be > 0", self.identity_spread),
            ));
        }
        if !(0.0..1.0).contains(&self.anomaly_rate) {
            return Err(bad(
                "anomaly_rate",
                format!("{} not in [0, 1)", self.anomaly_rate),
            ));
        }
        if self.anomaly_rate > 0.0 && self.n_anomaly_identities == 0 {
            return Err(bad(
                "n_anomaly_identities",
                "must be at least 1 when anomaly_rate > 0",
            ));
        }
        Ok(self)
    }

    pub fn normal_len(&self) -> usize {
        self.samples_per_part * self.n_parts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Normal,
    Abnormal,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Normal => "normal",
            Class::Abnormal => "abnormal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: u64,
    pub class: Class,
    /// Index within the sample's class.
    pub identity: usize,
    /// 1-based part of the most recent normal sample.
    pub part: usize,
    pub values: Vec<f64>,
}

impl LabeledSample {
    pub fn identity_tag(&self) -> String {
        match self.class {
            Class::Normal => format!("n{}", self.identity),
            Class::Abnormal => format!("a{}", self.identity),
        }
    }
}

/// A generated stream plus the ground-truth geometry behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub samples: Vec<LabeledSample>,
    /// Centre of each normal identity at normal step 0.
    pub normal_origins: Vec<Vec<f64>>,
    /// Unit drift direction of each normal identity.
    pub drift_directions: Vec<Vec<f64>>,
    pub anomaly_centres: Vec<Vec<f64>>,
}

impl GeneratedStream {
    pub fn normal(&self) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter().filter(|s| s.class == Class::Normal)
    }

    pub fn abnormal(&self) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter().filter(|s| s.class == Class::Abnormal)
    }

    /// Centre of normal identity `identity` after `step` normal samples.
    pub fn normal_centre(&self, identity: usize, step: usize, drift_rate: f64) -> Vec<f64> {
        self.normal_origins[identity]
            .iter()
            .zip(&self.drift_directions[identity])
            .map(|(o, d)| o + drift_rate * step as f64 * d)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.samples.first().map_or(0, |s| s.values.len());
        let mut header = String::from("id,class,identity,part");
        for j in 0..dim {
            header.push_str(&format!(",f{j}"));
        }
        writeln!(out, "{header}")?;
        for s in &self.samples {
            write!(out, "{},{},{},{}", s.id, s.class, s.identity_tag(), s.part)?;
            for v in &s.values {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect::<Vec<f64>>()
}

fn unit_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim, 1.0);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance from `p` to the segment `origin + s * dir`, `s` in `[0, length]`.
fn distance_to_segment(p: &[f64], origin: &[f64], dir: &[f64], length: f64) -> f64 {
    let along: f64 = p
        .iter()
        .zip(origin)
        .zip(dir)
        .map(|((p, o), d)| (p - o) * d)
        .sum();
    let s = along.clamp(0.0, length);
    let closest: Vec<f64> = origin.iter().zip(dir).map(|(o, d)| o + s * d).collect();
    distance(p, &closest)
}

/// Generates a reproducible labeled stream from `spec`.
pub fn generate_stream(spec: &StreamSpec) -> Result<GeneratedStream> {
    let spec = spec.clone().validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dimension;
    let spread = spec.identity_spread;
    let total = spec.normal_len();
    let travel = spec.drift_rate * total as f64;

    let normal_origins: Vec<Vec<f64>> = (0..spec.n_normal_identities)
        .map(|_| gaussian_vec(&mut rng, dim, CENTRE_SCALE * spread))
        .collect();
    let drift_directions: Vec<Vec<f64>> = (0..spec.n_normal_identities)
        .map(|_| unit_vec(&mut rng, dim))
        .collect();

    let clearance = ANOMALY_CLEARANCE * spread * (dim as f64).sqrt();
    let mut anomaly_centres: Vec<Vec<f64>> = Vec::with_capacity(spec.n_anomaly_identities);
    let mut scale = CENTRE_SCALE * spread;
    let mut tries = 0;
    while anomaly_centres.len() < spec.n_anomaly_identities {
        let c = gaussian_vec(&mut rng, dim, scale);
        let clear_of_normals = normal_origins
            .iter()
            .zip(&drift_directions)
            .all(|(o, d)| distance_to_segment(&c, o, d, travel) >= clearance);
        let clear_of_anomalies = anomaly_centres.iter().all(|a| distance(&c, a) >= clearance);
        if clear_of_normals && clear_of_anomalies {
            anomaly_centres.push(c);
        } else {
            tries += 1;
            if tries % MAX_PLACEMENT_TRIES == 0 {
                scale *= 1.5;
            }
        }
    }

    let mut samples = Vec::with_capacity(total + (total as f64 * spec.anomaly_rate) as usize + 1);
    let mut next_id = 0u64;
    let mut next_anomaly = 0usize;
    for step in 0..total {
        let identity = if spec.n_normal_identities == 1 {
            0
        } else {
            rng.random_range(0..spec.n_normal_identities)
        };
        let part = step / spec.samples_per_part.max(1) + 1;
        let values: Vec<f64> = normal_origins[identity]
            .iter()
            .zip(&drift_directions[identity])
            .map(|(o, d)| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                o + spec.drift_rate * step as f64 * d + spread * noise
            })
            .collect();
        samples.push(LabeledSample {
            id: next_id,
            class: Class::Normal,
            identity,
            part,
            values,
        });
        next_id += 1;

        if spec.anomaly_rate > 0.0 && rng.random::<f64>() < spec.anomaly_rate {
            let identity = next_anomaly % spec.n_anomaly_identities;
            next_anomaly += 1;
            let values = anomaly_centres[identity]
                .iter()
                .map(|c| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    c + spread * noise
                })
                .collect();
            samples.push(LabeledSample {
                id: next_id,
                class: Class::Abnormal,
                identity,
                part,
                values,
            });
            next_id += 1;
        }
    }

    Ok(GeneratedStream {
        samples,
        normal_origins,
        drift_directions,
        anomaly_centres,
    })
}
