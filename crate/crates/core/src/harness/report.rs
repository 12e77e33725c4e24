use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// A named `(step, value)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub points: Vec<(u64, f64)>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, step: u64, value: f64) {
        self.points.push((step, value));
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|(_, v)| *v).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,value")?;
        for (s, v) in &self.points {
            writeln!(out, "{s},{v:?}")?;
        }
        Ok(())
    }
}

/// Score of the first anomaly when it comes back after the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reentry {
    pub config: String,
    /// Number of anomalies cycled through before the re-entry.
    pub cycle_len: usize,
    pub score: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub samples: u64,
    pub final_mode_count: usize,
    pub max_mode_count: usize,
    pub merge_events: usize,
}

impl TraceSummary {
    pub(crate) fn observe(&mut self, mode_count: usize) {
        self.samples += 1;
        self.final_mode_count = mode_count;
        self.max_mode_count = self.max_mode_count.max(mode_count);
    }

    pub(crate) fn absorb(&mut self, other: &TraceSummary) {
        self.samples += other.samples;
        self.final_mode_count = other.final_mode_count;
        self.max_mode_count = self.max_mode_count.max(other.max_mode_count);
        self.merge_events += other.merge_events;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub protocol: String,
    /// Echo of everything that determined the run.
    pub config: serde_json::Value,
    pub series: Vec<MetricSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reentries: Vec<Reentry>,
    pub summary: TraceSummary,
    #[serde(default)]
    pub scalars: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn new(protocol: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            protocol: protocol.into(),
            config,
            series: Vec::new(),
            reentries: Vec::new(),
            summary: TraceSummary::default(),
            scalars: BTreeMap::new(),
        }
    }

    /// Appends the series, re-entries and scalars of another run of the
    /// same protocol.
    pub fn append(&mut self, other: ExperimentReport) {
        self.series.extend(other.series);
        self.reentries.extend(other.reentries);
        self.scalars.extend(other.scalars);
        self.summary.absorb(&other.summary);
    }

    pub fn series(&self, name: &str) -> Option<&MetricSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    /// First 12 hex digits of the SHA-256 of the config echo.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.config.to_string().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    /// Writes one CSV per series, a re-entry table when present, and a JSON
    /// summary. Returns the written paths.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let hash = self.config_hash();
        let mut written = Vec::new();
        for s in &self.series {
            let path = dir.join(format!("{}-{}_{hash}.csv", self.protocol, s.name));
            s.write_csv(fs::File::create(&path)?)?;
            written.push(path);
        }
        if !self.reentries.is_empty() {
            let path = dir.join(format!("{}-reentry_{hash}.csv", self.protocol));
            let mut f = fs::File::create(&path)?;
            writeln!(f, "config,cycle_len,score,hit")?;
            for r in &self.reentries {
                writeln!(
                    f,
                    "{},{},{:?},{}",
                    r.config,
                    r.cycle_len,
                    r.score,
                    u8::from(r.hit)
                )?;
            }
            written.push(path);
        }
        let path = dir.join(format!("{}_{hash}.json", self.protocol));
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        written.push(path);
        Ok(written)
    }
}
