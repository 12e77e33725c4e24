//! Drift experiment protocols.

use std::collections::HashMap;

use crate::config::{InitialVariance, ModelConfig};
use crate::engine::AdaptiveModel;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::harness::report::{ExperimentReport, MetricSeries, Reentry, TraceSummary};
use crate::harness::stream::GeneratedStream;
use crate::types::{Label, ScoredSample};

/// Factor applied to the first part's variance to get the initial variance
/// of new modes.
pub const Z_FACTOR: f64 = 4.0;
pub const DEFAULT_REPEATS: usize = 40;
pub const DEFAULT_PARTS: usize = 6;

/// Splits `stream` into `n_parts` equal consecutive parts, dropping the
/// trailing remainder.
pub fn split_parts<T>(stream: &[T], n_parts: usize) -> Result<Vec<&[T]>> {
    if n_parts == 0 {
        return Err(Error::InvalidSpec {
            field: "n_parts",
            reason: "must be at least 1".into(),
        });
    }
    if stream.len() < n_parts {
        return Err(Error::NotEnoughSamples {
            needed: n_parts,
            found: stream.len(),
        });
    }
    Ok(stream
        .chunks_exact(stream.len() / n_parts)
        .take(n_parts)
        .collect())
}

/// Normal-class parts and the anomaly set fed to the protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftData {
    pub parts: Vec<Vec<Vec<f64>>>,
    /// One sample per anomaly identity, ordered by that sample's position.
    pub anomalies: Vec<Vec<f64>>,
}

impl DriftData {
    pub fn from_generated(stream: &GeneratedStream, n_parts: usize) -> Result<Self> {
        let normal: Vec<Vec<f64>> = stream.normal().map(|s| s.values.clone()).collect();
        let tagged: Vec<(Option<String>, Vec<f64>)> = stream
            .abnormal()
            .map(|s| (Some(s.identity_tag()), s.values.clone()))
            .collect();
        Self::assemble(&normal, tagged, n_parts)
    }

    /// Rows with class `abnormal` form the anomaly set, everything else is
    /// normal. Without an `identity` column every abnormal row is kept.
    pub fn from_table(table: &FeatureTable, n_parts: usize) -> Result<Self> {
        let normal: Vec<Vec<f64>> = table
            .rows
            .iter()
            .filter(|r| !r.is_abnormal())
            .map(|r| r.values.clone())
            .collect();
        let tagged = table
            .rows
            .iter()
            .filter(|r| r.is_abnormal())
            .map(|r| (r.identity.clone(), r.values.clone()))
            .collect();
        Self::assemble(&normal, tagged, n_parts)
    }

    fn assemble(
        normal: &[Vec<f64>],
        tagged: Vec<(Option<String>, Vec<f64>)>,
        n_parts: usize,
    ) -> Result<Self> {
        let parts = split_parts(normal, n_parts)?
            .into_iter()
            .map(<[Vec<f64>]>::to_vec)
            .collect();
        Ok(Self {
            parts,
            anomalies: distinct_anomalies(tagged),
        })
    }

    /// Initial variance from the first part.
    pub fn initial_variance(&self) -> Result<InitialVariance> {
        InitialVariance::scaled_sample_variance(&self.parts[0], Z_FACTOR)
    }

    pub fn dimension(&self) -> usize {
        self.parts[0].first().map_or(0, Vec::len)
    }

    pub fn concatenated(&self) -> Vec<Vec<f64>> {
        self.parts.iter().flatten().cloned().collect()
    }
}

/// Keeps the last sample of every identity, in the order those samples
/// appear. Untagged samples are all kept.
fn distinct_anomalies(tagged: Vec<(Option<String>, Vec<f64>)>) -> Vec<Vec<f64>> {
    let mut last: HashMap<String, usize> = HashMap::new();
    for (i, (tag, _)) in tagged.iter().enumerate() {
        if let Some(t) = tag {
            last.insert(t.clone(), i);
        }
    }
    tagged
        .into_iter()
        .enumerate()
        .filter(|(i, (tag, _))| tag.as_ref().is_none_or(|t| last[t] == *i))
        .map(|(_, (_, v))| v)
        .collect()
}

fn feed(
    model: &mut AdaptiveModel,
    samples: &[Vec<f64>],
    summary: &mut TraceSummary,
) -> Result<Vec<ScoredSample>> {
    let mut out = Vec::with_capacity(samples.len());
    for x in samples {
        let s = model.process(x)?;
        summary.observe(s.mode_count_after);
        out.push(s);
    }
    summary.merge_events += model.take_merge_events().len();
    Ok(out)
}

fn config_echo(cfg: &ModelConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

/// Intra-class drift.
///
/// For each split `s` a fresh model learns parts `1..=s`, then keeps
/// adapting while it labels the last part. Accuracy is the split's normal
/// count divided by the largest normal count over all splits.
pub fn run_intra_class<F>(parts: &[&[Vec<f64>]], mut model_factory: F) -> Result<ExperimentReport>
where
    F: FnMut() -> Result<AdaptiveModel>,
{
    if parts.len() < 2 {
        return Err(Error::NotEnoughSamples {
            needed: 2,
            found: parts.len(),
        });
    }
    let (train, test) = parts.split_at(parts.len() - 1);
    let test = test[0];
    let mut counts = MetricSeries::new("normal_count");
    let mut summary = TraceSummary::default();
    let mut echo = serde_json::Value::Null;
    for split in 1..=train.len() {
        let mut model = model_factory()?;
        echo = config_echo(model.config());
        let mut run = TraceSummary::default();
        for part in &train[..split] {
            feed(&mut model, part, &mut run)?;
        }
        let scored = feed(&mut model, test, &mut run)?;
        let normal = scored.iter().filter(|s| s.label == Label::Normal).count();
        counts.push(split as u64, normal as f64);
        summary.absorb(&run);
    }
    let max = counts.values().into_iter().fold(0.0, f64::max);
    let mut accuracy = MetricSeries::new("accuracy");
    for (split, count) in &counts.points {
        accuracy.push(*split, if max > 0.0 { count / max } else { 0.0 });
    }
    let mut report = ExperimentReport::new("intra", echo);
    report.series = vec![accuracy, counts];
    report.summary = summary;
    Ok(report)
}

/// Inter-class drift: after training, every anomaly is shown once, then the
/// last two (a1, a2) are repeated `repeats` times each.
pub fn run_inter_class(
    train: &[Vec<f64>],
    anomalies: &[Vec<f64>],
    repeats: usize,
    config: &ModelConfig,
) -> Result<ExperimentReport> {
    if anomalies.len() < 2 {
        return Err(Error::NotEnoughSamples {
            needed: 2,
            found: anomalies.len(),
        });
    }
    let mut model = AdaptiveModel::new(config.clone())?;
    let mut summary = TraceSummary::default();
    feed(&mut model, train, &mut summary)?;

    let pass = feed(&mut model, anomalies, &mut summary)?;
    let mut pass_series = MetricSeries::new("anomaly_pass");
    for (i, s) in pass.iter().enumerate() {
        pass_series.push(i as u64 + 1, s.score);
    }

    let mut report = ExperimentReport::new("inter", config_echo(config));
    let n = anomalies.len();
    for (name, idx) in [("a1", n - 2), ("a2", n - 1)] {
        let block = vec![anomalies[idx].clone(); repeats];
        let scored = feed(&mut model, &block, &mut summary)?;
        let mut series = MetricSeries::new(name);
        for (i, s) in scored.iter().enumerate() {
            series.push(i as u64 + 1, s.score);
        }
        report
            .scalars
            .insert(format!("{name}_first"), pass[idx].score);
        if let Some(last) = scored.last() {
            report.scalars.insert(format!("{name}_final"), last.score);
        }
        report.series.push(series);
    }
    report.series.insert(0, pass_series);
    report.summary = summary;
    Ok(report)
}

/// Retention under repetition.
///
/// After training and one pass over all anomalies, the last `cycle_len`
/// anomalies a1..aN are each repeated `repeats` times, then a1 is repeated
/// again. The first score of that final block is the re-entry score.
/// Configurations run in parallel, one model per thread.
pub fn run_retention(
    train: &[Vec<f64>],
    anomalies: &[Vec<f64>],
    repeats: usize,
    cycle_len: usize,
    configs: &[(String, ModelConfig)],
) -> Result<ExperimentReport> {
    if cycle_len == 0 || anomalies.len() < cycle_len {
        return Err(Error::NotEnoughSamples {
            needed: cycle_len.max(1),
            found: anomalies.len(),
        });
    }
    if repeats == 0 {
        return Err(Error::InvalidSpec {
            field: "repeats",
            reason: "must be at least 1".into(),
        });
    }
    let cycled = &anomalies[anomalies.len() - cycle_len..];
    let mut schedule: Vec<Vec<f64>> = Vec::with_capacity((cycle_len + 1) * repeats);
    for a in cycled.iter().chain(std::iter::once(&cycled[0])) {
        schedule.extend(std::iter::repeat_n(a.clone(), repeats));
    }
    let reentry_at = cycle_len * repeats;

    let runs: Vec<Result<(MetricSeries, Reentry, TraceSummary)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(label, cfg)| {
                let schedule = &schedule;
                scope.spawn(move || {
                    let mut model = AdaptiveModel::new(cfg.clone())?;
                    let mut summary = TraceSummary::default();
                    feed(&mut model, train, &mut summary)?;
                    feed(&mut model, anomalies, &mut summary)?;
                    let scored = feed(&mut model, schedule, &mut summary)?;
                    let mut series = MetricSeries::new(format!("{label}-c{cycle_len}"));
                    for (i, s) in scored.iter().enumerate() {
                        series.push(i as u64 + 1, s.score);
                    }
                    let back = &scored[reentry_at];
                    let reentry = Reentry {
                        config: label.clone(),
                        cycle_len,
                        score: back.score,
                        hit: back.was_hit,
                    };
                    Ok((series, reentry, summary))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("retention worker panicked"))
            .collect()
    });

    let echo = serde_json::Value::Object(
        configs
            .iter()
            .map(|(label, cfg)| (label.clone(), config_echo(cfg)))
            .collect(),
    );
    let mut report = ExperimentReport::new("retention", echo);
    for run in runs {
        let (series, reentry, summary) = run?;
        report.series.push(series);
        report.reentries.push(reentry);
        report.summary.absorb(&summary);
    }
    Ok(report)
}

/// Mode count after every sample of `stream`.
pub fn run_memory_tracking(stream: &[Vec<f64>], config: &ModelConfig) -> Result<ExperimentReport> {
    let mut model = AdaptiveModel::new(config.clone())?;
    let mut counts = MetricSeries::new("mode_count");
    let mut misses = MetricSeries::new("misses");
    let mut summary = TraceSummary::default();
    let mut missed = 0u64;
    for (i, x) in stream.iter().enumerate() {
        let s = model.process(x)?;
        summary.observe(s.mode_count_after);
        if !s.was_hit {
            missed += 1;
        }
        counts.push(i as u64 + 1, s.mode_count_after as f64);
        misses.push(i as u64 + 1, missed as f64);
    }
    let merges = model.take_merge_events();
    summary.merge_events = merges.len();
    let mut merge_series = MetricSeries::new("merges");
    for (step, group) in merges
        .chunk_by(|a, b| a.step == b.step)
        .map(|g| (g[0].step, g.len()))
    {
        merge_series.push(step, group as f64);
    }
    let mut report = ExperimentReport::new("memory", config_echo(config));
    report.series = vec![counts, misses, merge_series];
    report.summary = summary;
    Ok(report)
}
