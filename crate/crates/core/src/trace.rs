//! Per-sample run traces.

use std::io::Write;

use crate::error::Result;
use crate::merge::MergeEvent;
use crate::types::{Label, ModeId, ScoredSample};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub sample_id: String,
    pub score: f64,
    pub hit: bool,
    pub matched_mode_id: ModeId,
    pub mode_count: usize,
    pub label: Label,
}

/// Ordered trace records with steps counting from 1, plus merge events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<TraceRecord>,
    merges: Vec<MergeEvent>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the outcome of the next sample and returns its step number.
    pub fn push(&mut self, sample_id: impl Into<String>, s: &ScoredSample) -> u64 {
        let step = self.records.len() as u64 + 1;
        self.records.push(TraceRecord {
            step,
            sample_id: sample_id.into(),
            score: s.score,
            hit: s.was_hit,
            matched_mode_id: s.matched_mode_id,
            mode_count: s.mode_count_after,
            label: s.label,
        });
        step
    }

    pub fn extend_merges(&mut self, events: impl IntoIterator<Item = MergeEvent>) {
        self.merges.extend(events);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with one row per sample. Scores use shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "step,sample_id,score,hit,matched_mode_id,mode_count,label"
        )?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:?},{},{},{},{}",
                r.step,
                r.sample_id,
                r.score,
                u8::from(r.hit),
                r.matched_mode_id,
                r.mode_count,
                r.label
            )?;
        }
        Ok(())
    }

    /// CSV with one row per merge event.
    pub fn write_merges_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,absorbed_a,absorbed_b,result_id,distance")?;
        for m in &self.merges {
            writeln!(
                out,
                "{},{},{},{},{:?}",
                m.step, m.absorbed_ids.0, m.absorbed_ids.1, m.result_id, m.distance
            )?;
        }
        Ok(())
    }
}
