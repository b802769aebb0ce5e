//! Run records shared by the BO and SA engines.
//!
//! On disk a record is JSON lines: one `{"meta": ...}` header followed by one
//! `{"row": ...}` line per objective evaluation.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lcs_pack::Outline;
use crate::seqpair::SequencePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Bo,
    Sa,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Bo => "bo",
            Algo::Sa => "sa",
        })
    }
}

/// Best placement found by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPlacement {
    pub sp: SequencePair,
    pub hpwl: f64,
    pub positions: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub design: String,
    pub algo: Algo,
    pub seed: u64,
    /// Snapshot of the engine configuration.
    pub config: serde_json::Value,
    pub num_macros: usize,
    pub outline: Outline,
    /// Feasible draws over total draws while sampling starting points.
    pub init_acceptance_rate: f64,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<BestPlacement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// 0-based evaluation index.
    pub eval: usize,
    /// BO round (0 for the initial design) or SA step.
    pub iter: usize,
    pub sp: SequencePair,
    pub hpwl: f64,
    /// Best HPWL over rows `0..=eval`.
    pub best_hpwl: f64,
    /// Metropolis decision (SA only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub rows: Vec<EvalRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Line {
    Meta(RunMeta),
    Row(EvalRow),
}

impl RunRecord {
    pub fn best_hpwl(&self) -> Option<f64> {
        self.rows.last().map(|r| r.best_hpwl)
    }

    pub fn best_trace(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.best_hpwl).collect()
    }

    /// Appends a row, filling in the running best.
    pub(crate) fn push(&mut self, iter: usize, sp: SequencePair, hpwl: f64, accepted: Option<bool>) {
        let best_hpwl = self.best_hpwl().map_or(hpwl, |b| b.min(hpwl));
        self.rows.push(EvalRow {
            eval: self.rows.len(),
            iter,
            sp,
            hpwl,
            best_hpwl,
            accepted,
            wall_time_s: None,
        });
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &Line::Meta(self.meta.clone()))?;
        w.write_all(b"\n")?;
        for r in &self.rows {
            serde_json::to_writer(&mut w, &Line::Row(r.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = None;
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| Error::parse(i + 1, e.column(), e.to_string()))?;
            match parsed {
                Line::Meta(m) if meta.is_none() && rows.is_empty() => meta = Some(m),
                Line::Meta(_) => return Err(Error::parse(i + 1, 1, "unexpected second header")),
                Line::Row(r) => {
                    if meta.is_none() {
                        return Err(Error::parse(i + 1, 1, "row before header"));
                    }
                    rows.push(r)
                }
            }
        }
        let meta = meta.ok_or_else(|| Error::parse(1, 1, "missing run header"))?;
        Ok(Self { meta, rows })
    }
}
