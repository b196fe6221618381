use std::io::Write;

use anyhow::Result;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub name: String,
    pub anchor: String,
    pub pass: bool,
    /// `None` when the check errored or the deviation is not finite.
    pub max_deviation: Option<f64>,
    pub trials: usize,
    pub runtime_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub group: String,
    pub order: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub trials: usize,
    pub records: Vec<Record>,
    pub skipped: Vec<Skipped>,
    pub summary: Summary,
}

impl Report {
    pub fn new(group: String, order: usize, tolerance: f64, seed: u64, trials: usize, mut records: Vec<Record>, mut skipped: Vec<Skipped>) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        skipped.sort_by(|a, b| a.name.cmp(&b.name));
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary { total: records.len(), passed, failed: records.len() - passed, skipped: skipped.len() };
        Self { group, order, tolerance, seed, trials, records, skipped, summary }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// One row per record; skipped checks follow with an empty `pass` column.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "anchor", "pass", "max_deviation", "trials", "runtime_ms", "detail"])?;
        for r in &self.records {
            w.write_record([
                r.name.clone(),
                r.anchor.clone(),
                r.pass.to_string(),
                r.max_deviation.map(|d| format!("{d:e}")).unwrap_or_default(),
                r.trials.to_string(),
                r.runtime_ms.to_string(),
                r.detail.clone().unwrap_or_default(),
            ])?;
        }
        for s in &self.skipped {
            w.write_record([s.name.as_str(), "", "", "", "0", "0", &format!("skipped: {}", s.reason)])?;
        }
        w.flush()?;
        Ok(())
    }
}
