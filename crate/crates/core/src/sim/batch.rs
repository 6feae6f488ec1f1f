use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::{run_scenario, RunOutcome};
use super::scenario::ScenarioConfig;
use super::SimError;

/// Success statistics of one object over a set of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub object: String,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Outcome label counts; successes are counted under "none".
    pub failure_modes: BTreeMap<String, usize>,
    pub outcomes: Vec<RunOutcome>,
}

/// Runs `cfg` once per seed. Runs are independent, so they execute in
/// parallel and the result equals sequential execution.
pub fn batch_run(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<BatchRow, SimError> {
    if seeds.is_empty() {
        return Err(SimError::Config("batch needs at least one seed".into()));
    }
    cfg.validate()?;
    let outcomes: Vec<RunOutcome> = seeds
        .par_iter()
        .map(|&seed| run_scenario(&ScenarioConfig { seed, ..cfg.clone() }).map(|log| log.outcome))
        .collect::<Result<_, _>>()?;
    let mut failure_modes = BTreeMap::new();
    for o in &outcomes {
        let key = o.failure.clone().unwrap_or_else(|| "none".to_string());
        *failure_modes.entry(key).or_insert(0) += 1;
    }
    let successes = outcomes.iter().filter(|o| o.success).count();
    Ok(BatchRow {
        object: cfg.target_name().to_string(),
        attempts: outcomes.len(),
        successes,
        success_rate: successes as f64 / outcomes.len() as f64,
        failure_modes,
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
}

impl BatchReport {
    pub fn new(rows: Vec<BatchRow>) -> Self {
        let attempts = rows.iter().map(|r| r.attempts).sum();
        let successes = rows.iter().map(|r| r.successes).sum();
        let success_rate = if attempts == 0 { 0.0 } else { successes as f64 / attempts as f64 };
        BatchReport { rows, attempts, successes, success_rate }
    }

    /// Failure labels summed over all rows.
    pub fn failure_modes(&self) -> BTreeMap<String, usize> {
        let mut all = BTreeMap::new();
        for r in &self.rows {
            for (k, v) in &r.failure_modes {
                *all.entry(k.clone()).or_insert(0) += v;
            }
        }
        all
    }

    /// One row per object plus a total row. Failure columns are the union of
    /// labels seen, in sorted order.
    pub fn csv(&self) -> String {
        let labels: Vec<String> = self.failure_modes().into_keys().filter(|k| k != "none").collect();
        let mut s = String::from("object,attempts,successes,success_rate");
        for l in &labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        let mut row = |name: &str, attempts: usize, successes: usize, rate: f64, modes: &BTreeMap<String, usize>| {
            let _ = write!(s, "{name},{attempts},{successes},{rate}");
            for l in &labels {
                let _ = write!(s, ",{}", modes.get(l).copied().unwrap_or(0));
            }
            s.push('\n');
        };
        for r in &self.rows {
            row(&r.object, r.attempts, r.successes, r.success_rate, &r.failure_modes);
        }
        row("total", self.attempts, self.successes, self.success_rate, &self.failure_modes());
        s
    }

    /// Plain-text table: object, success rate, attempts, failure modes.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:>8} {:>9}  failures", "object", "success", "attempts");
        for r in &self.rows {
            let fails: Vec<String> = r
                .failure_modes
                .iter()
                .filter(|(k, _)| k.as_str() != "none")
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(
                s,
                "{:<16} {:>7.1}% {:>9}  {}",
                r.object,
                100.0 * r.success_rate,
                r.attempts,
                if fails.is_empty() { "-".to_string() } else { fails.join(" ") }
            );
        }
        let _ = writeln!(s, "{:<16} {:>7.1}% {:>9}", "total", 100.0 * self.success_rate, self.attempts);
        let _ = writeln!(
            s,
            "reference hardware result for context: 85% over 144 attempts (not reproduced by this simulation)"
        );
        s
    }
}
