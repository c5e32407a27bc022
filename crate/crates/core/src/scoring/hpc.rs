//! Training-orchestration score with weight redistribution.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_METRICS: u8 = 6;
const STEPS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HpcStep {
    Generate,
    Submit,
    Monitor,
    Evaluate,
}

impl HpcStep {
    pub const ALL: [HpcStep; 4] = [HpcStep::Generate, HpcStep::Submit, HpcStep::Monitor, HpcStep::Evaluate];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpcRunRecord {
    pub steps_completed: BTreeSet<HpcStep>,
    pub config_matches: bool,
    pub metrics_extracted: u8,
    pub config_step_called: bool,
    pub eval_step_called: bool,
}

impl HpcRunRecord {
    pub fn validate(&self) -> Result<()> {
        if self.metrics_extracted > MAX_METRICS {
            return Err(Error::invalid(
                "metrics_extracted",
                format!("{} exceeds {MAX_METRICS}", self.metrics_extracted),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpcWeights {
    pub step: f64,
    pub config: f64,
    pub eval: f64,
}

impl Default for HpcWeights {
    fn default() -> Self {
        Self { step: 0.70, config: 0.15, eval: 0.15 }
    }
}

impl HpcWeights {
    pub fn sum(&self) -> f64 {
        self.step + self.config + self.eval
    }
}

/// Weights of steps that were never called move to the step term.
pub fn effective_weights(record: &HpcRunRecord, base: &HpcWeights) -> HpcWeights {
    let config = if record.config_step_called { base.config } else { 0.0 };
    let eval = if record.eval_step_called { base.eval } else { 0.0 };
    HpcWeights { step: base.sum() - config - eval, config, eval }
}

pub fn hpc_score(record: &HpcRunRecord, base: &HpcWeights) -> Result<f64> {
    record.validate()?;
    let w = effective_weights(record, base);
    let steps = record.steps_completed.len() as f64 / STEPS;
    let config = if record.config_matches { 1.0 } else { 0.0 };
    let metrics = (f64::from(record.metrics_extracted) / f64::from(MAX_METRICS)).min(1.0);
    Ok(w.step * steps + w.config * config + w.eval * metrics)
}
