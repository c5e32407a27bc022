//! Gated retrieval score: parameter accuracy counts only if the agent searched.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::trace::{Tool, Trace};
use crate::validate::within_tolerance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RagPrompt {
    P0,
    P1,
    P2,
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RagParam {
    Volfrac,
    Forcedist,
    Rmin,
}

impl RagParam {
    pub const ALL: [RagParam; 3] = [RagParam::Volfrac, RagParam::Forcedist, RagParam::Rmin];

    pub fn name(self) -> &'static str {
        match self {
            RagParam::Volfrac => "volfrac",
            RagParam::Forcedist => "forcedist",
            RagParam::Rmin => "rmin",
        }
    }

    /// Accuracy tolerance for the extracted value.
    pub fn tolerance(self) -> f64 {
        match self {
            RagParam::Volfrac | RagParam::Forcedist => 0.05,
            RagParam::Rmin => 0.5,
        }
    }
}

impl fmt::Display for RagParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RagParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RagParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "rag parameter", value: s.to_string() })
    }
}

/// Per-prompt weights; a weight of zero marks a parameter the prompt does not target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RagWeights {
    pub w_vol: f64,
    pub w_force: f64,
    pub w_rmin: f64,
    pub w_rag: f64,
}

impl RagWeights {
    pub fn param(&self, p: RagParam) -> f64 {
        match p {
            RagParam::Volfrac => self.w_vol,
            RagParam::Forcedist => self.w_force,
            RagParam::Rmin => self.w_rmin,
        }
    }

    pub fn sum(&self) -> f64 {
        self.w_vol + self.w_force + self.w_rmin + self.w_rag
    }
}

impl RagPrompt {
    pub const ALL: [RagPrompt; 4] = [RagPrompt::P0, RagPrompt::P1, RagPrompt::P2, RagPrompt::P3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn weights(self) -> RagWeights {
        let (w_vol, w_force, w_rmin, w_rag) = match self {
            RagPrompt::P0 => (0.60, 0.0, 0.0, 0.40),
            RagPrompt::P1 => (0.40, 0.40, 0.0, 0.20),
            RagPrompt::P2 => (0.40, 0.0, 0.40, 0.20),
            RagPrompt::P3 => (0.30, 0.30, 0.30, 0.10),
        };
        RagWeights { w_vol, w_force, w_rmin, w_rag }
    }

    /// Values the prompt asks the agent to retrieve.
    pub fn targets(self) -> BTreeMap<RagParam, f64> {
        let pairs: &[(RagParam, f64)] = match self {
            RagPrompt::P0 => &[(RagParam::Volfrac, 0.35)],
            RagPrompt::P1 => &[(RagParam::Volfrac, 0.70), (RagParam::Forcedist, 0.30)],
            RagPrompt::P2 => &[(RagParam::Volfrac, 0.40), (RagParam::Rmin, 6.0)],
            RagPrompt::P3 => &[(RagParam::Volfrac, 0.70), (RagParam::Forcedist, 0.30), (RagParam::Rmin, 6.0)],
        };
        pairs.iter().copied().collect()
    }
}

impl fmt::Display for RagPrompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index())
    }
}

impl FromStr for RagPrompt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RagPrompt::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unknown { kind: "rag prompt", value: s.to_string() })
    }
}

/// What an agent extracted for one prompt, and whether it searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagOutcome {
    pub prompt_id: RagPrompt,
    #[serde(default)]
    pub extracted: BTreeMap<RagParam, f64>,
    pub rag_called: bool,
}

impl RagOutcome {
    pub fn validate(&self) -> Result<()> {
        let targets = self.prompt_id.targets();
        if let Some(p) = self.extracted.keys().find(|p| !targets.contains_key(p)) {
            return Err(Error::invalid("extracted", format!("{p} is not a target of {}", self.prompt_id)));
        }
        Ok(())
    }

    /// Reads the retrieval flag and the values the agent designed with.
    pub fn from_trace(prompt_id: RagPrompt, trace: &Trace) -> Self {
        let rag_called = trace.successful_of(Tool::SearchDocuments).next().is_some();
        let design = trace.successful_of(Tool::OptimizeDesign).last();
        let extracted = prompt_id
            .targets()
            .keys()
            .filter_map(|&p| design.and_then(|c| c.arg_f64(p.name())).map(|v| (p, v)))
            .collect();
        Self { prompt_id, extracted, rag_called }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagBreakdown {
    pub prompt_id: RagPrompt,
    /// Raw accuracy a_i before gating.
    pub accuracy: BTreeMap<RagParam, f64>,
    /// Accuracy after gating on the retrieval call.
    pub effective: BTreeMap<RagParam, f64>,
    pub rag_called: bool,
    pub score: f64,
}

pub fn rag_score(outcome: &RagOutcome) -> Result<RagBreakdown> {
    outcome.validate()?;
    let w = outcome.prompt_id.weights();
    let gate = if outcome.rag_called { 1.0 } else { 0.0 };
    let mut accuracy = BTreeMap::new();
    let mut effective = BTreeMap::new();
    let mut score = w.w_rag * gate;
    for (p, target) in outcome.prompt_id.targets() {
        let hit = outcome.extracted.get(&p).is_some_and(|v| within_tolerance(target, *v, p.tolerance()));
        let a = if hit { 1.0 } else { 0.0 };
        accuracy.insert(p, a);
        effective.insert(p, a * gate);
        score += w.param(p) * a * gate;
    }
    Ok(RagBreakdown { prompt_id: outcome.prompt_id, accuracy, effective, rag_called: outcome.rag_called, score })
}
