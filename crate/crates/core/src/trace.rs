//! Agent tool-call traces.
//!
//! On disk a trace is a JSON Lines file with one [`ToolCall`] per line and a
//! sibling JSON file mapping artifact ids to [`Artifact`]s. Calls reference
//! artifacts through the `design` argument and the `artifact` key of their
//! result object.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::DesignGrid;
use crate::params::ExportParams;

/// Argument key naming the design artifact a call operates on.
pub const DESIGN_ARG: &str = "design";
/// Result key naming the artifact a call produced.
pub const ARTIFACT_KEY: &str = "artifact";
/// Result key carrying a simulated objective value.
pub const OBJECTIVE_KEY: &str = "objective_value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    CreateProblem,
    OptimizeDesign,
    SimulateDesign,
    RenderDesign,
    ConvertDesignToStl,
    AskHumanForClarification,
    SearchDocuments,
    GenerateTrainingCommand,
    SubmitJob,
    MonitorJob,
    EvaluateModel,
}

impl Tool {
    pub const ALL: [Tool; 11] = [
        Tool::CreateProblem,
        Tool::OptimizeDesign,
        Tool::SimulateDesign,
        Tool::RenderDesign,
        Tool::ConvertDesignToStl,
        Tool::AskHumanForClarification,
        Tool::SearchDocuments,
        Tool::GenerateTrainingCommand,
        Tool::SubmitJob,
        Tool::MonitorJob,
        Tool::EvaluateModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tool::CreateProblem => "create_problem",
            Tool::OptimizeDesign => "optimize_design",
            Tool::SimulateDesign => "simulate_design",
            Tool::RenderDesign => "render_design",
            Tool::ConvertDesignToStl => "convert_design_to_stl",
            Tool::AskHumanForClarification => "ask_human_for_clarification",
            Tool::SearchDocuments => "search_documents",
            Tool::GenerateTrainingCommand => "generate_training_command",
            Tool::SubmitJob => "submit_job",
            Tool::MonitorJob => "monitor_job",
            Tool::EvaluateModel => "evaluate_model",
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tool {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tool::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "tool", value: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub index: usize,
    pub tool: Tool,
    #[serde(default)]
    pub args: BTreeMap<String, Value>,
    pub ok: bool,
    #[serde(default)]
    pub result: Option<Value>,
}

impl ToolCall {
    pub fn arg_f64(&self, key: &str) -> Option<f64> {
        self.args.get(key).and_then(Value::as_f64)
    }

    pub fn arg_bool(&self, key: &str) -> Option<bool> {
        self.args.get(key).and_then(Value::as_bool)
    }

    pub fn arg_str(&self, key: &str) -> Option<&str> {
        self.args.get(key).and_then(Value::as_str)
    }

    fn result_field(&self, key: &str) -> Option<&Value> {
        self.result.as_ref().and_then(|r| r.get(key))
    }

    /// Artifact id produced by this call, if any.
    pub fn produced_artifact(&self) -> Option<&str> {
        self.result_field(ARTIFACT_KEY).and_then(Value::as_str)
    }

    /// Objective value reported by a simulate call.
    pub fn objective(&self) -> Option<f64> {
        self.result_field(OBJECTIVE_KEY).and_then(Value::as_f64)
    }

    pub fn design_ref(&self) -> Option<&str> {
        self.arg_str(DESIGN_ARG)
    }

    /// Export parameters as passed to `convert_design_to_stl`; absent keys stay `None`.
    pub fn export_args(&self) -> ExportArgs {
        ExportArgs {
            threshold: self.arg_f64("threshold"),
            mirror_y: self.arg_bool("mirror_y"),
            scale_xy: self.arg_f64("scale_xy"),
            scale_z: self.arg_f64("scale_z"),
        }
    }
}

/// Possibly incomplete export parameters taken from a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportArgs {
    pub threshold: Option<f64>,
    pub mirror_y: Option<bool>,
    pub scale_xy: Option<f64>,
    pub scale_z: Option<f64>,
}

impl ExportArgs {
    pub fn complete(&self) -> Option<ExportParams> {
        Some(ExportParams {
            threshold: self.threshold?,
            mirror_y: self.mirror_y?,
            scale_xy: self.scale_xy?,
            scale_z: self.scale_z?,
        })
    }
}

impl From<ExportParams> for ExportArgs {
    fn from(p: ExportParams) -> Self {
        Self {
            threshold: Some(p.threshold),
            mirror_y: Some(p.mirror_y),
            scale_xy: Some(p.scale_xy),
            scale_z: Some(p.scale_z),
        }
    }
}

/// Reference to an exported mesh; the mesh itself lives outside the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshRef {
    pub triangles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Grid(DesignGrid),
    Mesh(MeshRef),
    Params { values: BTreeMap<String, Value> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub calls: Vec<ToolCall>,
    #[serde(default)]
    pub artifacts: BTreeMap<String, Artifact>,
}

impl Trace {
    /// Checks the structural invariants: strictly increasing indices and
    /// every referenced artifact present.
    pub fn validate(&self) -> Result<()> {
        for (pos, pair) in self.calls.windows(2).enumerate() {
            if pair[1].index <= pair[0].index {
                return Err(Error::MalformedTrace {
                    line: pos + 2,
                    reason: format!(
                        "index {} does not follow {}",
                        pair[1].index, pair[0].index
                    ),
                });
            }
        }
        for call in &self.calls {
            for id in call.design_ref().into_iter().chain(call.produced_artifact()) {
                if !self.artifacts.contains_key(id) {
                    return Err(Error::MissingArtifact(id.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn successful(&self) -> impl Iterator<Item = &ToolCall> {
        self.calls.iter().filter(|c| c.ok)
    }

    pub fn successful_of(&self, tool: Tool) -> impl Iterator<Item = &ToolCall> {
        self.successful().filter(move |c| c.tool == tool)
    }

    pub fn grid(&self, id: &str) -> Option<&DesignGrid> {
        match self.artifacts.get(id) {
            Some(Artifact::Grid(g)) => Some(g),
            _ => None,
        }
    }

    /// Parses the JSON Lines call log and the artifacts map.
    pub fn from_jsonl(calls: &str, artifacts: Option<&str>) -> Result<Self> {
        let mut parsed = Vec::new();
        for (n, line) in calls.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let call: ToolCall = serde_json::from_str(line).map_err(|e| Error::MalformedTrace {
                line: n + 1,
                reason: e.to_string(),
            })?;
            parsed.push(call);
        }
        let artifacts = match artifacts {
            Some(text) if !text.trim().is_empty() => serde_json::from_str(text)?,
            _ => BTreeMap::new(),
        };
        let trace = Trace { calls: parsed, artifacts };
        trace.validate()?;
        Ok(trace)
    }

    pub fn calls_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for call in &self.calls {
            out.push_str(&serde_json::to_string(call)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn artifacts_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.artifacts)?)
    }

    /// Path of the artifacts file that accompanies a `.jsonl` call log.
    pub fn artifacts_path(calls_path: &Path) -> std::path::PathBuf {
        calls_path.with_extension("artifacts.json")
    }

    pub fn read(calls_path: &Path) -> Result<Self> {
        let calls = std::fs::read_to_string(calls_path).map_err(|e| Error::io(calls_path, e))?;
        let art_path = Self::artifacts_path(calls_path);
        let artifacts = if art_path.exists() {
            Some(std::fs::read_to_string(&art_path).map_err(|e| Error::io(&art_path, e))?)
        } else {
            None
        };
        Self::from_jsonl(&calls, artifacts.as_deref())
    }

    pub fn write(&self, calls_path: &Path) -> Result<()> {
        std::fs::write(calls_path, self.calls_jsonl()?).map_err(|e| Error::io(calls_path, e))?;
        let art_path = Self::artifacts_path(calls_path);
        std::fs::write(&art_path, self.artifacts_json()?).map_err(|e| Error::io(&art_path, e))
    }
}

/// Incremental trace construction with automatic indices.
#[derive(Debug, Default)]
pub struct TraceBuilder {
    trace: Trace,
}

impl TraceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn call(&mut self, tool: Tool, args: BTreeMap<String, Value>, result: Option<Value>) -> &mut Self {
        let index = self.trace.calls.len();
        self.trace.calls.push(ToolCall { index, tool, args, ok: true, result });
        self
    }

    pub fn failed_call(&mut self, tool: Tool, args: BTreeMap<String, Value>) -> &mut Self {
        let index = self.trace.calls.len();
        self.trace.calls.push(ToolCall { index, tool, args, ok: false, result: None });
        self
    }

    pub fn artifact(&mut self, id: impl Into<String>, artifact: Artifact) -> &mut Self {
        self.trace.artifacts.insert(id.into(), artifact);
        self
    }

    pub fn finish(self) -> Trace {
        self.trace
    }
}

/// Builds an argument map from `(key, value)` pairs.
pub fn args<I, K>(pairs: I) -> BTreeMap<String, Value>
where
    I: IntoIterator<Item = (K, Value)>,
    K: Into<String>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v)).collect()
}
