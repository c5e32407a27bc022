//! Scripted agents that reproduce characteristic behaviours, standing in for
//! LLM backends.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::backend::{render_design, ProblemBackend};
use crate::geometry::export_mesh;
use crate::grid::DesignGrid;
use crate::params::{DesignParams, ExportParams};
use crate::prompt::{HpcPrompt, HpcPromptStyle, PromptInstance, Style};
use crate::rng::{hash_label, SplitMix64};
use crate::scoring::{HpcRunRecord, HpcStep};
use crate::trace::{args, Artifact, MeshRef, Tool, Trace, TraceBuilder, ARTIFACT_KEY, DESIGN_ARG, OBJECTIVE_KEY};
use crate::validate::{resolve_conditional, Branch};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Perfect,
    BranchInverter,
    OverCaller,
    RenderOmitter,
    ClarificationBlind,
    DistractConfused,
    HpcPerfect,
    HpcEvalDropper,
}

impl OracleKind {
    pub const ALL: [OracleKind; 8] = [
        OracleKind::Perfect,
        OracleKind::BranchInverter,
        OracleKind::OverCaller,
        OracleKind::RenderOmitter,
        OracleKind::ClarificationBlind,
        OracleKind::DistractConfused,
        OracleKind::HpcPerfect,
        OracleKind::HpcEvalDropper,
    ];

    /// Kinds that act on workflow prompts.
    pub const WORKFLOW: [OracleKind; 6] = [
        OracleKind::Perfect,
        OracleKind::BranchInverter,
        OracleKind::OverCaller,
        OracleKind::RenderOmitter,
        OracleKind::ClarificationBlind,
        OracleKind::DistractConfused,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Perfect => "perfect",
            OracleKind::BranchInverter => "branch_inverter",
            OracleKind::OverCaller => "over_caller",
            OracleKind::RenderOmitter => "render_omitter",
            OracleKind::ClarificationBlind => "clarification_blind",
            OracleKind::DistractConfused => "distract_confused",
            OracleKind::HpcPerfect => "hpc_perfect",
            OracleKind::HpcEvalDropper => "hpc_eval_dropper",
        }
    }

    pub fn is_hpc(self) -> bool {
        matches!(self, OracleKind::HpcPerfect | OracleKind::HpcEvalDropper)
    }

    /// Whether the behaviour is meaningful for a workflow style.
    pub fn applies_to(self, style: Style) -> bool {
        match self {
            OracleKind::Perfect | OracleKind::OverCaller => true,
            OracleKind::BranchInverter => style == Style::WCond,
            OracleKind::RenderOmitter => style == Style::Full,
            OracleKind::ClarificationBlind => style == Style::Natural,
            OracleKind::DistractConfused => style == Style::WDistract,
            OracleKind::HpcPerfect | OracleKind::HpcEvalDropper => false,
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_").to_ascii_lowercase();
        OracleKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Unknown { kind: "oracle", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    /// Redundant calls added by the over-caller.
    pub over_calls: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { over_calls: 1 }
    }
}

/// Design inputs a clarification-blind agent assumes.
pub const BLIND_DEFAULTS: (f64, f64, f64) = (0.35, 1.0, 2.0);

/// Records calls against the backend as an agent would make them.
struct Session<'a> {
    instance: &'a PromptInstance,
    backend: &'a dyn ProblemBackend,
    trace: TraceBuilder,
    designs: usize,
    meshes: usize,
}

impl<'a> Session<'a> {
    fn new(instance: &'a PromptInstance, backend: &'a dyn ProblemBackend) -> Self {
        Self { instance, backend, trace: TraceBuilder::new(), designs: 0, meshes: 0 }
    }

    fn create_problem(&mut self) {
        let spec = &self.instance.spec;
        self.trace.call(
            Tool::CreateProblem,
            args([("problem_id", json!(spec.problem_id))]),
            Some(json!({"problem_id": spec.problem_id, "rows": spec.rows, "cols": spec.cols})),
        );
    }

    fn optimize(&mut self, params: &DesignParams) -> Result<(String, DesignGrid)> {
        let grid = self.backend.optimize(&self.instance.spec, params)?;
        let id = format!("design_{}", self.designs);
        self.designs += 1;
        self.trace
            .call(
                Tool::OptimizeDesign,
                args([
                    ("volfrac", json!(params.volfrac)),
                    ("forcedist", json!(params.forcedist)),
                    ("rmin", json!(params.rmin)),
                ]),
                Some(json!({ ARTIFACT_KEY: id })),
            )
            .artifact(id.clone(), Artifact::Grid(grid.clone()));
        Ok((id, grid))
    }

    fn simulate(&mut self, id: &str, grid: &DesignGrid, params: &DesignParams) -> Result<f64> {
        let sim = self.backend.simulate(&self.instance.spec, grid, params)?;
        self.trace.call(
            Tool::SimulateDesign,
            args([(DESIGN_ARG, json!(id))]),
            Some(json!({ OBJECTIVE_KEY: sim.objective_value, "achieved_volfrac": sim.achieved_volfrac })),
        );
        Ok(sim.objective_value)
    }

    fn render(&mut self, id: &str, grid: &DesignGrid) {
        let img = render_design(grid);
        self.trace.call(
            Tool::RenderDesign,
            args([(DESIGN_ARG, json!(id))]),
            Some(json!({"width": img.width, "height": img.height})),
        );
    }

    fn export(&mut self, id: &str, grid: &DesignGrid, p: &ExportParams) {
        let call_args = args([
            (DESIGN_ARG, json!(id)),
            ("threshold", json!(p.threshold)),
            ("mirror_y", json!(p.mirror_y)),
            ("scale_xy", json!(p.scale_xy)),
            ("scale_z", json!(p.scale_z)),
        ]);
        match export_mesh(grid, p) {
            Ok(mesh) => {
                let mesh_id = format!("mesh_{}", self.meshes);
                self.meshes += 1;
                let triangles = mesh.triangles.len();
                self.trace
                    .call(Tool::ConvertDesignToStl, call_args, Some(json!({ ARTIFACT_KEY: mesh_id, "triangles": triangles })))
                    .artifact(mesh_id, Artifact::Mesh(MeshRef { triangles, path: None }));
            }
            Err(_) => {
                self.trace.failed_call(Tool::ConvertDesignToStl, call_args);
            }
        }
    }

    fn ask(&mut self) {
        self.trace.call(
            Tool::AskHumanForClarification,
            args([("question", json!("Which volume fraction, force distance and filter radius should I use?"))]),
            Some(json!({"answer": "awaiting reply"})),
        );
    }

    fn finish(self) -> Trace {
        self.trace.finish()
    }
}

/// Which export the oracle writes for a single-export style.
fn chosen_export(kind: OracleKind, instance: &PromptInstance, objective: f64) -> Result<ExportParams> {
    let expect = instance
        .export_expect
        .as_ref()
        .ok_or_else(|| Error::ExpectationKind(format!("{} has no export expectation", instance.style)))?;
    match instance.style {
        Style::WCond => {
            let (branch, params) = resolve_conditional(expect, objective)?;
            if kind != OracleKind::BranchInverter {
                return Ok(params);
            }
            let other = match branch.opposite() {
                Branch::High => expect.branch_high,
                Branch::Low => expect.branch_low,
            };
            other.ok_or_else(|| Error::ExpectationKind("conditional expectation without branches".into()))
        }
        _ => {
            let fixed = expect.fixed.ok_or_else(|| Error::ExpectationKind("missing fixed export".into()))?;
            match (kind, instance.distractors) {
                (OracleKind::DistractConfused, Some(d)) => {
                    Ok(ExportParams { threshold: d.threshold, scale_xy: d.scale_xy, ..fixed })
                }
                _ => Ok(fixed),
            }
        }
    }
}

pub fn run_oracle(kind: OracleKind, instance: &PromptInstance, backend: &dyn ProblemBackend) -> Result<Trace> {
    run_oracle_with(kind, instance, backend, &OracleOptions::default())
}

/// Deterministic trace of `kind` acting on `instance`.
pub fn run_oracle_with(
    kind: OracleKind,
    instance: &PromptInstance,
    backend: &dyn ProblemBackend,
    opts: &OracleOptions,
) -> Result<Trace> {
    let style = instance.style;
    if !kind.applies_to(style) {
        return Err(Error::OracleStyleMismatch { oracle: kind.to_string(), style: style.to_string() });
    }
    let extra = if kind == OracleKind::OverCaller { opts.over_calls } else { 0 };
    let mut s = Session::new(instance, backend);

    if style == Style::Natural {
        if kind == OracleKind::ClarificationBlind {
            let (volfrac, forcedist, rmin) = BLIND_DEFAULTS;
            let params = DesignParams { volfrac, forcedist, rmin, seed: instance.params.seed };
            s.create_problem();
            let (id, grid) = s.optimize(&params)?;
            s.simulate(&id, &grid, &params)?;
            s.render(&id, &grid);
        } else {
            for _ in 0..=extra {
                s.ask();
            }
        }
        return Ok(s.finish());
    }

    let params = instance.params;
    s.create_problem();
    let (id, grid) = s.optimize(&params)?;
    let objective = s.simulate(&id, &grid, &params)?;
    for _ in 0..extra {
        s.simulate(&id, &grid, &params)?;
    }
    match style {
        Style::Full => {
            if kind != OracleKind::RenderOmitter {
                s.render(&id, &grid);
            }
        }
        Style::WMulti => {
            let exports = instance
                .export_expect
                .and_then(|e| e.exports)
                .ok_or_else(|| Error::ExpectationKind("W-Multi without exports".into()))?;
            for p in &exports {
                s.export(&id, &grid, p);
            }
        }
        _ => {
            let p = chosen_export(kind, instance, objective)?;
            s.export(&id, &grid, &p);
        }
    }
    Ok(s.finish())
}

/// Index of the last pipeline step reached per seed, by prompt style.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpcDropSchedule {
    /// Seed -> number of steps completed; seeds not listed complete all four.
    pub explicit: BTreeMap<u64, usize>,
    pub natural: BTreeMap<u64, usize>,
}

impl Default for HpcDropSchedule {
    /// Explicit prompts lose the final evaluation on 3 of 10 seeds; natural
    /// prompts lose it on 5 of 10, with one run stalling after generation
    /// and one after submission.
    fn default() -> Self {
        Self {
            explicit: [(8, 3), (9, 3), (10, 3)].into_iter().collect(),
            natural: [(6, 3), (7, 3), (8, 3), (9, 2), (10, 1)].into_iter().collect(),
        }
    }
}

impl HpcDropSchedule {
    /// Seeds outside 1..=10 wrap onto that range.
    pub fn steps_for(&self, style: HpcPromptStyle, seed: u64) -> usize {
        let key = (seed.max(1) - 1) % 10 + 1;
        let table = match style {
            HpcPromptStyle::Explicit => &self.explicit,
            HpcPromptStyle::Natural => &self.natural,
        };
        table.get(&key).copied().unwrap_or(4).min(4)
    }
}

/// Metric names reported by the evaluation step.
pub const HPC_METRICS: [&str; 6] = ["iog", "cog", "fog", "mmd", "dpp", "violation_ratio"];

pub fn hpc_trace(kind: OracleKind, prompt: &HpcPrompt, schedule: &HpcDropSchedule) -> Result<Trace> {
    let steps = match kind {
        OracleKind::HpcPerfect => 4,
        OracleKind::HpcEvalDropper => schedule.steps_for(prompt.style, prompt.seed),
        other => return Err(Error::OracleStyleMismatch { oracle: other.to_string(), style: "hpc".into() }),
    };
    let job = format!("job_{}", prompt.seed);
    let mut b = TraceBuilder::new();
    let tools = [Tool::GenerateTrainingCommand, Tool::SubmitJob, Tool::MonitorJob, Tool::EvaluateModel];
    for tool in tools.into_iter().take(steps) {
        let (call_args, result) = match tool {
            Tool::GenerateTrainingCommand => (
                args([
                    ("algorithm", json!(prompt.algorithm)),
                    ("problem_id", json!(prompt.problem_id)),
                    ("epochs", json!(prompt.epochs)),
                    ("seed", json!(prompt.seed)),
                ]),
                json!({"script": format!("train_{}_{}.slurm", prompt.algorithm, prompt.seed)}),
            ),
            Tool::SubmitJob => (args([("script", json!(format!("train_{}_{}.slurm", prompt.algorithm, prompt.seed)))]), json!({"job_id": job})),
            Tool::MonitorJob => (
                args([("job_id", json!(job)), ("check_interval", json!(30)), ("max_checks", json!(200))]),
                json!({"state": "COMPLETED"}),
            ),
            _ => {
                let mut rng = SplitMix64::from_words(&[hash_label("hpc-metrics"), prompt.seed]);
                let metrics: BTreeMap<&str, Value> =
                    HPC_METRICS.iter().map(|m| (*m, json!(crate::rng::round_to(rng.next_f64(), 4)))).collect();
                (
                    args([
                        ("problem_id", json!(prompt.problem_id)),
                        ("algorithm", json!(prompt.algorithm)),
                        ("seed", json!(prompt.seed)),
                        ("n_samples", json!(50)),
                    ]),
                    json!({ "metrics": metrics }),
                )
            }
        };
        b.call(tool, call_args, Some(result));
    }
    Ok(b.finish())
}

/// Reads step completion, configuration and extracted metrics off a trace.
pub fn hpc_record_from_trace(prompt: &HpcPrompt, trace: &Trace) -> HpcRunRecord {
    let step_of = |t: Tool| match t {
        Tool::GenerateTrainingCommand => Some(HpcStep::Generate),
        Tool::SubmitJob => Some(HpcStep::Submit),
        Tool::MonitorJob => Some(HpcStep::Monitor),
        Tool::EvaluateModel => Some(HpcStep::Evaluate),
        _ => None,
    };
    let steps_completed = trace.successful().filter_map(|c| step_of(c.tool)).collect();
    let called = |t: Tool| trace.calls.iter().any(|c| c.tool == t);
    let config_matches = trace.successful_of(Tool::GenerateTrainingCommand).last().is_some_and(|c| {
        c.arg_str("algorithm") == Some(prompt.algorithm.as_str())
            && c.arg_str("problem_id") == Some(prompt.problem_id.name())
            && c.args.get("epochs").and_then(Value::as_u64) == Some(u64::from(prompt.epochs))
            && c.args.get("seed").and_then(Value::as_u64) == Some(prompt.seed)
    });
    let metrics_extracted = trace
        .successful_of(Tool::EvaluateModel)
        .last()
        .and_then(|c| c.result.as_ref())
        .and_then(|r| r.get("metrics"))
        .and_then(Value::as_object)
        .map_or(0, |m| HPC_METRICS.iter().filter(|k| m.get(**k).is_some_and(Value::is_number)).count());
    HpcRunRecord {
        steps_completed,
        config_matches,
        metrics_extracted: metrics_extracted as u8,
        config_step_called: called(Tool::GenerateTrainingCommand),
        eval_step_called: called(Tool::EvaluateModel),
    }
}

pub fn run_hpc_oracle(kind: OracleKind, prompt: &HpcPrompt) -> Result<HpcRunRecord> {
    run_hpc_oracle_with(kind, prompt, &HpcDropSchedule::default())
}

pub fn run_hpc_oracle_with(kind: OracleKind, prompt: &HpcPrompt, schedule: &HpcDropSchedule) -> Result<HpcRunRecord> {
    Ok(hpc_record_from_trace(prompt, &hpc_trace(kind, prompt, schedule)?))
}
