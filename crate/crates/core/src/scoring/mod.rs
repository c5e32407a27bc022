//! Design-quality sub-metrics and the workflow composite.

mod hpc;
mod rag;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use hpc::{effective_weights, hpc_score, HpcRunRecord, HpcStep, HpcWeights, MAX_METRICS};
pub use rag::{rag_score, RagBreakdown, RagOutcome, RagParam, RagPrompt, RagWeights};

use crate::backend::ProblemBackend;
use crate::geometry::{connectivity_2d, export_mesh, is_watertight};
use crate::grid::{BinaryGrid, DesignGrid};
use crate::params::{DesignParams, ExportParams};
use crate::prompt::{PromptInstance, Style};
use crate::trace::{Tool, ToolCall, Trace};
use crate::validate::ValidationReport;
use crate::{Error, Result};

/// Tolerance for weights summing to one.
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Intersection over union of material cells; two empty grids score 1.
pub fn iou(a: &BinaryGrid, b: &BinaryGrid) -> Result<f64> {
    a.check_same_shape(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.cells().iter().zip(b.cells()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Fraction of cells classified identically.
pub fn pixel_accuracy(a: &BinaryGrid, b: &BinaryGrid) -> Result<f64> {
    a.check_same_shape(b)?;
    let same = a.cells().iter().zip(b.cells()).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.cells().len() as f64)
}

/// `exp(-|actual - target| / tau)`.
pub fn constraint_score(actual: f64, target: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid("tau", format!("{tau} must be > 0")));
    }
    Ok((-(actual - target).abs() / tau).exp())
}

/// `exp(-|agent - gt| / (scale * gt))`; e^-1 at `scale` relative error.
pub fn objective_score_scaled(agent_obj: f64, gt_obj: f64, scale: f64) -> Result<f64> {
    if !(gt_obj > 0.0) || !gt_obj.is_finite() {
        return Err(Error::invalid("gt_obj", format!("{gt_obj} must be > 0")));
    }
    if !agent_obj.is_finite() {
        return Err(Error::invalid("agent_obj", "not finite"));
    }
    Ok((-(agent_obj - gt_obj).abs() / (scale * gt_obj)).exp())
}

pub fn objective_score(agent_obj: f64, gt_obj: f64) -> Result<f64> {
    objective_score_scaled(agent_obj, gt_obj, ScoringWeights::default().objective_scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqWeights {
    pub iou: f64,
    pub pixel_accuracy: f64,
    pub objective: f64,
    pub constraint: f64,
    pub connectivity: f64,
    pub watertight: f64,
}

impl Default for DqWeights {
    fn default() -> Self {
        Self { iou: 0.31, pixel_accuracy: 0.19, objective: 0.15, constraint: 0.12, connectivity: 0.12, watertight: 0.11 }
    }
}

impl DqWeights {
    fn as_array(&self) -> [f64; 6] {
        [self.iou, self.pixel_accuracy, self.objective, self.constraint, self.connectivity, self.watertight]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeWeights {
    pub design: f64,
    pub tool: f64,
    pub completion: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self { design: 0.65, tool: 0.20, completion: 0.15 }
    }
}

/// All tunable scoring constants; every field defaults to the benchmark value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringWeights {
    pub dq: DqWeights,
    pub composite: CompositeWeights,
    /// Temperature of the volume-fraction constraint score.
    pub constraint_tau: f64,
    /// Relative error at which the objective score drops to e^-1.
    pub objective_scale: f64,
    /// Density threshold for IoU, pixel accuracy and connectivity.
    pub binarize_threshold: f64,
    pub hpc: HpcWeights,
}

impl Default for ScoringWeights {
    fn default() -> Self {
        Self {
            dq: DqWeights::default(),
            composite: CompositeWeights::default(),
            constraint_tau: 0.05,
            objective_scale: 0.1,
            binarize_threshold: 0.5,
            hpc: HpcWeights::default(),
        }
    }
}

fn check_weights(name: &str, ws: &[f64]) -> Result<()> {
    if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Config(format!("{name} weights must be finite and non-negative")));
    }
    let sum: f64 = ws.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Config(format!("{name} weights sum to {sum}, expected 1")));
    }
    Ok(())
}

impl ScoringWeights {
    pub fn validate(&self) -> Result<()> {
        check_weights("design-quality", &self.dq.as_array())?;
        let c = &self.composite;
        check_weights("composite", &[c.design, c.tool, c.completion])?;
        let h = &self.hpc;
        check_weights("hpc", &[h.step, h.config, h.eval])?;
        for (name, v) in [("constraint_tau", self.constraint_tau), ("objective_scale", self.objective_scale)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.binarize_threshold) {
            return Err(Error::Config("binarize_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Partial JSON overrides on top of the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let w: Self = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// The six per-design sub-scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignScores {
    pub iou: f64,
    pub pixel_accuracy: f64,
    pub objective_score: f64,
    pub constraint_score: f64,
    pub connectivity: f64,
    pub watertight: f64,
}

impl DesignScores {
    fn as_array(&self) -> [f64; 6] {
        [
            self.iou,
            self.pixel_accuracy,
            self.objective_score,
            self.constraint_score,
            self.connectivity,
            self.watertight,
        ]
    }
}

pub fn design_quality(s: &DesignScores, w: &DqWeights) -> Result<f64> {
    let vals = s.as_array();
    if let Some(v) = vals.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid("sub-score", format!("{v} not in [0, 1]")));
    }
    Ok(vals.iter().zip(w.as_array()).map(|(v, w)| v * w).sum())
}

/// Workflow composite; an abstained run has its design term forced to 1.
pub fn combined_overall(dq: f64, tool_eff: f64, tc: f64, abstained: bool, w: &CompositeWeights) -> f64 {
    let dq = if abstained { 1.0 } else { dq };
    w.design * dq + w.tool * tool_eff + w.completion * tc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub iou: f64,
    pub pixel_accuracy: f64,
    pub objective_score: f64,
    pub constraint_score: f64,
    pub connectivity: f64,
    pub watertight: f64,
    pub tool_efficiency: f64,
    pub task_completion: f64,
    /// Weighted sum of the six sub-scores.
    pub design_quality: f64,
    /// Design term entering the composite (1.0 for an abstained run).
    pub effective_design_quality: f64,
    pub combined_overall: f64,
    pub abstained: bool,
    pub tool_calls: usize,
}

impl ScoreReport {
    pub fn design_scores(&self) -> DesignScores {
        DesignScores {
            iou: self.iou,
            pixel_accuracy: self.pixel_accuracy,
            objective_score: self.objective_score,
            constraint_score: self.constraint_score,
            connectivity: self.connectivity,
            watertight: self.watertight,
        }
    }
}

fn last_optimize(trace: &Trace) -> Option<&ToolCall> {
    trace.successful_of(Tool::OptimizeDesign).last()
}

/// Grid produced by the agent's last successful optimization.
pub fn agent_design(trace: &Trace) -> Option<&DesignGrid> {
    last_optimize(trace).and_then(ToolCall::produced_artifact).and_then(|id| trace.grid(id))
}

/// Optimization inputs the agent used; absent arguments fall back to the cell's.
pub fn agent_params(trace: &Trace, fallback: &DesignParams) -> DesignParams {
    let Some(call) = last_optimize(trace) else { return *fallback };
    DesignParams {
        volfrac: call.arg_f64("volfrac").unwrap_or(fallback.volfrac),
        forcedist: call.arg_f64("forcedist").unwrap_or(fallback.forcedist),
        rmin: call.arg_f64("rmin").unwrap_or(fallback.rmin),
        seed: fallback.seed,
    }
}

/// The export whose mesh is checked: the last one, or Export A for W-Multi.
fn scored_export(style: Style, trace: &Trace) -> Option<&ToolCall> {
    let mut exports = trace.successful_of(Tool::ConvertDesignToStl);
    if style == Style::WMulti {
        exports.next()
    } else {
        exports.last()
    }
}

fn watertight_score(instance: &PromptInstance, trace: &Trace, fallback: &DesignGrid) -> f64 {
    if !instance.style.exports_stl() {
        return 0.0;
    }
    let Some(call) = scored_export(instance.style, trace) else { return 0.0 };
    let Some(export) = call.export_args().complete() else { return 0.0 };
    let design = call.design_ref().and_then(|id| trace.grid(id)).unwrap_or(fallback);
    watertight_of(design, &export)
}

pub fn watertight_of(design: &DesignGrid, export: &ExportParams) -> f64 {
    match export_mesh(design, export) {
        Ok(mesh) if is_watertight(&mesh).watertight => 1.0,
        _ => 0.0,
    }
}

/// Sub-scores of the agent design against the ground truth.
pub fn design_scores(
    instance: &PromptInstance,
    trace: &Trace,
    backend: &dyn ProblemBackend,
    w: &ScoringWeights,
) -> Result<DesignScores> {
    let Some(agent) = agent_design(trace) else { return Ok(DesignScores::default()) };
    let truth = backend.optimize(&instance.spec, &instance.params)?;
    if agent.rows() != truth.rows() || agent.cols() != truth.cols() {
        return Ok(DesignScores::default());
    }
    let a = agent.binarize(w.binarize_threshold)?;
    let g = truth.binarize(w.binarize_threshold)?;
    let gt_obj = backend.simulate(&instance.spec, &truth, &instance.params)?.objective_value;
    let objective_score = match backend.simulate(&instance.spec, agent, &agent_params(trace, &instance.params)) {
        Ok(sim) => objective_score_scaled(sim.objective_value, gt_obj, w.objective_scale)?,
        Err(Error::EmptyDesign) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(DesignScores {
        iou: iou(&a, &g)?,
        pixel_accuracy: pixel_accuracy(&a, &g)?,
        objective_score,
        constraint_score: constraint_score(agent.mean_density(), instance.params.volfrac, w.constraint_tau)?,
        connectivity: connectivity_2d(&a),
        watertight: watertight_score(instance, trace, agent),
    })
}

/// Scores one validated run.
pub fn score_run(
    instance: &PromptInstance,
    trace: &Trace,
    report: &ValidationReport,
    backend: &dyn ProblemBackend,
    w: &ScoringWeights,
) -> Result<ScoreReport> {
    let s = design_scores(instance, trace, backend, w)?;
    let dq = design_quality(&s, &w.dq)?;
    let tc = f64::from(report.task_completion);
    let effective = if report.abstained { 1.0 } else { dq };
    Ok(ScoreReport {
        iou: s.iou,
        pixel_accuracy: s.pixel_accuracy,
        objective_score: s.objective_score,
        constraint_score: s.constraint_score,
        connectivity: s.connectivity,
        watertight: s.watertight,
        tool_efficiency: report.tool_efficiency,
        task_completion: tc,
        design_quality: dq,
        effective_design_quality: effective,
        combined_overall: combined_overall(dq, report.tool_efficiency, tc, report.abstained, &w.composite),
        abstained: report.abstained,
        tool_calls: report.total_calls,
    })
}
