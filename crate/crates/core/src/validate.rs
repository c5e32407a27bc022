//! Task-completion, tool-efficiency and failure-mode checks for one run.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::backend::ProblemBackend;
use crate::params::ExportParams;
use crate::prompt::{expected_plan, ExpectKind, ExportExpectation, PromptInstance, Style};
use crate::trace::{ExportArgs, Tool, ToolCall, Trace};
use crate::{Error, Result};

/// Absolute tolerance on float export parameters.
pub const PARAM_TOLERANCE: f64 = 0.05;
/// Slack for decimal round-off (0.58 vs 0.63 is 0.05000000000000004 in f64).
pub const FLOAT_EPS: f64 = 1e-9;

pub fn within_tolerance(expected: f64, actual: f64, tol: f64) -> bool {
    (expected - actual).abs() <= tol + FLOAT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCheck {
    pub expected: Value,
    pub actual: Option<Value>,
    pub pass: bool,
}

/// Per-field comparison; a missing actual value fails.
pub fn match_params(expected: &ExportParams, actual: &ExportArgs) -> BTreeMap<String, ParamCheck> {
    let float = |e: f64, a: Option<f64>| ParamCheck {
        expected: json!(e),
        actual: a.map(|v| json!(v)),
        pass: a.is_some_and(|a| within_tolerance(e, a, PARAM_TOLERANCE)),
    };
    let mut out = BTreeMap::new();
    out.insert("threshold".into(), float(expected.threshold, actual.threshold));
    out.insert(
        "mirror_y".into(),
        ParamCheck {
            expected: json!(expected.mirror_y),
            actual: actual.mirror_y.map(|v| json!(v)),
            pass: actual.mirror_y == Some(expected.mirror_y),
        },
    );
    out.insert("scale_xy".into(), float(expected.scale_xy, actual.scale_xy));
    out.insert("scale_z".into(), float(expected.scale_z, actual.scale_z));
    out
}

pub fn all_pass(checks: &BTreeMap<String, ParamCheck>) -> bool {
    checks.values().all(|c| c.pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    High,
    Low,
}

impl Branch {
    pub fn opposite(self) -> Self {
        match self {
            Branch::High => Branch::Low,
            Branch::Low => Branch::High,
        }
    }
}

fn branch_params(expect: &ExportExpectation, branch: Branch) -> Result<ExportParams> {
    let p = match branch {
        Branch::High => expect.branch_high,
        Branch::Low => expect.branch_low,
    };
    p.ok_or_else(|| Error::ExpectationKind("conditional expectation without branches".into()))
}

/// High branch iff the objective strictly exceeds the pivot.
pub fn resolve_conditional(expect: &ExportExpectation, objective: f64) -> Result<(Branch, ExportParams)> {
    if expect.kind != ExpectKind::Conditional {
        return Err(Error::ExpectationKind(format!("expected conditional, got {:?}", expect.kind)));
    }
    let pivot = expect.pivot.ok_or(Error::MissingObjective)?;
    if !objective.is_finite() {
        return Err(Error::MissingObjective);
    }
    let branch = if objective > pivot { Branch::High } else { Branch::Low };
    Ok((branch, branch_params(expect, branch)?))
}

/// Objective the W-Cond decision should be based on: what the agent saw in
/// its last successful simulation, else the ground truth.
pub fn conditional_objective(instance: &PromptInstance, trace: &Trace, backend: &dyn ProblemBackend) -> Result<f64> {
    if let Some(v) = trace.successful_of(Tool::SimulateDesign).filter_map(ToolCall::objective).last() {
        return Ok(v);
    }
    let truth = backend.optimize(&instance.spec, &instance.params)?;
    Ok(backend.simulate(&instance.spec, &truth, &instance.params)?.objective_value)
}

/// Longest common subsequence of the plan and the successful calls.
pub fn matched_calls(expected: &[Tool], trace: &Trace) -> usize {
    let actual: Vec<Tool> = trace.successful().map(|c| c.tool).collect();
    let mut row = vec![0usize; actual.len() + 1];
    for e in expected {
        let mut diag = 0;
        for (j, a) in actual.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if e == a { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[actual.len()]
}

/// Matched calls over the larger of the plan length and the number of calls
/// made (failed calls included: a retry is an extra call).
pub fn tool_efficiency(expected: &[Tool], trace: &Trace) -> f64 {
    if trace.calls.is_empty() || expected.is_empty() {
        return 0.0;
    }
    let denom = expected.len().max(trace.calls.len());
    matched_calls(expected, trace) as f64 / denom as f64
}

/// Tools an agent may legitimately call for a style.
fn allowed_tools(style: Style) -> BTreeSet<Tool> {
    let mut set: BTreeSet<Tool> = expected_plan(style).into_iter().collect();
    if style == Style::Natural {
        // After clarification the agent may carry on with the Full chain.
        set.extend(expected_plan(Style::Full));
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureTag {
    BranchInversion,
    RenderOmission,
    ClarificationSkip,
    OverCalling,
    DistractorSelected,
    ParamMismatch,
    MissingTool,
    StyleMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub style: Style,
    pub task_completion: u8,
    pub tool_efficiency: f64,
    pub matched_calls: usize,
    pub expected_calls: usize,
    pub total_calls: usize,
    /// Duplicate successful plan tools plus failed calls.
    pub redundant_calls: usize,
    pub missing_tools: Vec<Tool>,
    pub per_param: BTreeMap<String, ParamCheck>,
    pub branch_taken: Option<Branch>,
    pub branch_inverted: bool,
    pub distractor_selected: bool,
    pub clarification_skipped: bool,
    pub abstained: bool,
    pub style_mismatch: bool,
    /// Objective that decided the W-Cond branch.
    pub objective_used: Option<f64>,
    pub reasons: Vec<String>,
    pub tags: BTreeSet<FailureTag>,
}

impl ValidationReport {
    pub fn completed(&self) -> bool {
        self.task_completion == 1
    }
}

/// Export calls whose parameters are judged: the last one for single-export
/// styles, all of them for W-Multi.
fn export_calls(trace: &Trace) -> Vec<&ToolCall> {
    trace.successful_of(Tool::ConvertDesignToStl).collect()
}

fn prefixed(prefix: &str, checks: BTreeMap<String, ParamCheck>) -> impl Iterator<Item = (String, ParamCheck)> + '_ {
    checks.into_iter().map(move |(k, v)| (format!("{prefix}{k}"), v))
}

fn mismatch_reasons(label: &str, checks: &BTreeMap<String, ParamCheck>, reasons: &mut Vec<String>) {
    for (name, c) in checks.iter().filter(|(_, c)| !c.pass) {
        let actual = c.actual.as_ref().map_or("missing".to_string(), Value::to_string);
        reasons.push(format!("param mismatch{label}: {name} expected {} got {actual}", c.expected));
    }
}

fn branch_fields_match(expected: &ExportParams, actual: &ExportArgs) -> bool {
    let c = match_params(expected, actual);
    c["threshold"].pass && c["mirror_y"].pass
}

/// Full validation of one run.
pub fn validate(instance: &PromptInstance, trace: &Trace, backend: &dyn ProblemBackend) -> Result<ValidationReport> {
    trace.validate()?;
    let style = instance.style;
    let plan = expected_plan(style);
    let mut reasons = Vec::new();

    let mut plan_counts: BTreeMap<Tool, usize> = BTreeMap::new();
    for t in &plan {
        *plan_counts.entry(*t).or_default() += 1;
    }
    let mut ok_counts: BTreeMap<Tool, usize> = BTreeMap::new();
    for c in trace.successful() {
        *ok_counts.entry(c.tool).or_default() += 1;
    }
    let failed = trace.calls.iter().filter(|c| !c.ok).count();
    let redundant = plan_counts
        .iter()
        .map(|(t, n)| ok_counts.get(t).copied().unwrap_or(0).saturating_sub(*n))
        .sum::<usize>()
        + failed;

    let missing_tools: Vec<Tool> = plan_counts
        .iter()
        .filter(|(t, n)| ok_counts.get(t).copied().unwrap_or(0) < **n)
        .map(|(t, _)| *t)
        .collect();
    for t in &missing_tools {
        reasons.push(format!("missing tool: {t}"));
    }

    let allowed = allowed_tools(style);
    let foreign: BTreeSet<Tool> = trace.calls.iter().map(|c| c.tool).filter(|t| !allowed.contains(t)).collect();
    let style_mismatch = !foreign.is_empty();
    for t in &foreign {
        reasons.push(format!("style mismatch: {t} is not part of a {style} run"));
    }

    let mut per_param = BTreeMap::new();
    let mut branch_taken = None;
    let mut branch_inverted = false;
    let mut distractor_selected = false;
    let mut clarification_skipped = false;
    let mut abstained = false;
    let mut objective_used = None;
    let mut params_ok = true;

    match style {
        Style::Full => {}
        Style::Natural => {
            let first_opt = trace.successful_of(Tool::OptimizeDesign).map(|c| c.index).next();
            let first_ask = trace.successful_of(Tool::AskHumanForClarification).map(|c| c.index).next();
            clarification_skipped = match (first_ask, first_opt) {
                (None, _) => true,
                (Some(a), Some(o)) => o < a,
                (Some(_), None) => false,
            };
            if clarification_skipped {
                reasons.push("clarification skipped: no ask_human_for_clarification before a design was produced".into());
            }
            abstained = !clarification_skipped && first_opt.is_none();
        }
        Style::WMulti => {
            let expect = expectation(instance)?;
            let [a, b] = expect
                .exports
                .ok_or_else(|| Error::ExpectationKind("multi expectation without exports".into()))?;
            let calls = export_calls(trace);
            if calls.len() != 2 {
                params_ok = false;
                reasons.push(format!("export count: expected 2 got {}", calls.len()));
            }
            for (label, exp, call) in [("A", a, calls.first()), ("B", b, calls.get(1))] {
                let actual = call.map(|c| c.export_args()).unwrap_or_default();
                let checks = match_params(&exp, &actual);
                params_ok &= all_pass(&checks);
                mismatch_reasons(&format!(" (export {label})"), &checks, &mut reasons);
                per_param.extend(prefixed(&format!("{label}."), checks));
            }
        }
        Style::WRand | Style::WDerived | Style::WDistract | Style::WCond => {
            let expect = expectation(instance)?;
            let actual = export_calls(trace).last().map(|c| c.export_args()).unwrap_or_default();
            let target = if style == Style::WCond {
                let objective = conditional_objective(instance, trace, backend)?;
                objective_used = Some(objective);
                let (branch, params) = resolve_conditional(expect, objective)?;
                let other = branch_params(expect, branch.opposite())?;
                if branch_fields_match(&params, &actual) {
                    branch_taken = Some(branch);
                } else if branch_fields_match(&other, &actual) {
                    branch_taken = Some(branch.opposite());
                    branch_inverted = true;
                    reasons.push(format!("branch inversion: took the {:?} branch", branch.opposite()).to_lowercase());
                }
                params
            } else {
                expect.fixed.ok_or_else(|| Error::ExpectationKind("missing fixed export".into()))?
            };
            let checks = match_params(&target, &actual);
            if style == Style::WDistract {
                if let Some(d) = instance.distractors {
                    let hit = |e: f64, a: Option<f64>| a.is_some_and(|a| within_tolerance(e, a, PARAM_TOLERANCE));
                    distractor_selected = (!checks["threshold"].pass && hit(d.threshold, actual.threshold))
                        || (!checks["scale_xy"].pass && hit(d.scale_xy, actual.scale_xy));
                    if distractor_selected {
                        reasons.push("distractor selected: preview values used for the export".into());
                    }
                }
            }
            params_ok = all_pass(&checks);
            mismatch_reasons("", &checks, &mut reasons);
            per_param = checks;
        }
    }

    let completed = missing_tools.is_empty() && params_ok && !clarification_skipped;
    let mut report = ValidationReport {
        style,
        task_completion: u8::from(completed),
        tool_efficiency: tool_efficiency(&plan, trace),
        matched_calls: matched_calls(&plan, trace),
        expected_calls: plan.len(),
        total_calls: trace.calls.len(),
        redundant_calls: redundant,
        missing_tools,
        per_param,
        branch_taken,
        branch_inverted,
        distractor_selected,
        clarification_skipped,
        abstained,
        style_mismatch,
        objective_used,
        reasons,
        tags: BTreeSet::new(),
    };
    report.tags = classify_failure(&report);
    Ok(report)
}

fn expectation(instance: &PromptInstance) -> Result<&ExportExpectation> {
    instance
        .export_expect
        .as_ref()
        .ok_or_else(|| Error::ExpectationKind(format!("{} instance has no export expectation", instance.style)))
}

/// Binary completion flag plus the reasons behind a failure.
pub fn task_completion(
    instance: &PromptInstance,
    trace: &Trace,
    backend: &dyn ProblemBackend,
) -> Result<(u8, Vec<String>)> {
    let r = validate(instance, trace, backend)?;
    Ok((r.task_completion, r.reasons))
}

pub fn classify_failure(report: &ValidationReport) -> BTreeSet<FailureTag> {
    let mut tags = BTreeSet::new();
    if report.branch_inverted {
        tags.insert(FailureTag::BranchInversion);
    }
    if report.distractor_selected {
        tags.insert(FailureTag::DistractorSelected);
    }
    if report.clarification_skipped {
        tags.insert(FailureTag::ClarificationSkip);
    }
    if report.redundant_calls > 0 {
        tags.insert(FailureTag::OverCalling);
    }
    if report.style_mismatch {
        tags.insert(FailureTag::StyleMismatch);
    }
    let mut other_missing = false;
    for t in &report.missing_tools {
        match (report.style, t) {
            (Style::Full, Tool::RenderDesign) => {
                tags.insert(FailureTag::RenderOmission);
            }
            (Style::Natural, Tool::AskHumanForClarification) => {}
            _ => other_missing = true,
        }
    }
    if other_missing {
        tags.insert(FailureTag::MissingTool);
    }
    let explained = report.branch_inverted || report.distractor_selected;
    if !explained && report.per_param.values().any(|c| !c.pass) {
        tags.insert(FailureTag::ParamMismatch);
    }
    tags
}
