//! Matrix runner, aggregation and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backend::{ProblemBackend, ProblemId};
use crate::oracle::{run_oracle_with, OracleKind, OracleOptions};
use crate::prompt::{sample_instance_with, PromptInstance, Style};
use crate::scoring::{score_run, ScoreReport, ScoringWeights};
use crate::trace::{Tool, Trace};
use crate::validate::{validate, ValidationReport};
use crate::{Error, Result};

/// An oracle by name, or a directory of recorded traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentSpec {
    Oracle(OracleKind),
    Traces { name: String, dir: PathBuf },
}

impl AgentSpec {
    pub fn label(&self) -> String {
        match self {
            AgentSpec::Oracle(k) => k.to_string(),
            AgentSpec::Traces { name, .. } => name.clone(),
        }
    }

    /// `perfect`, or `name=dir` for a trace directory.
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((name, dir)) if !name.is_empty() && !dir.is_empty() => {
                Ok(AgentSpec::Traces { name: name.to_string(), dir: PathBuf::from(dir) })
            }
            _ => {
                let kind: OracleKind = s.parse()?;
                if kind.is_hpc() {
                    return Err(Error::Config(format!("{kind} is an HPC oracle, not a workflow agent")));
                }
                Ok(AgentSpec::Oracle(kind))
            }
        }
    }
}

/// File name of a recorded trace for one cell.
pub fn trace_file_name(style: Style, seed: u64, sample: u32) -> String {
    format!("{}__seed{seed}__sample{sample}.trace.jsonl", style.name())
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_samples() -> u32 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem_id: ProblemId,
    pub styles: Vec<Style>,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_samples")]
    pub samples: u32,
    #[serde(default)]
    pub weights: ScoringWeights,
    #[serde(default)]
    pub oracle: OracleOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem_id: ProblemId, styles: Vec<Style>, agents: Vec<AgentSpec>) -> Self {
        Self {
            problem_id,
            styles,
            agents,
            seeds: default_seeds(),
            samples: default_samples(),
            weights: ScoringWeights::default(),
            oracle: OracleOptions::default(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.styles.is_empty() {
            return Err(Error::Config("no styles selected".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("no agents selected".into()));
        }
        if self.seeds.is_empty() || self.samples == 0 {
            return Err(Error::Config("need at least one seed and one sample".into()));
        }
        if let Some(k) = self.agents.iter().find_map(|a| match a {
            AgentSpec::Oracle(k) if k.is_hpc() => Some(k),
            _ => None,
        }) {
            return Err(Error::Config(format!("{k} is an HPC oracle, not a workflow agent")));
        }
        self.weights.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Validation and scores of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub validation: ValidationReport,
    pub score: ScoreReport,
}

pub fn evaluate_run(
    instance: &PromptInstance,
    trace: &Trace,
    backend: &dyn ProblemBackend,
    weights: &ScoringWeights,
) -> Result<RunOutcome> {
    let validation = validate(instance, trace, backend)?;
    let score = score_run(instance, trace, &validation, backend, weights)?;
    Ok(RunOutcome { validation, score })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub style: Style,
    pub agent: String,
    pub seed: u64,
    pub sample: u32,
    /// Successful calls per tool.
    pub tool_counts: BTreeMap<Tool, usize>,
    pub validation: ValidationReport,
    pub score: ScoreReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Columns in table order: (key, header).
pub const COLUMNS: [(&str, &str); 10] = [
    ("iou", "IoU"),
    ("pixel_accuracy", "PA"),
    ("objective_score", "Obj"),
    ("constraint_score", "Constr"),
    ("connectivity", "Conn"),
    ("watertight", "WT"),
    ("tool_efficiency", "Tool Eff."),
    ("task_completion", "TC"),
    ("design_quality", "DQ"),
    ("combined_overall", "CO"),
];

fn column_value(s: &ScoreReport, key: &str) -> f64 {
    match key {
        "iou" => s.iou,
        "pixel_accuracy" => s.pixel_accuracy,
        "objective_score" => s.objective_score,
        "constraint_score" => s.constraint_score,
        "connectivity" => s.connectivity,
        "watertight" => s.watertight,
        "tool_efficiency" => s.tool_efficiency,
        "task_completion" => s.task_completion,
        "design_quality" => s.design_quality,
        "combined_overall" => s.combined_overall,
        other => unreachable!("unknown column {other}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub style: Style,
    pub agent: String,
    pub n: usize,
    /// Keyed by the column keys of [`COLUMNS`].
    pub stats: BTreeMap<String, Stat>,
    pub mean_tool_calls: f64,
    /// Mean successful calls per tool.
    pub mean_calls_per_tool: BTreeMap<Tool, f64>,
}

impl AggregateRow {
    pub fn stat(&self, key: &str) -> Stat {
        self.stats[key]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub problem_id: ProblemId,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn row(&self, style: Style, agent: &str) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.style == style && r.agent == agent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub config: RunConfig,
    pub runs: Vec<RunRecord>,
    pub table: AggregateTable,
}

struct Cell<'a> {
    style: Style,
    agent: &'a AgentSpec,
    seed: u64,
    sample: u32,
}

fn obtain_trace(config: &RunConfig, cell: &Cell<'_>, instance: &PromptInstance, backend: &dyn ProblemBackend) -> Result<Trace> {
    match cell.agent {
        AgentSpec::Oracle(kind) => run_oracle_with(*kind, instance, backend, &config.oracle),
        AgentSpec::Traces { dir, .. } => {
            let path = dir.join(trace_file_name(cell.style, cell.seed, cell.sample));
            if !path.is_file() {
                return Err(Error::MissingArtifact(path.display().to_string()));
            }
            Trace::read(&path)
        }
    }
}

/// Runs every applicable (style, agent, seed, sample) cell; output order is
/// fixed by the config regardless of thread count.
pub fn run_matrix(config: &RunConfig, backend: &dyn ProblemBackend) -> Result<MatrixResult> {
    config.validate()?;
    let mut cells = Vec::new();
    for &style in &config.styles {
        for agent in &config.agents {
            if let AgentSpec::Oracle(k) = agent {
                if !k.applies_to(style) {
                    continue;
                }
            }
            for &seed in &config.seeds {
                for sample in 0..config.samples {
                    cells.push(Cell { style, agent, seed, sample });
                }
            }
        }
    }

    let runs = cells
        .par_iter()
        .map(|cell| {
            let instance = sample_instance_with(backend, cell.style, config.problem_id, cell.seed, cell.sample)?;
            let trace = obtain_trace(config, cell, &instance, backend)?;
            let outcome = evaluate_run(&instance, &trace, backend, &config.weights)?;
            let mut tool_counts = BTreeMap::new();
            for c in trace.successful() {
                *tool_counts.entry(c.tool).or_insert(0) += 1;
            }
            Ok(RunRecord {
                style: cell.style,
                agent: cell.agent.label(),
                seed: cell.seed,
                sample: cell.sample,
                tool_counts,
                validation: outcome.validation,
                score: outcome.score,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let table = aggregate(config.problem_id, &runs);
    Ok(MatrixResult { config: config.clone(), runs, table })
}

/// Groups runs by (style, agent) in first-appearance order.
pub fn aggregate(problem_id: ProblemId, runs: &[RunRecord]) -> AggregateTable {
    let mut order: Vec<(Style, String)> = Vec::new();
    let mut groups: BTreeMap<(Style, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        let key = (r.style, r.agent.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    let rows = order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let n = group.len();
            let stats = COLUMNS
                .iter()
                .map(|(k, _)| {
                    let vals: Vec<f64> = group.iter().map(|r| column_value(&r.score, k)).collect();
                    (k.to_string(), Stat::of(&vals))
                })
                .collect();
            let calls: Vec<f64> = group.iter().map(|r| r.score.tool_calls as f64).collect();
            let mut per_tool = BTreeMap::new();
            for tool in Tool::ALL {
                let total: usize = group.iter().map(|r| r.tool_counts.get(&tool).copied().unwrap_or(0)).sum();
                if total > 0 {
                    per_tool.insert(tool, total as f64 / n as f64);
                }
            }
            AggregateRow {
                style: key.0,
                agent: key.1,
                n,
                stats,
                mean_tool_calls: Stat::of(&calls).mean,
                mean_calls_per_tool: per_tool,
            }
        })
        .collect();
    AggregateTable { problem_id, rows }
}

pub fn table_csv(table: &AggregateTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["style".to_string(), "agent".to_string(), "n".to_string()];
    for (k, _) in COLUMNS {
        header.push(format!("{k}_mean"));
        header.push(format!("{k}_std"));
    }
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![row.style.to_string(), row.agent.clone(), row.n.to_string()];
        for (k, _) in COLUMNS {
            let s = row.stat(k);
            rec.push(format!("{:.6}", s.mean));
            rec.push(format!("{:.6}", s.std));
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Two-decimal `mean ± std` table.
pub fn table_markdown(table: &AggregateTable) -> String {
    let mut out = String::new();
    let headers: Vec<&str> = COLUMNS.iter().map(|(_, h)| *h).collect();
    let _ = writeln!(out, "| Style | Agent | n | {} |", headers.join(" | "));
    let _ = writeln!(out, "|---|---|---:|{}", "---:|".repeat(COLUMNS.len()));
    for row in &table.rows {
        let cells: Vec<String> = COLUMNS
            .iter()
            .map(|(k, _)| {
                let s = row.stat(k);
                format!("{:.2} ± {:.2}", s.mean, s.std)
            })
            .collect();
        let _ = writeln!(out, "| {} | {} | {} | {} |", row.style, row.agent, row.n, cells.join(" | "));
    }
    out
}

fn heatmap_json(table: &AggregateTable) -> serde_json::Value {
    let rows: Vec<_> = table
        .rows
        .iter()
        .map(|r| json!({"style": r.style, "agent": r.agent, "n": r.n, "mean_calls": r.mean_calls_per_tool}))
        .collect();
    json!({"problem_id": table.problem_id, "tools": Tool::ALL, "rows": rows})
}

fn tool_count_json(result: &MatrixResult) -> serde_json::Value {
    let runs: Vec<_> = result
        .runs
        .iter()
        .map(|r| {
            json!({
                "style": r.style,
                "agent": r.agent,
                "seed": r.seed,
                "sample": r.sample,
                "tool_calls": r.score.tool_calls,
                "combined_overall": r.score.combined_overall,
                "design_quality": r.score.design_quality,
            })
        })
        .collect();
    let cells: Vec<_> = result
        .table
        .rows
        .iter()
        .map(|r| {
            json!({
                "style": r.style,
                "agent": r.agent,
                "mean_tool_calls": r.mean_tool_calls,
                "combined_overall": r.stat("combined_overall").mean,
                "design_quality": r.stat("design_quality").mean,
            })
        })
        .collect();
    json!({"runs": runs, "cells": cells})
}

fn metadata_json(result: &MatrixResult) -> serde_json::Value {
    let n: Vec<_> = result.table.rows.iter().map(|r| json!({"style": r.style, "agent": r.agent, "n": r.n})).collect();
    json!({
        "engine": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        "std_estimator": "population (divide by n)",
        "markdown_precision": 2,
        "config": result.config,
        "cells": n,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes runs, tables and plot data into `dir`, returning the paths written.
pub fn emit_reports(result: &MatrixResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut runs = String::new();
    for r in &result.runs {
        runs.push_str(&serde_json::to_string(r)?);
        runs.push('\n');
    }
    Ok(vec![
        write_file(dir, "runs.jsonl", &runs)?,
        write_file(dir, "table.csv", &table_csv(&result.table)?)?,
        write_file(dir, "table.md", &table_markdown(&result.table))?,
        write_file(dir, "aggregate.json", &pretty(&result.table)?)?,
        write_file(dir, "heatmap.json", &pretty(&heatmap_json(&result.table))?)?,
        write_file(dir, "tool_counts.json", &pretty(&tool_count_json(result))?)?,
        write_file(dir, "metadata.json", &pretty(&metadata_json(result))?)?,
    ])
}
