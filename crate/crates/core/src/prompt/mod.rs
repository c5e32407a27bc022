//! Benchmark cell generation: the seven workflow prompt styles, their
//! seeded export parameters, and the expectations used for validation.

mod templates;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{ProblemBackend, ProblemId, ProblemSpec, SyntheticBackend};
use crate::error::{Error, Result};
use crate::params::{DesignParams, ExportParams};
use crate::rng::{hash_label, round_to, SplitMix64};
use crate::trace::Tool;

pub use templates::{
    format_number, hpc_prompt_text, rag_prompt_text, render_prompt, ForceRegion, HpcPrompt,
    HpcPromptStyle, VolumeBand,
};

/// Inclusive sampling ranges for export parameters.
pub const THRESHOLD_RANGE: (f64, f64) = (0.30, 0.70);
pub const SCALE_XY_RANGE: (f64, f64) = (0.5, 4.0);
pub const SCALE_Z_RANGE: (f64, f64) = (5.0, 25.0);
/// Dataset-sample ranges for the optimization inputs.
pub const VOLFRAC_RANGE: (f64, f64) = (0.15, 0.55);
pub const FORCEDIST_RANGE: (f64, f64) = (0.0, 1.0);
pub const RMIN_RANGE: (f64, f64) = (1.5, 4.0);
/// Half-width of the relative offset placing the conditional pivot around
/// the ground-truth objective.
pub const PIVOT_SPREAD: f64 = 0.10;
/// Minimum gap between values that must be told apart by the validator.
const MIN_SEPARATION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Style {
    Full,
    Natural,
    #[serde(rename = "W-Rand")]
    WRand,
    #[serde(rename = "W-Derived")]
    WDerived,
    #[serde(rename = "W-Distract")]
    WDistract,
    #[serde(rename = "W-Cond")]
    WCond,
    #[serde(rename = "W-Multi")]
    WMulti,
}

impl Style {
    pub const ALL: [Style; 7] = [
        Style::Full,
        Style::Natural,
        Style::WRand,
        Style::WDerived,
        Style::WDistract,
        Style::WCond,
        Style::WMulti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Style::Full => "Full",
            Style::Natural => "Natural",
            Style::WRand => "W-Rand",
            Style::WDerived => "W-Derived",
            Style::WDistract => "W-Distract",
            Style::WCond => "W-Cond",
            Style::WMulti => "W-Multi",
        }
    }

    /// Styles that end in an STL export.
    pub fn exports_stl(self) -> bool {
        !matches!(self, Style::Full | Style::Natural)
    }

    fn ordinal(self) -> u64 {
        Style::ALL.iter().position(|s| *s == self).unwrap_or_default() as u64
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        Style::ALL
            .into_iter()
            .find(|st| st.name().replace('-', "").to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::Unknown { kind: "style", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectKind {
    Fixed,
    Derived,
    Conditional,
    Multi,
}

/// What a correct export looks like for one W-style cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExportExpectation {
    pub kind: ExpectKind,
    /// Expected export for `fixed`, and the evaluated rules for `derived`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<ExportParams>,
    /// Objective threshold for `conditional`, in problem units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_high: Option<ExportParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_low: Option<ExportParams>,
    /// Export A then Export B for `multi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exports: Option<[ExportParams; 2]>,
}

impl ExportExpectation {
    pub fn fixed(params: ExportParams) -> Self {
        Self { kind: ExpectKind::Fixed, fixed: Some(params), ..Self::empty(ExpectKind::Fixed) }
    }

    pub fn derived(params: ExportParams) -> Self {
        Self { fixed: Some(params), ..Self::empty(ExpectKind::Derived) }
    }

    pub fn conditional(pivot: f64, high: ExportParams, low: ExportParams) -> Self {
        Self {
            pivot: Some(pivot),
            branch_high: Some(high),
            branch_low: Some(low),
            ..Self::empty(ExpectKind::Conditional)
        }
    }

    pub fn multi(a: ExportParams, b: ExportParams) -> Self {
        Self { exports: Some([a, b]), ..Self::empty(ExpectKind::Multi) }
    }

    fn empty(kind: ExpectKind) -> Self {
        Self { kind, fixed: None, pivot: None, branch_high: None, branch_low: None, exports: None }
    }

    /// Exactly the fields required by `kind` are present.
    pub fn validate(&self) -> Result<()> {
        let present = (
            self.fixed.is_some(),
            self.pivot.is_some() && self.branch_high.is_some() && self.branch_low.is_some(),
            self.pivot.is_some() || self.branch_high.is_some() || self.branch_low.is_some(),
            self.exports.is_some(),
        );
        let ok = match self.kind {
            ExpectKind::Fixed | ExpectKind::Derived => present == (true, false, false, false),
            ExpectKind::Conditional => present == (false, true, true, false),
            ExpectKind::Multi => present == (false, false, false, true),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ExpectationKind(format!("fields inconsistent with kind {:?}", self.kind)))
        }
    }
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub style: Style,
    pub spec: ProblemSpec,
    pub params: DesignParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_expect: Option<ExportExpectation>,
    /// Preview-only values shown alongside the real export in W-Distract.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distractors: Option<ExportParams>,
    pub seed: u64,
    pub sample: u32,
    pub prompt_text: String,
}

impl PromptInstance {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.params.validate()?;
        match (self.style.exports_stl(), &self.export_expect) {
            (true, Some(e)) => e.validate(),
            (false, None) => Ok(()),
            (true, None) => Err(Error::ExpectationKind(format!("{} needs an export expectation", self.style))),
            (false, Some(_)) => Err(Error::ExpectationKind(format!("{} takes no export expectation", self.style))),
        }
    }
}

/// Backend seed of a (benchmark seed, dataset sample) cell.
pub fn backend_seed(seed: u64, sample: u32) -> u64 {
    seed * 1000 + u64::from(sample)
}

/// Optimization inputs for a cell; shared by all styles so only the export
/// instructions differ between them.
pub fn dataset_params(problem_id: ProblemId, seed: u64, sample: u32) -> DesignParams {
    let mut rng = SplitMix64::from_words(&[
        hash_label("dataset"),
        hash_label(problem_id.name()),
        seed,
        u64::from(sample),
    ]);
    DesignParams {
        volfrac: rng.rounded(VOLFRAC_RANGE.0, VOLFRAC_RANGE.1, 2),
        forcedist: rng.rounded(FORCEDIST_RANGE.0, FORCEDIST_RANGE.1, 2),
        rmin: rng.rounded(RMIN_RANGE.0, RMIN_RANGE.1, 1),
        seed: backend_seed(seed, sample),
    }
}

fn draw_threshold(rng: &mut SplitMix64) -> f64 {
    rng.rounded(THRESHOLD_RANGE.0, THRESHOLD_RANGE.1, 2)
}

fn draw_scale_xy(rng: &mut SplitMix64) -> f64 {
    rng.rounded(SCALE_XY_RANGE.0, SCALE_XY_RANGE.1, 2)
}

fn draw_export(rng: &mut SplitMix64) -> ExportParams {
    ExportParams {
        threshold: draw_threshold(rng),
        mirror_y: rng.coin(),
        scale_xy: draw_scale_xy(rng),
        scale_z: rng.rounded(SCALE_Z_RANGE.0, SCALE_Z_RANGE.1, 1),
    }
}

/// Redraws until the value is at least `MIN_SEPARATION` away from `other`.
fn draw_apart(rng: &mut SplitMix64, other: f64, draw: fn(&mut SplitMix64) -> f64) -> f64 {
    loop {
        let v = draw(rng);
        if (v - other).abs() >= MIN_SEPARATION {
            return v;
        }
    }
}

/// Export parameters implied by the W-Derived rules.
pub fn derived_export(params: &DesignParams) -> ExportParams {
    let threshold = params.volfrac;
    ExportParams {
        threshold,
        mirror_y: params.volfrac > 0.4,
        scale_xy: 2.0 * params.rmin,
        scale_z: threshold * 40.0,
    }
}

pub fn sample_instance(style: Style, problem_id: ProblemId, seed: u64, sample: u32) -> Result<PromptInstance> {
    sample_instance_with(&SyntheticBackend, style, problem_id, seed, sample)
}

/// Deterministic cell generation; the backend supplies the ground-truth
/// objective that the W-Cond pivot is placed around.
pub fn sample_instance_with(
    backend: &dyn ProblemBackend,
    style: Style,
    problem_id: ProblemId,
    seed: u64,
    sample: u32,
) -> Result<PromptInstance> {
    let spec = ProblemSpec::for_problem(problem_id);
    let params = dataset_params(problem_id, seed, sample);
    let mut rng = SplitMix64::from_words(&[
        hash_label("export"),
        hash_label(problem_id.name()),
        style.ordinal(),
        seed,
        u64::from(sample),
    ]);

    let mut distractors = None;
    let export_expect = match style {
        Style::Full | Style::Natural => None,
        Style::WRand => Some(ExportExpectation::fixed(draw_export(&mut rng))),
        Style::WDerived => Some(ExportExpectation::derived(derived_export(&params))),
        Style::WDistract => {
            let real = draw_export(&mut rng);
            distractors = Some(ExportParams {
                threshold: draw_apart(&mut rng, real.threshold, draw_threshold),
                scale_xy: draw_apart(&mut rng, real.scale_xy, draw_scale_xy),
                ..real
            });
            Some(ExportExpectation::fixed(real))
        }
        Style::WCond => {
            let high = draw_export(&mut rng);
            let low = ExportParams {
                threshold: draw_apart(&mut rng, high.threshold, draw_threshold),
                mirror_y: !high.mirror_y,
                ..high
            };
            let truth = backend.optimize(&spec, &params)?;
            let objective = backend.simulate(&spec, &truth, &params)?.objective_value;
            let offset = rng.uniform(-PIVOT_SPREAD, PIVOT_SPREAD);
            let pivot = round_to(objective * (1.0 + offset), 1);
            Some(ExportExpectation::conditional(pivot, high, low))
        }
        Style::WMulti => {
            let a = draw_export(&mut rng);
            let mut b = draw_export(&mut rng);
            b.threshold = draw_apart(&mut rng, a.threshold, draw_threshold);
            Some(ExportExpectation::multi(a, b))
        }
    };

    let mut instance = PromptInstance {
        style,
        spec,
        params,
        export_expect,
        distractors,
        seed,
        sample,
        prompt_text: String::new(),
    };
    instance.prompt_text = render_prompt(&instance);
    Ok(instance)
}

/// Canonical tool sequence for a style.
pub fn expected_plan(style: Style) -> Vec<Tool> {
    let chain = [Tool::CreateProblem, Tool::OptimizeDesign, Tool::SimulateDesign];
    match style {
        Style::Full => [&chain[..], &[Tool::RenderDesign]].concat(),
        Style::Natural => vec![Tool::AskHumanForClarification],
        Style::WMulti => [&chain[..], &[Tool::ConvertDesignToStl, Tool::ConvertDesignToStl]].concat(),
        _ => [&chain[..], &[Tool::ConvertDesignToStl]].concat(),
    }
}
