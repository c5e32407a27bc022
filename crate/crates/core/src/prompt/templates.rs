//! Prompt text for every benchmark dimension.

use serde::{Deserialize, Serialize};

use super::{PromptInstance, Style};
use crate::backend::{ObjectiveName, ProblemId};
use crate::params::ExportParams;

/// Two decimals at most, trailing zeros trimmed, at least one decimal kept:
/// 0.40 -> "0.4", 4.0 -> "4.0", 2.47 -> "2.47".
pub fn format_number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

/// Qualitative volume-fraction band used by the Natural style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeBand {
    Lightweight,
    Moderate,
    Heavy,
}

impl VolumeBand {
    pub fn for_volfrac(volfrac: f64) -> Self {
        if volfrac < 0.3 {
            VolumeBand::Lightweight
        } else if volfrac < 0.5 {
            VolumeBand::Moderate
        } else {
            VolumeBand::Heavy
        }
    }

    pub fn phrase(self) -> &'static str {
        match self {
            VolumeBand::Lightweight => "lightweight",
            VolumeBand::Moderate => "moderate material usage",
            VolumeBand::Heavy => "high material usage",
        }
    }

    pub fn from_phrase(phrase: &str) -> Option<Self> {
        [VolumeBand::Lightweight, VolumeBand::Moderate, VolumeBand::Heavy]
            .into_iter()
            .find(|b| b.phrase() == phrase)
    }

    /// Half-open volume-fraction interval covered by the band.
    pub fn interval(self) -> (f64, f64) {
        match self {
            VolumeBand::Lightweight => (0.0, 0.3),
            VolumeBand::Moderate => (0.3, 0.5),
            VolumeBand::Heavy => (0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceRegion {
    UpperLeft,
    UpperRight,
}

impl ForceRegion {
    pub fn for_forcedist(forcedist: f64) -> Self {
        if forcedist >= 0.5 {
            ForceRegion::UpperRight
        } else {
            ForceRegion::UpperLeft
        }
    }

    pub fn phrase(self) -> &'static str {
        match self {
            ForceRegion::UpperLeft => "upper left",
            ForceRegion::UpperRight => "upper right",
        }
    }

    pub fn from_phrase(phrase: &str) -> Option<Self> {
        [ForceRegion::UpperLeft, ForceRegion::UpperRight]
            .into_iter()
            .find(|r| r.phrase() == phrase)
    }
}

struct Wording {
    subject: &'static str,
    objective_line: &'static str,
    value: &'static str,
}

fn wording(problem: ProblemId, objective: ObjectiveName) -> Wording {
    match (problem, objective) {
        (ProblemId::Beams2d, _) | (_, ObjectiveName::Compliance) => Wording {
            subject: "Design a 2D beam structure.",
            objective_line: "Minimize compliance",
            value: "compliance",
        },
        (ProblemId::Photonics2d, ObjectiveName::TotalOverlap) => Wording {
            subject: "Design a 2D photonic device.",
            objective_line: "Maximize total_overlap",
            value: "total_overlap",
        },
    }
}

fn mirror_line(mirror: bool) -> &'static str {
    if mirror {
        "Mirror the design across the y-axis for the final geometry"
    } else {
        "Do NOT mirror the design for the final geometry"
    }
}

fn threshold_line(t: f64) -> String {
    format!(
        "Thresholding: Apply a {} density threshold to convert the continuous density map into binary geometry",
        format_number(t)
    )
}

fn scale_line(s: f64) -> String {
    format!("XY Scaling: Scale the X and Y dimensions by {}", format_number(s))
}

fn extrude_line(z: f64) -> String {
    format!(
        "Extrusion: Extrude the 2D result by {} units in the Z-axis to create a 3D volume",
        format_number(z)
    )
}

const EXPORT_EXACT: &str = "Export: Save the final geometry as an STL file with these exact parameters";

fn export_block(p: &ExportParams, indent: &str) -> String {
    [
        threshold_line(p.threshold),
        format!("Mirror: {}", mirror_line(p.mirror_y)),
        scale_line(p.scale_xy),
        extrude_line(p.scale_z),
        EXPORT_EXACT.to_string(),
    ]
    .iter()
    .map(|l| format!("{indent}- {l}\n"))
    .collect()
}

fn w_header(inst: &PromptInstance, intro: &str, w: &Wording) -> String {
    let p = &inst.params;
    format!(
        "{intro}\n\n\
         1. Optimization Configuration\n   \
         - Volume Fraction: {}\n   \
         - Force Distance: {}\n   \
         - Filter Radius (rmin): {}\n   \
         - Objective: {}\n\n\
         2. Simulation\n   \
         - After optimization, simulate the design to obtain the {} value\n\n",
        format_number(p.volfrac),
        format_number(p.forcedist),
        format_number(p.rmin),
        w.objective_line,
        w.value,
    )
}

const INTRO_SINGLE: &str =
    "Execute a 2D topology optimization, simulate the result, and export the geometry as a 3D-printable STL file.";

/// Fills the style's template with the instance's numbers.
pub fn render_prompt(inst: &PromptInstance) -> String {
    let w = wording(inst.spec.problem_id, inst.spec.objective_name);
    let p = &inst.params;
    let expect = inst.export_expect.as_ref();
    match inst.style {
        Style::Full => format!(
            "{}\n\nDesign requirements:\n\
             - Use a material volume fraction of {}\n\
             - Force distance parameter: {}\n\
             - Minimum filter radius (rmin): {}\n\n\
             Optimize the structure and simulate the result to obtain the {} value.\n",
            w.subject,
            format_number(p.volfrac),
            format_number(p.forcedist),
            format_number(p.rmin),
            w.value,
        ),
        Style::Natural => format!(
            "{}\n\nDesign requirements:\n\
             - The design should be {}\n\
             - Apply a force distributed in the {} region\n\
             Optimize the structure and simulate the result to obtain the {} value.\n",
            w.subject,
            VolumeBand::for_volfrac(p.volfrac).phrase(),
            ForceRegion::for_forcedist(p.forcedist).phrase(),
            w.value,
        ),
        Style::WRand => {
            let e = expect.and_then(|e| e.fixed).expect("W-Rand carries fixed export");
            format!(
                "{}3. Post-processing & Export\n{}",
                w_header(inst, INTRO_SINGLE, &w),
                export_block(&e, "   ")
            )
        }
        Style::WDerived => format!(
            "{}3. Post-processing & Export\n   \
             The STL export parameters must be derived from the optimization inputs:\n   \
             - Thresholding: Use the volume fraction value as the density threshold\n   \
             - Mirror: Mirror the design across the y-axis only if the volume fraction is greater than 0.4\n   \
             - XY Scaling: Scale the X and Y dimensions by twice the filter radius\n   \
             - Extrusion: Extrude the 2D result in the Z-axis by the threshold value multiplied by 40\n   \
             - Export: Save the final geometry as an STL file with these derived parameters\n",
            w_header(inst, INTRO_SINGLE, &w)
        ),
        Style::WDistract => {
            let e = expect.and_then(|e| e.fixed).expect("W-Distract carries fixed export");
            let d = inst.distractors.expect("W-Distract carries preview values");
            let lines = [
                format!("Threshold the density field at {} to preview the design topology", format_number(d.threshold)),
                format!("Apply a {} density threshold to produce the final solid/void geometry", format_number(e.threshold)),
                format!("Scale the preview display by {}x in XY for quick inspection", format_number(d.scale_xy)),
                format!("Scale the X and Y dimensions of the part by {} for manufacturing", format_number(e.scale_xy)),
                mirror_line(e.mirror_y).to_string(),
                format!("Extrude the 2D result by {} units in the Z-axis to create a 3D volume", format_number(e.scale_z)),
                EXPORT_EXACT.to_string(),
            ];
            let body: String = lines.iter().map(|l| format!("   - {l}\n")).collect();
            format!("{}3. Post-processing & Export\n{body}", w_header(inst, INTRO_SINGLE, &w))
        }
        Style::WCond => {
            let e = expect.expect("W-Cond carries a conditional expectation");
            let (hi, lo) = (e.branch_high.expect("high branch"), e.branch_low.expect("low branch"));
            let pivot = format_number(e.pivot.expect("pivot"));
            let intro = "Execute a 2D topology optimization, simulate the result, then export the geometry as a 3D-printable STL file with parameters that depend on the simulation outcome.";
            format!(
                "{}3. Post-processing & Export (conditional on {v})\n   \
                 - If {v} > {pivot}:\n     \
                 - {}\n     \
                 - Mirror: {}\n   \
                 - If {v} <= {pivot}:\n     \
                 - {}\n     \
                 - Mirror: {}\n   \
                 - In both cases:\n     \
                 - {}\n     \
                 - {}\n   \
                 - {EXPORT_EXACT}\n",
                w_header(inst, intro, &w),
                threshold_line(hi.threshold),
                mirror_line(hi.mirror_y),
                threshold_line(lo.threshold),
                mirror_line(lo.mirror_y),
                scale_line(hi.scale_xy),
                extrude_line(hi.scale_z),
                v = w.value,
            )
        }
        Style::WMulti => {
            let [a, b] = expect.and_then(|e| e.exports).expect("W-Multi carries two exports");
            let intro = "Execute a 2D topology optimization, simulate the result, and export the geometry as TWO separate 3D-printable STL files with different parameters.";
            format!(
                "{}3. Post-processing & Export\n\n   Export A:\n{}\n   Export B:\n{}",
                w_header(inst, intro, &w),
                export_block(&a, "   "),
                export_block(&b, "   "),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HpcPromptStyle {
    Explicit,
    Natural,
}

/// One training-orchestration prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpcPrompt {
    pub style: HpcPromptStyle,
    pub seed: u64,
    pub algorithm: String,
    pub problem_id: ProblemId,
    pub epochs: u32,
}

impl HpcPrompt {
    pub fn cgan(style: HpcPromptStyle, seed: u64) -> Self {
        Self {
            style,
            seed,
            algorithm: "cgan_cnn_2d".into(),
            problem_id: ProblemId::Beams2d,
            epochs: 100,
        }
    }
}

pub fn hpc_prompt_text(p: &HpcPrompt) -> String {
    match p.style {
        HpcPromptStyle::Explicit => format!(
            "Train a cGAN CNN 2D generative model for the Beams2D topology optimization problem on the Euler HPC cluster, then evaluate it against the dataset baseline using the standard EngiOpt evaluation script.\n\n\
             Step 1: Generate Training Script\n   \
             - Use the generate_training_command tool with:\n     \
             algorithm: {alg}\n     \
             problem_id: {prob}\n     \
             epochs: {epochs}\n     \
             seed: {seed}\n\n\
             Step 2: Submit to HPC\n   \
             - Submit the generated SLURM script to the Euler cluster\n\n\
             Step 3: Monitor Training\n   \
             - Monitor the job until it completes\n   \
             - Use check_interval=30 and max_checks=200 for the monitoring\n\n\
             Step 4: Evaluate Trained Model\n   \
             - Use the evaluate_model tool to evaluate the trained model\n     \
             against the dataset baseline:\n     \
             problem_id: {prob}\n     \
             algorithm: {alg}\n     \
             seed: {seed}\n     \
             n_samples: 50\n   \
             - This downloads the model from WandB, generates designs, and\n     \
             computes metrics (IOG, COG, FOG, MMD, DPP, violation rate)\n   \
             - Report the evaluation metrics from the output\n\n\
             Complete all steps in order. Do not ask for clarification.\n",
            alg = p.algorithm,
            prob = p.problem_id,
            epochs = p.epochs,
            seed = p.seed,
        ),
        HpcPromptStyle::Natural => format!(
            "Train a cGAN CNN 2D model for the Beams2D topology optimization problem on the Euler HPC cluster with seed {} and {} epochs. Use the available tools to generate the SLURM training script -- do not write or modify any scripts manually. Submit the job and wait for it to finish. Then use the model evaluation tool to evaluate the trained model against the dataset -- it will download the model from WandB automatically. Report the metrics.\n\n\
             Do not ask for clarification.\n",
            p.seed, p.epochs,
        ),
    }
}

/// Fixed retrieval prompts, indexed 0..=3.
pub fn rag_prompt_text(index: usize) -> Option<&'static str> {
    const P0: &str = "The EngiBench paper documents the default design conditions for the Beams2D problem in its API walkthrough.\n\n\
Search the paper to find the default volume fraction (volfrac) listed for the Beams2D problem. Then generate a 2D beam design using exactly that volume fraction. Use default values for all other parameters (do NOT ask for clarification -- proceed directly with defaults).\n";
    const P1: &str = "In the EngiBench paper's Section 3.1 API walkthrough, a code example runs a Beams2D optimization using non-default design conditions. Search the paper to find both the volume fraction and force distance from that example, then generate a 2D beam design with those exact values. Use default values for all other parameters and do not ask for clarification.\n";
    const P2: &str = "The SOPTX paper by He et al. (2025) benchmarks its topology optimization framework on a 2D cantilever beam problem.\n\n\
Search the paper to find both the volume fraction (volfrac) and the filter radius (rmin) used for that 2D cantilever benchmark. Then generate a 2D beam design using exactly those values. Use default values for all other parameters and do not ask for clarification.\n";
    const P3: &str = "Generate a 2D beam design combining parameters from multiple sources:\n\n\
1. Use the volume fraction and force distance from the EngiBench paper's API walkthrough example (the non-default values shown in the code snippet).\n\
2. Use the filter radius from the SOPTX paper by He et al. (2025) for their 2D cantilever beam benchmark.\n\n\
Search the relevant papers to find each value, then generate a 2D beam design using exactly those three parameters. Use default values for all other parameters and do not ask for clarification.\n";
    [P0, P1, P2, P3].get(index).copied()
}
