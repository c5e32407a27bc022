//! Synthetic problem backend.
//!
//! Stands in for the FEA / FDTD problem suite: a deterministic map from
//! [`DesignParams`] to a density field and from a field to an objective
//! value. The real optimizers plug in through [`ProblemBackend`].

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DesignGrid;
use crate::params::DesignParams;
use crate::rng::{hash_label, hash_words, unit_fraction, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Beams2d,
    Photonics2d,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Beams2d => "beams2d",
            ProblemId::Photonics2d => "photonics2d",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beams2d" => Ok(ProblemId::Beams2d),
            "photonics2d" => Ok(ProblemId::Photonics2d),
            _ => Err(Error::Unknown { kind: "problem", value: s.into() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Compliance,
    TotalOverlap,
}

impl ObjectiveName {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveName::Compliance => "compliance",
            ObjectiveName::TotalOverlap => "total_overlap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub problem_id: ProblemId,
    pub rows: usize,
    pub cols: usize,
    pub objective_name: ObjectiveName,
    pub objective_sense: Sense,
}

impl ProblemSpec {
    pub fn for_problem(problem_id: ProblemId) -> Self {
        match problem_id {
            ProblemId::Beams2d => Self {
                problem_id,
                rows: 50,
                cols: 100,
                objective_name: ObjectiveName::Compliance,
                objective_sense: Sense::Minimize,
            },
            ProblemId::Photonics2d => Self {
                problem_id,
                rows: 120,
                cols: 120,
                objective_name: ObjectiveName::TotalOverlap,
                objective_sense: Sense::Maximize,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fixed = Self::for_problem(self.problem_id);
        if (self.rows, self.cols) != (fixed.rows, fixed.cols) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} for {}", fixed.rows, fixed.cols, self.problem_id),
                actual: format!("{}x{}", self.rows, self.cols),
            });
        }
        Ok(())
    }

    fn check_grid(&self, grid: &DesignGrid) -> Result<()> {
        if grid.rows() != self.rows || grid.cols() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                actual: format!("{}x{}", grid.rows(), grid.cols()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub objective_value: f64,
    pub achieved_volfrac: f64,
}

/// A problem suite that can optimize and simulate designs.
pub trait ProblemBackend: Send + Sync {
    fn optimize(&self, spec: &ProblemSpec, params: &DesignParams) -> Result<DesignGrid>;

    fn simulate(
        &self,
        spec: &ProblemSpec,
        grid: &DesignGrid,
        params: &DesignParams,
    ) -> Result<SimulationResult>;
}

/// Deterministic reference backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticBackend;

const MODES: usize = 8;
/// Spatial frequency range of the field modes, in cycles per domain.
const FREQ: (f64, f64) = (0.2, 1.0);
const RAMP_WIDTH: f64 = 0.15;
const RAMP_GAIN: f64 = 2.0;
const CONTRAST: f64 = 0.35;
const BASE_OBJECTIVE: f64 = 100.0;

impl ProblemBackend for SyntheticBackend {
    fn optimize(&self, spec: &ProblemSpec, params: &DesignParams) -> Result<DesignGrid> {
        synth_optimize(spec, params)
    }

    fn simulate(
        &self,
        spec: &ProblemSpec,
        grid: &DesignGrid,
        params: &DesignParams,
    ) -> Result<SimulationResult> {
        synth_simulate(spec, grid, params)
    }
}

/// Smooth seeded field, shifted by a load-position ramp, filtered with
/// radius `rmin`, then level-shifted so its mean equals `volfrac`.
pub fn synth_optimize(spec: &ProblemSpec, params: &DesignParams) -> Result<DesignGrid> {
    spec.validate()?;
    params.validate()?;
    let (rows, cols) = (spec.rows, spec.cols);

    let mut rng = SplitMix64::from_words(&[hash_label(spec.problem_id.name()), params.seed]);
    let modes: Vec<[f64; 4]> = (0..MODES)
        .map(|_| {
            let fx = rng.uniform(FREQ.0, FREQ.1) * if rng.coin() { 1.0 } else { -1.0 };
            let fy = rng.uniform(FREQ.0, FREQ.1);
            let phase = rng.uniform(0.0, TAU);
            let amp = rng.uniform(0.5, 1.0);
            [fx, fy, phase, amp]
        })
        .collect();

    let mut base = vec![0.0; rows * cols];
    for r in 0..rows {
        let y = (r as f64 + 0.5) / rows as f64;
        for c in 0..cols {
            let x = (c as f64 + 0.5) / cols as f64;
            base[r * cols + c] = modes
                .iter()
                .map(|[fx, fy, phase, amp]| amp * (TAU * (fx * x + fy * y) + phase).cos())
                .sum();
        }
    }
    standardize(&mut base);

    for r in 0..rows {
        for c in 0..cols {
            let x = (c as f64 + 0.5) / cols as f64;
            let d = x - params.forcedist;
            base[r * cols + c] += RAMP_GAIN * (-d * d / (2.0 * RAMP_WIDTH * RAMP_WIDTH)).exp();
        }
    }

    let mut field = box_filter(&base, rows, cols, params.rmin);
    standardize(&mut field);
    let cells = shift_to_mean(&field, params.volfrac);
    DesignGrid::new(rows, cols, cells)
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

/// Per-axis weights of a box of half-width `radius`; the outermost tap
/// gets a fractional weight so the filter is continuous in `radius`.
fn box_taps(radius: f64) -> Vec<f64> {
    let reach = (radius + 0.5).floor() as usize;
    let mut taps: Vec<f64> = (0..=reach)
        .map(|d| (radius + 0.5 - d as f64).clamp(0.0, 1.0))
        .collect();
    while taps.len() > 1 && taps.last() == Some(&0.0) {
        taps.pop();
    }
    taps
}

fn box_filter(src: &[f64], rows: usize, cols: usize, radius: f64) -> Vec<f64> {
    let taps = box_taps(radius);
    let reach = taps.len() as isize - 1;
    let pass = |src: &[f64], along_cols: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for r in 0..rows {
            for c in 0..cols {
                let (mut acc, mut norm) = (0.0, 0.0);
                for d in -reach..=reach {
                    let (rr, cc) = if along_cols {
                        (r as isize, c as isize + d)
                    } else {
                        (r as isize + d, c as isize)
                    };
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    let w = taps[d.unsigned_abs()];
                    acc += w * src[rr as usize * cols + cc as usize];
                    norm += w;
                }
                out[r * cols + c] = acc / norm;
            }
        }
        out
    };
    let horizontal = pass(src, true);
    pass(&horizontal, false)
}

fn shifted_mean(field: &[f64], shift: f64) -> f64 {
    field
        .iter()
        .map(|z| (0.5 + CONTRAST * z + shift).clamp(0.0, 1.0))
        .sum::<f64>()
        / field.len() as f64
}

fn shift_to_mean(field: &[f64], target: f64) -> Vec<f64> {
    let (mut lo, mut hi) = (-20.0_f64, 20.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shifted_mean(field, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let shift = 0.5 * (lo + hi);
    field
        .iter()
        .map(|z| (0.5 + CONTRAST * z + shift).clamp(0.0, 1.0))
        .collect()
}

/// Hash-derived fraction in [0, 1) perturbing the objective per (seed, problem).
pub fn objective_jitter(seed: u64, problem_id: ProblemId) -> f64 {
    unit_fraction(hash_words(&[seed, hash_label(problem_id.name())]))
}

/// `C0 / mean * (1 + 0.5 forcedist) * (1 + 0.1 u)`.
pub fn surrogate_objective(mean_density: f64, forcedist: f64, jitter: f64) -> f64 {
    BASE_OBJECTIVE / mean_density * (1.0 + 0.5 * forcedist) * (1.0 + 0.1 * jitter)
}

pub fn synth_simulate(
    spec: &ProblemSpec,
    grid: &DesignGrid,
    params: &DesignParams,
) -> Result<SimulationResult> {
    spec.check_grid(grid)?;
    let mean = grid.mean_density();
    if mean <= 0.0 {
        return Err(Error::EmptyDesign);
    }
    let jitter = objective_jitter(params.seed, spec.problem_id);
    Ok(SimulationResult {
        objective_value: surrogate_objective(mean, params.forcedist, jitter),
        achieved_volfrac: mean,
    })
}

/// 8-bit grayscale raster, one pixel per cell, density 1 rendered black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Binary PGM (P5) encoding.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

pub fn render_design(grid: &DesignGrid) -> GrayImage {
    GrayImage {
        width: grid.cols(),
        height: grid.rows(),
        pixels: grid
            .cells()
            .iter()
            .map(|v| (255.0 * (1.0 - v)).round() as u8)
            .collect(),
    }
}
