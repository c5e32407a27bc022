//! Distribution, diversity, optimality-gap and constraint-violation metrics
//! for sets of generated designs.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::Sense;
use crate::grid::DesignGrid;
use crate::{Error, Result};

pub const DEFAULT_SIGMA: f64 = 10.0;
/// Ridge added to the kernel matrix before taking its determinant.
pub const DPP_RIDGE: f64 = 1e-6;
/// Equality constraints count as satisfied within this band.
pub const EQUALITY_TOL: f64 = 1e-9;

/// Equal-length flattened designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DesignSet {
    designs: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for DesignSet {
    type Error = Error;

    fn try_from(designs: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(designs)
    }
}

impl From<DesignSet> for Vec<Vec<f64>> {
    fn from(s: DesignSet) -> Self {
        s.designs
    }
}

impl DesignSet {
    pub fn new(designs: Vec<Vec<f64>>) -> Result<Self> {
        let first = designs.first().ok_or_else(|| Error::invalid("designs", "set is empty"))?;
        let dim = first.len();
        if let Some((i, d)) = designs.iter().enumerate().find(|(_, d)| d.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: format!("{dim} values"),
                actual: format!("{} values in design {i}", d.len()),
            });
        }
        if designs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("designs", "non-finite value"));
        }
        Ok(Self { designs })
    }

    pub fn from_grids(grids: &[DesignGrid]) -> Result<Self> {
        Self::new(grids.iter().map(|g| g.cells().to_vec()).collect())
    }

    pub fn designs(&self) -> &[Vec<f64>] {
        &self.designs
    }

    pub fn len(&self) -> usize {
        self.designs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.designs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.designs[0].len()
    }

    /// A JSON array of grid objects, or a JSON array of flat vectors.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Stacked {
            Grids(Vec<DesignGrid>),
            Flat(Vec<Vec<f64>>),
        }
        match serde_json::from_str::<Stacked>(text)? {
            Stacked::Grids(g) => Self::from_grids(&g),
            Stacked::Flat(f) => Self::new(f),
        }
    }

    /// Headerless CSV, one design per row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut designs = Vec::new();
        for record in reader.deserialize::<Vec<f64>>() {
            designs.push(record?);
        }
        Self::new(designs)
    }

    /// Dispatches on the `.csv` extension; anything else is read as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::from_csv(&text),
            _ => Self::from_json(&text),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("sigma", format!("{sigma} must be > 0")))
    }
}

fn kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// `exp(-|a-b|^2 / (2 sigma^2))`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len().to_string(), actual: b.len().to_string() });
    }
    Ok(kernel(a, b, sigma))
}

/// Row-major kernel matrix between two sets.
pub fn kernel_matrix(a: &DesignSet, b: &DesignSet, sigma: f64) -> Result<Vec<Vec<f64>>> {
    check_sigma(sigma)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim().to_string(), actual: b.dim().to_string() });
    }
    Ok(a.designs.par_iter().map(|x| b.designs.iter().map(|y| kernel(x, y, sigma)).collect()).collect())
}

fn mean_kernel(a: &DesignSet, b: &DesignSet, sigma: f64) -> Result<f64> {
    let k = kernel_matrix(a, b, sigma)?;
    let total: f64 = k.iter().flatten().sum();
    Ok(total / (a.len() * b.len()) as f64)
}

/// Biased (V-statistic) squared MMD; identical sets give exactly 0.
/// Round-off negatives are clamped to 0.
pub fn mmd2(d: &DesignSet, g: &DesignSet, sigma: f64) -> Result<f64> {
    let dd = mean_kernel(d, d, sigma)?;
    let gg = mean_kernel(g, g, sigma)?;
    let dg = mean_kernel(d, g, sigma)?;
    Ok((dd + gg - 2.0 * dg).max(0.0))
}

/// Determinant of a symmetric positive-definite matrix via Cholesky;
/// 0 when a pivot is not positive.
pub fn spd_determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    let mut det = 1.0;
    for j in 0..n {
        let mut pivot = m[j][j];
        for k in 0..j {
            pivot -= l[j][k] * l[j][k];
        }
        if !(pivot > 0.0) {
            return 0.0;
        }
        let d = pivot.sqrt();
        l[j][j] = d;
        det *= pivot;
        for i in j + 1..n {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    det
}

/// `det(K + 1e-6 I)` over the generated set.
pub fn dpp_diversity(g: &DesignSet, sigma: f64) -> Result<f64> {
    let mut k = kernel_matrix(g, g, sigma)?;
    for (i, row) in k.iter_mut().enumerate() {
        row[i] += DPP_RIDGE;
    }
    Ok(spd_determinant(&k))
}

/// Objective values along one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationPath {
    pub values: Vec<f64>,
    pub f_star: f64,
    pub sense: Sense,
}

impl OptimizationPath {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "optimization path is empty"));
        }
        if !self.f_star.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "non-finite objective"));
        }
        Ok(())
    }

    /// Per-step gaps oriented so that 0 is optimal.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(self
            .values
            .iter()
            .map(|v| match self.sense {
                Sense::Minimize => v - self.f_star,
                Sense::Maximize => self.f_star - v,
            })
            .collect())
    }
}

pub fn cog(path: &OptimizationPath) -> Result<f64> {
    Ok(path.gaps()?.iter().sum())
}

pub fn iog(path: &OptimizationPath) -> Result<f64> {
    Ok(path.gaps()?[0])
}

pub fn fog(path: &OptimizationPath) -> Result<f64> {
    Ok(*path.gaps()?.last().expect("validated non-empty"))
}

/// Constraint values of one design: `g_i <= 0` and `h_j == 0` are satisfied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValues {
    pub inequality: Vec<f64>,
    pub equality: Vec<f64>,
}

impl ConstraintValues {
    pub fn violated(&self) -> bool {
        self.inequality.iter().any(|g| *g > 0.0) || self.equality.iter().any(|h| h.abs() > EQUALITY_TOL)
    }
}

/// Evaluates the constraints of design `index`; attributes and conditions
/// are the implementor's business.
pub trait ConstraintEvaluator: Sync {
    fn evaluate(&self, index: usize, design: &[f64]) -> std::result::Result<ConstraintValues, String>;
}

impl<F> ConstraintEvaluator for F
where
    F: Fn(usize, &[f64]) -> std::result::Result<ConstraintValues, String> + Sync,
{
    fn evaluate(&self, index: usize, design: &[f64]) -> std::result::Result<ConstraintValues, String> {
        self(index, design)
    }
}

/// Mean density must lie within `tolerance` of `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeFractionConstraint {
    pub target: f64,
    pub tolerance: f64,
}

impl ConstraintEvaluator for VolumeFractionConstraint {
    fn evaluate(&self, _index: usize, design: &[f64]) -> std::result::Result<ConstraintValues, String> {
        if design.is_empty() {
            return Err("empty design".into());
        }
        let mean = design.iter().sum::<f64>() / design.len() as f64;
        Ok(ConstraintValues { inequality: vec![(mean - self.target).abs() - self.tolerance], equality: vec![] })
    }
}

/// Fraction of designs violating at least one constraint.
pub fn rvc(g: &DesignSet, eval: &dyn ConstraintEvaluator) -> Result<f64> {
    let mut violating = 0usize;
    for (index, design) in g.designs.iter().enumerate() {
        let values = eval
            .evaluate(index, design)
            .map_err(|reason| Error::ConstraintEvaluation { index, reason })?;
        violating += usize::from(values.violated());
    }
    Ok(violating as f64 / g.len() as f64)
}

/// All metrics for one generated set against a reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenMetricsReport {
    pub sigma: f64,
    pub mmd2: f64,
    pub dpp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rvc: Option<f64>,
}
