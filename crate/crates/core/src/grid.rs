//! Density and binary design grids.
//!
//! Orientation is fixed: row 0 is the top row, column 0 the left column.
//! Cells are stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2D density field with every cell in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct DesignGrid {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl TryFrom<RawGrid> for DesignGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        DesignGrid::new(raw.rows, raw.cols, raw.cells)
    }
}

fn check_dims(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch {
            expected: "rows, cols >= 1".into(),
            actual: format!("{rows}x{cols}"),
        });
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::DimensionMismatch {
            expected: format!("{rows}x{cols} = {} cells", rows.saturating_mul(cols)),
            actual: format!("{len} cells"),
        });
    }
    Ok(())
}

impl DesignGrid {
    /// Validated constructor (`make_grid`).
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols, cells.len())?;
        for (index, &value) in cells.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteCell { index });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::CellOutOfRange { index, value });
            }
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows.saturating_mul(cols)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn same_shape<T>(&self, other: &Grid2<T>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Material where `density >= threshold`.
    pub fn binarize(&self, threshold: f64) -> Result<BinaryGrid> {
        if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
            return Err(Error::invalid("threshold", format!("{threshold} is outside [0, 1]")));
        }
        Ok(BinaryGrid {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|&v| v >= threshold).collect(),
        })
    }

    /// Arithmetic mean of all cells.
    pub fn mean_density(&self) -> f64 {
        self.cells.iter().sum::<f64>() / self.cells.len() as f64
    }
}

/// Generic row-major container; `BinaryGrid` is the boolean instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid2<T> {
    rows: usize,
    cols: usize,
    cells: Vec<T>,
}

/// Material (`true`) / void (`false`) grid.
pub type BinaryGrid = Grid2<bool>;

impl<T: Copy> Grid2<T> {
    pub fn new(rows: usize, cols: usize, cells: Vec<T>) -> Result<Self> {
        check_dims(rows, cols, cells.len())?;
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.cells[row * self.cols + col]
    }

    pub(crate) fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                cells.push(f(r, c));
            }
        }
        Self { rows, cols, cells }
    }

    pub fn check_same_shape<U>(&self, other: &Grid2<U>) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                actual: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }
}

impl BinaryGrid {
    /// Parses rows of `#`/`.` characters; handy in tests and fixtures.
    pub fn from_ascii(art: &str) -> Result<Self> {
        let lines: Vec<&str> = art
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let rows = lines.len();
        let cols = lines.first().map_or(0, |l| l.chars().count());
        let mut cells = Vec::with_capacity(rows * cols);
        for line in &lines {
            if line.chars().count() != cols {
                return Err(Error::DimensionMismatch {
                    expected: format!("{cols} columns"),
                    actual: format!("{} columns", line.chars().count()),
                });
            }
            cells.extend(line.chars().map(|ch| ch == '#'));
        }
        Self::new(rows, cols, cells)
    }

    pub fn material_count(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }

    pub fn material_fraction(&self) -> f64 {
        self.material_count() as f64 / self.cells.len() as f64
    }
}
