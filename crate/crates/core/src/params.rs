use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimization inputs of one benchmark cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub volfrac: f64,
    pub forcedist: f64,
    /// Filter radius in grid cells.
    pub rmin: f64,
    pub seed: u64,
}

impl DesignParams {
    pub fn validate(&self) -> Result<()> {
        if !self.volfrac.is_finite() || self.volfrac <= 0.0 || self.volfrac >= 1.0 {
            return Err(Error::invalid("volfrac", format!("{} not in (0, 1)", self.volfrac)));
        }
        if !self.forcedist.is_finite() || !(0.0..=1.0).contains(&self.forcedist) {
            return Err(Error::invalid("forcedist", format!("{} not in [0, 1]", self.forcedist)));
        }
        if !self.rmin.is_finite() || self.rmin <= 0.0 {
            return Err(Error::invalid("rmin", format!("{} must be > 0", self.rmin)));
        }
        Ok(())
    }
}

/// STL post-processing parameters: threshold, mirror, scale, extrude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExportParams {
    pub threshold: f64,
    pub mirror_y: bool,
    pub scale_xy: f64,
    pub scale_z: f64,
}

impl ExportParams {
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() || !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid("threshold", format!("{} not in [0, 1]", self.threshold)));
        }
        if !self.scale_xy.is_finite() || self.scale_xy <= 0.0 {
            return Err(Error::invalid("scale_xy", format!("{} must be > 0", self.scale_xy)));
        }
        if !self.scale_z.is_finite() || self.scale_z <= 0.0 {
            return Err(Error::invalid("scale_z", format!("{} must be > 0", self.scale_z)));
        }
        Ok(())
    }
}
