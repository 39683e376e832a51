//! Input data and fit configuration types shared across the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Bivariate sample (X_i, Y_i), i = 1..n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 observations, got {}",
                x.len()
            )));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "nonfinite value at flat index {i}"
            )));
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires n >= 2
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }

    /// Raw corrected sum of squares, sum_i (Y_i - Ybar)^2.
    pub fn sst_raw(&self) -> f64 {
        let ybar = self.y_mean();
        self.y.iter().map(|v| (v - ybar) * (v - ybar)).sum()
    }

    pub fn x_range(&self) -> (f64, f64) {
        let lo = self.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Uniform evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub const DEFAULT_COUNT: usize = 200;

    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) || stop <= start {
            return Err(Error::InvalidInput(format!(
                "invalid grid [{start}, {stop}]"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 2 points, got {count}"
            )));
        }
        Ok(GridSpec { start, stop, count })
    }

    /// Grid from start/stop/step, inclusive of the endpoint when it lands
    /// on a node (half-integer grids like 1, 1.5, ..., 52 do).
    pub fn from_step(start: f64, stop: f64, step: f64) -> Result<Self> {
        if step <= 0.0 || !step.is_finite() {
            return Err(Error::InvalidInput(format!("invalid grid step {step}")));
        }
        let count = ((stop - start) / step).round() as usize + 1;
        GridSpec::new(start, start + step * (count - 1) as f64, count)
    }

    /// Default grid over the data range.
    pub fn data_range(data: &Dataset, count: usize) -> Result<Self> {
        let (lo, hi) = data.x_range();
        GridSpec::new(lo, hi, count)
    }

    /// Grid over the data range extended by the kernel support radius, so
    /// every observation's kernel window lies inside the grid.
    pub fn padded(data: &Dataset, kernel: Kernel, h: f64, count: usize) -> Result<Self> {
        let (lo, hi) = data.x_range();
        let pad = kernel.support_radius() * h;
        GridSpec::new(lo - pad, hi + pad, count)
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.point(i))
    }
}

/// Configuration of a local polynomial fit sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Polynomial degree p >= 0.
    pub degree: usize,
    /// Bandwidth h > 0, in covariate units.
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub grid: GridSpec,
}

impl FitConfig {
    pub fn new(degree: usize, bandwidth: f64, kernel: Kernel, grid: GridSpec) -> Result<Self> {
        if bandwidth <= 0.0 || !bandwidth.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(FitConfig {
            degree,
            bandwidth,
            kernel,
            grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![0.0], vec![1.0]).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Dataset::new(vec![0.0, f64::NAN], vec![1.0, 2.0]).is_err());
        let d = Dataset::new(vec![0.0, 1.0, 2.0], vec![3.0, 4.0, 5.0]).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.y_mean(), 4.0);
        assert_eq!(d.sst_raw(), 2.0);
    }

    #[test]
    fn grid_from_step_vineyard_style() {
        let g = GridSpec::from_step(1.0, 52.0, 0.5).unwrap();
        assert_eq!(g.count, 103);
        assert!((g.point(102) - 52.0).abs() < 1e-12);
        assert!((g.step() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn padded_grid_covers_support() {
        let d = Dataset::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let g = GridSpec::padded(&d, Kernel::Epanechnikov, 0.25, 100).unwrap();
        assert!((g.start + 0.25).abs() < 1e-12);
        assert!((g.stop - 1.25).abs() < 1e-12);
    }
}
