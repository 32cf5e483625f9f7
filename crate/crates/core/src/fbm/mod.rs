//! Fractional Brownian motion: parameters, grids, sample paths and exact samplers.

mod circulant;
mod cholesky;
mod empirical;
mod ensemble;
mod hosking;
pub mod io;

pub use circulant::{generate_path_circulant, CirculantSampler};
pub use cholesky::{build_covariance_matrix, generate_path_cholesky, CholeskySampler, CovarianceMatrix};
pub use empirical::{empirical_covariance, EmpiricalCovariance};
pub use ensemble::{Ensemble, Generator};
pub use hosking::{generate_path_hosking, HoskingSampler};

use crate::error::{Error, Result};
use std::sync::Arc;

/// Hurst exponent, validated to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `2H`, the exponent appearing in the covariance.
    pub fn two_h(self) -> f64 {
        2.0 * self.0
    }

    /// True iff H > 1/2; the phi-kernel calculus is only defined in this regime.
    pub fn requires_long_memory(self) -> bool {
        self.0 > 0.5
    }
}

impl TryFrom<f64> for HurstParameter {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

/// `R_H(s, t) = ½(t^{2H} + s^{2H} − |t − s|^{2H})`.
pub fn covariance(s: f64, t: f64, h: HurstParameter) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::Domain(format!("covariance needs s, t >= 0, got ({s}, {t})")));
    }
    Ok(covariance_unchecked(s, t, h.two_h()))
}

#[inline]
pub(crate) fn covariance_unchecked(s: f64, t: f64, two_h: f64) -> f64 {
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
pub(crate) fn fgn_autocovariance(k: usize, two_h: f64) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

const UNIFORM_RTOL: f64 = 1e-12;

/// Partition `0 = t_0 < t_1 < … < t_n = T` of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first point must be 0, got {}", points[0])));
        }
        for w in points.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "points must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// `n` equal cells on `[0, horizon]`.
    pub fn uniform(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("n must be at least 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        let points = (0..=n)
            .map(|i| if i == n { horizon } else { i as f64 * horizon / n as f64 })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn spacing(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    pub fn spacings(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    pub fn is_uniform(&self) -> bool {
        let d0 = self.spacing(0);
        self.spacings().all(|d| (d - d0).abs() <= UNIFORM_RTOL * d0)
    }

    /// Every `stride`-th point; `stride` must divide the number of intervals.
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.n_intervals() % stride != 0 {
            return Err(Error::InvalidGrid(format!(
                "stride {stride} does not divide {} intervals",
                self.n_intervals()
            )));
        }
        Ok(Self {
            points: self.points.iter().step_by(stride).copied().collect(),
        })
    }

    /// Index of the grid point equal to `t` (within 1e-12 of the horizon).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = UNIFORM_RTOL * self.horizon();
        let i = self.points.partition_point(|&p| p < t - tol);
        (i < self.points.len() && (self.points[i] - t).abs() <= tol).then_some(i)
    }

    /// Indices into `self` of each point of `coarse`, if `coarse` is a sub-grid.
    pub fn embed(&self, coarse: &TimeGrid) -> Result<Vec<usize>> {
        coarse
            .points
            .iter()
            .map(|&t| {
                self.index_of(t).ok_or_else(|| {
                    Error::GridMismatch(format!("point {t} is not on the path grid"))
                })
            })
            .collect()
    }

    /// Sorted union of breakpoints of two grids (no tolerance merging).
    pub fn union(&self, other: &TimeGrid) -> TimeGrid {
        let mut pts: Vec<f64> = self.points.iter().chain(&other.points).copied().collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        TimeGrid { points: pts }
    }
}

/// One trajectory stored as level values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<f64>,
    pub label: String,
}

impl SamplePath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            label: label.into(),
        })
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn increment(&self, i: usize) -> f64 {
        self.values[i + 1] - self.values[i]
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The same path observed on a sub-grid.
    pub fn restrict(&self, coarse: Arc<TimeGrid>) -> Result<Self> {
        let idx = self.grid.embed(&coarse)?;
        let values = idx.iter().map(|&i| self.values[i]).collect();
        Ok(Self {
            grid: coarse,
            values,
            label: self.label.clone(),
        })
    }

    pub fn ensure_same_grid(&self, other: &SamplePath) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "paths `{}` and `{}` live on different grids",
                self.label, other.label
            )))
        }
    }
}
