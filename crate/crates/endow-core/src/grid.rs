//! Simulation time grids.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Strictly increasing grid on `[0, T]`, uniform up to inserted regime-switch times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub times: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid with `n_steps` steps over `[0, horizon]`.
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParam("time horizon must be positive".into()));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParam("time grid needs at least one step".into()));
        }
        let dt = horizon / n_steps as f64;
        let mut times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        times[n_steps] = horizon;
        Ok(TimeGrid { horizon, times })
    }

    /// Copy of this grid with extra points inserted (regime-switch times), deduplicated
    /// against existing nodes within `1e-12 * horizon`.
    pub fn with_inserted(&self, extra: &[f64]) -> Self {
        let tol = 1e-12 * self.horizon;
        let mut times = self.times.clone();
        for &s in extra {
            if s <= 0.0 || s >= self.horizon {
                continue;
            }
            let pos = times.partition_point(|&t| t < s);
            let near_prev = pos > 0 && (s - times[pos - 1]).abs() <= tol;
            let near_next = pos < times.len() && (times[pos] - s).abs() <= tol;
            if !near_prev && !near_next {
                times.insert(pos, s);
            }
        }
        TimeGrid { horizon: self.horizon, times }
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }
}
