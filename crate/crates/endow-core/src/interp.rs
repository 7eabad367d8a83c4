//! Local cubic interpolation on uniform grids.
//!
//! Four-point Lagrange interpolation through the nearest nodes; near the ends the
//! stencil is clamped inside the grid. Error is `O(h^4)` for smooth data, one order
//! below the solvers' own accuracy, so interpolation never dominates reported errors.

/// Uniform-grid axis `x_j = lo + j*h`, `j = 0..n-1`.
#[derive(Debug, Clone, Copy)]
pub struct UniformAxis {
    pub lo: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformAxis {
    pub fn new(lo: f64, hi: f64, len: usize) -> Self {
        debug_assert!(len >= 2 && hi > lo);
        UniformAxis { lo, step: (hi - lo) / (len - 1) as f64, len }
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.len - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.lo + self.step * j as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        let pad = 1e-12 * (self.hi() - self.lo).abs();
        x >= self.lo - pad && x <= self.hi() + pad
    }

    /// Start index of the 4-point stencil around `x`, clamped to the grid.
    fn stencil_start(&self, x: f64) -> usize {
        if self.len < 4 {
            return 0;
        }
        let j = ((x - self.lo) / self.step) as isize;
        let start = j - 1;
        start.clamp(0, self.len as isize - 4) as usize
    }

    /// Lagrange weights of the stencil at `x`: returns `(start, [w0..w3])`.
    pub fn cubic_weights(&self, x: f64) -> (usize, [f64; 4]) {
        if self.len < 4 {
            // Fall back to linear on degenerate axes.
            let j = (((x - self.lo) / self.step) as usize).min(self.len - 2);
            let s = (x - self.node(j)) / self.step;
            return (j, [1.0 - s, s, 0.0, 0.0]);
        }
        let start = self.stencil_start(x);
        // Coordinates relative to the stencil, in units of h.
        let s = (x - self.node(start)) / self.step;
        let mut w = [0.0; 4];
        let nodes = [0.0, 1.0, 2.0, 3.0];
        for (k, wk) in w.iter_mut().enumerate() {
            let mut num = 1.0;
            let mut den = 1.0;
            for m in 0..4 {
                if m != k {
                    num *= s - nodes[m];
                    den *= nodes[k] - nodes[m];
                }
            }
            *wk = num / den;
        }
        (start, w)
    }

    /// Interpolate tabulated `values` (one per node) at `x`.
    pub fn interp(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let (start, w) = self.cubic_weights(x);
        let k = if self.len < 4 { 2 } else { 4 };
        (0..k).map(|i| w[i] * values[start + i]).sum()
    }
}
