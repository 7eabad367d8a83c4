//! Deterministic summary statistics.
//!
//! Reductions run over values stored by path index with compensated (Kahan)
//! accumulation in a fixed pairwise tree, so serial and thread-parallel runs of the
//! generators produce bit-identical summaries.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatMath as _;

const PAIRWISE_LEAF: usize = 128;

/// Kahan-compensated sum of a short run of values.
fn kahan(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Fixed-shape pairwise summation; the tree depends only on `values.len()`.
pub fn sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_LEAF {
        kahan(values)
    } else {
        let mid = values.len() / 2;
        sum(&values[..mid]) + sum(&values[mid..])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    sum(values) / values.len() as f64
}

/// Monte-Carlo estimate: sample mean and standard error `s / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

pub fn mean_and_se(values: &[f64]) -> McEstimate {
    let n = values.len();
    if n == 0 {
        return McEstimate { mean: f64::NAN, std_error: f64::NAN, n };
    }
    let m = mean(values);
    if n == 1 {
        return McEstimate { mean: m, std_error: 0.0, n };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let var = sum(&sq) / (n as f64 - 1.0);
    McEstimate { mean: m, std_error: (var / n as f64).sqrt(), n }
}
