//! Continuous-time finite-state Markov chain driving the economic regimes.
//!
//! The chain is simulated by competing exponential clocks: in state `i` the holding
//! time is `Exp(-a_ii)` and the next state is drawn with probabilities
//! `a_ij / (-a_ii)`. This has the same law as the Poisson-random-measure construction
//! of the chain and avoids interval bookkeeping. States are 0-based here; the CLI
//! layer presents them 1-based.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::FloatMath as _;

/// Tolerance on generator row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Rate at or below which a state is treated as absorbing.
const ABSORBING_TOL: f64 = 1e-300;

/// Validated transition-rate matrix of the regime chain.
///
/// Off-diagonal entries are nonnegative and every row sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    rates: Vec<f64>,
    m: usize,
}

impl GeneratorMatrix {
    /// Validate a square, row-major rate matrix.
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self> {
        let m = rates.len();
        if m == 0 {
            return Err(Error::InvalidParam("generator needs at least one regime".into()));
        }
        let mut flat = Vec::with_capacity(m * m);
        for (i, row) in rates.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidParam("generator matrix must be square".into()));
            }
            let mut sum = 0.0;
            for (j, &a) in row.iter().enumerate() {
                if i != j && a < 0.0 {
                    return Err(Error::NegativeOffDiagonal { row: i, col: j, value: a });
                }
                if !a.is_finite() {
                    return Err(Error::InvalidParam("generator entries must be finite".into()));
                }
                sum += a;
            }
            if sum.abs() > ROW_SUM_TOL {
                return Err(Error::RowSumNonzero { row: i, sum });
            }
            flat.extend_from_slice(row);
        }
        Ok(GeneratorMatrix { rates: flat, m })
    }

    /// Number of regimes.
    pub fn n_states(&self) -> usize {
        self.m
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.m + j]
    }

    /// Total exit rate `-a_ii` of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rate(i, i)
    }
}

/// One realized trajectory of the regime chain on `[0, horizon]`.
///
/// `states[k]` is the regime in force on `[switch_times[k], switch_times[k+1])`;
/// before the first switch the regime is `initial_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePath {
    pub initial_state: usize,
    pub switch_times: Vec<f64>,
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl RegimePath {
    /// Path with no switches.
    pub fn constant(state: usize, horizon: f64) -> Self {
        RegimePath { initial_state: state, switch_times: Vec::new(), states: Vec::new(), horizon }
    }

    /// Regime in force at time `t` (cadlag: at a switch time the new state applies).
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.switch_times.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial_state
        } else {
            self.states[k - 1]
        }
    }

    pub fn n_switches(&self) -> usize {
        self.switch_times.len()
    }

    /// Number of direct `from -> to` transitions along the path.
    pub fn count_transitions(&self, from: usize, to: usize) -> usize {
        let mut prev = self.initial_state;
        let mut count = 0;
        for &next in &self.states {
            if prev == from && next == to {
                count += 1;
            }
            prev = next;
        }
        count
    }

    /// Total time spent in `state` over `[0, horizon]`.
    pub fn occupation_time(&self, state: usize) -> f64 {
        let mut total = 0.0;
        let mut prev_t = 0.0;
        let mut prev_s = self.initial_state;
        for (k, &t) in self.switch_times.iter().enumerate() {
            if prev_s == state {
                total += t - prev_t;
            }
            prev_t = t;
            prev_s = self.states[k];
        }
        if prev_s == state {
            total += self.horizon - prev_t;
        }
        total
    }
}

/// Sample one chain trajectory on `[0, horizon]` from the given stream.
pub fn sample_regime_path(
    gen: &GeneratorMatrix,
    initial_state: usize,
    horizon: f64,
    rng: &mut ChaCha12Rng,
) -> Result<RegimePath> {
    if initial_state >= gen.n_states() {
        return Err(Error::InvalidParam("initial regime index out of range".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParam("horizon must be positive".into()));
    }
    let mut t = 0.0;
    let mut state = initial_state;
    let mut switch_times = Vec::new();
    let mut states = Vec::new();
    loop {
        let rate = gen.exit_rate(state);
        if rate <= ABSORBING_TOL {
            break; // absorbing: holding time is +infinity
        }
        // Exp(rate) holding time; 1 - U stays in (0, 1].
        let u: f64 = rng.gen();
        t -= (1.0 - u).ln() / rate;
        if t >= horizon {
            break;
        }
        // Jump distribution a_ij / rate over j != state.
        let mut target = rng.gen::<f64>() * rate;
        let mut next = state;
        for j in 0..gen.n_states() {
            if j == state {
                continue;
            }
            let a = gen.rate(state, j);
            if target < a {
                next = j;
                break;
            }
            target -= a;
        }
        if next == state {
            // Rounding pushed the draw past the last positive rate; take it.
            next = (0..gen.n_states())
                .rev()
                .find(|&j| j != state && gen.rate(state, j) > 0.0)
                .unwrap_or(state);
            if next == state {
                break;
            }
        }
        switch_times.push(t);
        states.push(next);
        state = next;
    }
    Ok(RegimePath { initial_state, switch_times, states, horizon })
}

/// Occupancy probabilities `p_j(t) = P(X_t = j | X_0 = initial)`.
///
/// Integrates the Kolmogorov forward equations `p' = p A` with RK4, scaling the step
/// count with `t * max exit rate`; this doubles as the matrix exponential oracle.
pub fn occupancy_probabilities(gen: &GeneratorMatrix, initial_state: usize, t: f64) -> Result<Vec<f64>> {
    if initial_state >= gen.n_states() {
        return Err(Error::InvalidParam("initial regime index out of range".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParam("time must be nonnegative".into()));
    }
    let mut p = vec![0.0; gen.n_states()];
    p[initial_state] = 1.0;
    propagate_distribution(gen, &mut p, t);
    Ok(p)
}

/// Advance a probability vector by `dt` under the forward equations (in place).
pub fn propagate_distribution(gen: &GeneratorMatrix, p: &mut [f64], dt: f64) {
    if dt == 0.0 {
        return;
    }
    let max_rate = (0..gen.n_states()).map(|i| gen.exit_rate(i)).fold(0.0f64, f64::max);
    if max_rate == 0.0 {
        return;
    }
    let n_steps = (256.0 * dt * max_rate).ceil().max(256.0) as usize;
    let h = dt / n_steps as f64;
    let m = gen.n_states();
    let deriv = |p: &[f64], out: &mut [f64]| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..m).map(|i| p[i] * gen.rate(i, j)).sum();
        }
    };
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    for _ in 0..n_steps {
        deriv(p, &mut k1);
        for i in 0..m {
            tmp[i] = p[i] + 0.5 * h * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..m {
            tmp[i] = p[i] + 0.5 * h * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..m {
            tmp[i] = p[i] + h * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..m {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    for v in p.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
}
