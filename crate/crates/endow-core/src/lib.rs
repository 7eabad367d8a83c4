//! Numerical engine for pricing mortality-contingent contracts by exponential-utility
//! indifference in a Markov-modulated jump-diffusion market with stochastic hazard rate.
//!
//! The market consists of a riskless account `dB = rB dt` and one stock
//!
//! ```text
//! dS = S_{t-} { mu(t,X) dt + sigma(t,X) dZ^S + K1(t,X) dN^1 - K2(t,X) dN^2 }
//! ```
//!
//! whose coefficients switch with a continuous-time Markov chain `X` (regimes of the
//! economy), while the force of mortality follows the diffusion
//! `d lambda = b(t,lambda) lambda dt + c(t,lambda) lambda dZ^L`, independent of the market.
//!
//! Under the exponential utility `u(w) = -exp(-alpha w)` the engine computes
//!
//! * the optimal investment amount `pi*(t,i)` from the first-order condition of a
//!   strictly convex objective ([`strategy`]),
//! * the pure-investment value function `Vbar = -exp(-w alpha e^{r(T-t)}) varphi(t,i)`
//!   by backward integration of the ODE system for `varphi` ([`value`]),
//! * indifference prices of pure endowments, endowment portfolios and term-life
//!   contracts along three cross-validating routes: a Crank-Nicolson PDE solve in
//!   `(t, log lambda)`, a Feynman-Kac Monte-Carlo estimator, and closed forms where
//!   they exist ([`pricing`]).
//!
//! The crate is `no_std`-compatible (with `alloc`) when built with the `libm` feature
//! instead of `std`; all IO, configuration and parallel orchestration live in the
//! companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("endow-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod error;
pub(crate) mod math;

pub mod grid;
pub mod hazard;
pub mod interp;
pub mod market;
pub mod pricing;
pub mod quad;
pub mod regime;
pub mod rng;
pub mod stats;
pub mod strategy;
pub mod tridiag;
pub mod value;

pub use error::{Error, Result};
