//! Second-order outage statistics of opportunistic relaying.
//!
//! A source reaches a destination only through `M` relays. At every instant the
//! relay with the largest selection variable forwards the signal, and the link
//! is in outage while that maximum sits below the threshold `Z` implied by the
//! target spectral efficiency. This crate computes
//!
//! * the average outage rate `N(Z)` (downward crossings of `Z` per slot), and
//! * the average outage duration `T(Z)` (mean dwell time below `Z`),
//!
//! for decode-and-forward and fixed-gain amplify-and-forward relays whose hops
//! are mobile-to-mobile Rayleigh channels, and cross-checks every closed form
//! against a Monte Carlo simulator that counts crossings on correlated fading
//! traces.
//!
//! Module map:
//!
//! * [`system`] scenario parameters and the rate/threshold mapping
//! * [`special`] modified Bessel `K1` and Gauss-Hermite rules
//! * [`df`], [`af`] per-path distributions and outage rates
//! * [`combiner`] system level rate, duration and outage probability
//! * [`fading`] spectral generator for double-ring Rayleigh traces
//! * [`montecarlo`] crossing counting and repeated experiments
//! * [`config`], [`sweep`] the sweep front end used by the CLI

pub mod af;
pub mod combiner;
pub mod config;
pub mod df;
mod error;
pub mod fading;
pub mod montecarlo;
pub mod special;
pub mod sweep;
pub mod system;

pub use error::{Error, Result};
