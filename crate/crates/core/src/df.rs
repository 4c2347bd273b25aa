//! Decode-and-forward path statistics.
//!
//! The selection variable of a DF path is the weaker hop amplitude,
//! `W = min(α_Sk, α_kD)`. With Rayleigh hops `W` is again Rayleigh with rate
//! `Λ = 1/Ω_Sk + 1/Ω_kD`, and its derivative is independent of `W` with a
//! two-component Gaussian mixture law.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::system::{OutageThreshold, PathStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfPathStats {
    /// `1/Ω_Sk + 1/Ω_kD`.
    pub lambda: f64,
    pub omega_sk: f64,
    pub omega_kd: f64,
    pub sigma_dot_sk: f64,
    pub sigma_dot_kd: f64,
}

impl DfPathStats {
    pub fn from_path(path: &PathStats) -> Self {
        DfPathStats::new(
            path.first.omega,
            path.second.omega,
            path.first.sigma_dot,
            path.second.sigma_dot,
        )
    }

    pub fn new(omega_sk: f64, omega_kd: f64, sigma_dot_sk: f64, sigma_dot_kd: f64) -> Self {
        DfPathStats {
            lambda: 1.0 / omega_sk + 1.0 / omega_kd,
            omega_sk,
            omega_kd,
            sigma_dot_sk,
            sigma_dot_kd,
        }
    }

    /// Mixture weights of the derivative law: `(Ω_kD, Ω_Sk)/(Ω_Sk + Ω_kD)`.
    ///
    /// The first hop limits the path with probability `Ω_kD/(Ω_Sk + Ω_kD)`.
    pub fn mixture_weights(&self) -> (f64, f64) {
        let total = self.omega_sk + self.omega_kd;
        (self.omega_kd / total, self.omega_sk / total)
    }

    /// `E[Ẇ·1{Ẇ > 0}]`, the mean positive slope.
    pub fn mean_positive_slope(&self) -> f64 {
        let (w1, w2) = self.mixture_weights();
        (w1 * self.sigma_dot_sk + w2 * self.sigma_dot_kd) / (2.0 * PI).sqrt()
    }
}

fn check_amplitude(w: f64) -> Result<()> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("amplitude must be >= 0, got {w}")));
    }
    Ok(())
}

/// Rayleigh density `2Λw·exp(−Λw²)` of the DF selection variable.
pub fn df_pdf(w: f64, path: &DfPathStats) -> Result<f64> {
    check_amplitude(w)?;
    if w.is_infinite() {
        return Ok(0.0);
    }
    let l = path.lambda;
    Ok(2.0 * l * w * (-l * w * w).exp())
}

/// `1 − exp(−Λw²)`.
pub fn df_cdf(w: f64, path: &DfPathStats) -> Result<f64> {
    check_amplitude(w)?;
    Ok(-(-path.lambda * w * w).exp_m1())
}

/// Outage rate of a single DF path at threshold `z` (slot⁻¹).
pub fn df_path_aor(z: OutageThreshold, path: &DfPathStats) -> f64 {
    let (w1, w2) = path.mixture_weights();
    let pdf = df_pdf(z.z, path).expect("threshold is non-negative");
    (w1 * path.sigma_dot_sk + w2 * path.sigma_dot_kd) * pdf / (2.0 * PI).sqrt()
}

/// Density of the DF selection variable's time derivative: a zero-mean
/// Gaussian mixture with weights [`DfPathStats::mixture_weights`] and the two
/// hop derivative variances.
///
/// A hop whose derivative variance is zero contributes a point mass at zero;
/// that component adds `+∞` at `wdot = 0` and nothing elsewhere.
pub fn df_derivative_mixture_pdf(wdot: f64, path: &DfPathStats) -> f64 {
    let (w1, w2) = path.mixture_weights();
    w1 * gaussian(wdot, path.sigma_dot_sk) + w2 * gaussian(wdot, path.sigma_dot_kd)
}

fn gaussian(x: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if x == 0.0 { f64::INFINITY } else { 0.0 };
    }
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}
