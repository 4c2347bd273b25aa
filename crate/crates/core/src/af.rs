//! Fixed-gain amplify-and-forward path statistics.
//!
//! The AF selection variable is `W = α_Sk·α_kD / sqrt(C + α_kD²)` with
//! `C = Ω_Sk + N₀/P_T`. Its CDF has a closed form in `K1`. Its outage rate is
//! a one-dimensional integral over `y ∈ (0, ∞)`:
//!
//! ```text
//! N(Z) = sqrt(2/π)·2Z·exp(−Z²/Ω_Sk)/(Ω_Sk·Ω_kD)
//!        · ∫ sqrt(σ²_Sk·(y² + C) + σ²_kD·C²Z²/y⁴) · exp(−y²/Ω_kD − C·Z²/(Ω_Sk·y²)) dy
//! ```
//!
//! The integral is evaluated with Gauss-Hermite nodes after `y = e^u` and an
//! affine map of `u` that spreads the integrand's effective support over the
//! rule's central nodes. The log-integrand is handled in log space throughout.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{gauss_hermite_cached, gauss_legendre, one_minus_x_k1, bessel_k1_scaled, QuadratureRule, MAX_HERMITE_ORDER};
use crate::system::{OutageThreshold, PathStats};

/// Smallest rule accepted by [`af_path_aor`].
pub const MIN_AOR_ORDER: usize = 16;
/// Relative disagreement between an order-n and an order-2n evaluation above
/// which the Hermite result is rejected.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Log-integrand drop (nats) that delimits the effective support.
const SUPPORT_DROP: f64 = 34.0;
/// Node abscissa the support edges are mapped to.
const SUPPORT_EDGE_NODE: f64 = 7.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfPathStats {
    /// Fixed-gain constant `Ω_Sk + N₀/P_T`.
    pub c: f64,
    pub omega_sk: f64,
    pub omega_kd: f64,
    pub sigma_dot_sk: f64,
    pub sigma_dot_kd: f64,
}

impl AfPathStats {
    pub fn from_path(path: &PathStats, snr: f64) -> Result<Self> {
        if !(snr > 0.0) {
            return Err(Error::Domain(format!("snr must be > 0, got {snr}")));
        }
        Ok(AfPathStats {
            c: path.first.omega + 1.0 / snr,
            omega_sk: path.first.omega,
            omega_kd: path.second.omega,
            sigma_dot_sk: path.first.sigma_dot,
            sigma_dot_kd: path.second.sigma_dot,
        })
    }

    /// Build from an explicit gain constant. `c` must exceed `omega_sk`.
    pub fn with_gain_constant(c: f64, omega_sk: f64, omega_kd: f64, sigma_dot_sk: f64, sigma_dot_kd: f64) -> Result<Self> {
        if !(omega_sk > 0.0 && omega_kd > 0.0) {
            return Err(Error::Domain("mean-square gains must be > 0".into()));
        }
        if !(c > omega_sk) || !c.is_finite() {
            return Err(Error::Domain(format!("gain constant {c} must exceed omega_sk {omega_sk}")));
        }
        if !(sigma_dot_sk >= 0.0 && sigma_dot_kd >= 0.0) {
            return Err(Error::Domain("derivative deviations must be >= 0".into()));
        }
        Ok(AfPathStats {
            c,
            omega_sk,
            omega_kd,
            sigma_dot_sk,
            sigma_dot_kd,
        })
    }
}

/// `α_Sk·α_kD / sqrt(C + α_kD²)`.
pub fn af_selection_variable(alpha_sk: f64, alpha_kd: f64, path: &AfPathStats) -> f64 {
    select(alpha_sk, alpha_kd, path.c)
}

#[inline]
pub(crate) fn select(alpha_sk: f64, alpha_kd: f64, c: f64) -> f64 {
    if alpha_kd.is_infinite() {
        return alpha_sk;
    }
    alpha_sk * alpha_kd / (c + alpha_kd * alpha_kd).sqrt()
}

/// CDF of the AF selection variable,
/// `1 − x·exp(−Z²/Ω_Sk)·K1(x)` with `x = 2Z·sqrt(C/(Ω_Sk·Ω_kD))`.
pub fn af_cdf(z: f64, path: &AfPathStats) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {z}")));
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    let x = 2.0 * z * (path.c / (path.omega_sk * path.omega_kd)).sqrt();
    let a = z * z / path.omega_sk;
    let value = if x <= 2.0 {
        // 1 − e^(−a)·(1 − D) = (1 − e^(−a)) + e^(−a)·D, both terms non-negative.
        -(-a).exp_m1() + (-a).exp() * one_minus_x_k1(x)?
    } else {
        1.0 - x * bessel_k1_scaled(x)? * (-a - x).exp()
    };
    if !(-1e-12..=1.0 + 1e-12).contains(&value) {
        return Err(Error::Internal(format!("AF CDF evaluated to {value} at z = {z}")));
    }
    Ok(value)
}

/// Which quadrature produced an outage rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AorMethod {
    Hermite,
    LegendreFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AorEvaluation {
    pub value: f64,
    pub method: AorMethod,
    /// Relative difference between the order-n and order-2n Hermite results.
    pub hermite_discrepancy: f64,
}

/// Outage rate of one AF path at `z`, evaluated with the given Gauss-Hermite rule.
pub fn af_path_aor(z: OutageThreshold, path: &AfPathStats, rule: &QuadratureRule) -> Result<f64> {
    if rule.order < MIN_AOR_ORDER {
        return Err(Error::Parameter(format!(
            "outage-rate quadrature needs order >= {MIN_AOR_ORDER}, got {}",
            rule.order
        )));
    }
    match AorIntegrand::new(z.z, path)? {
        None => Ok(0.0),
        Some(integrand) => {
            let support = integrand.support();
            Ok(integrand.hermite(&support, rule).exp())
        }
    }
}

/// Outage rate with the order-n / order-2n convergence check. A failed check
/// falls back to adaptive Gauss-Legendre panels; if those also fail the
/// result is [`Error::NonConvergence`].
pub fn af_path_aor_checked(z: OutageThreshold, path: &AfPathStats, order: usize) -> Result<AorEvaluation> {
    if order < MIN_AOR_ORDER {
        return Err(Error::Parameter(format!(
            "outage-rate quadrature needs order >= {MIN_AOR_ORDER}, got {order}"
        )));
    }
    let Some(integrand) = AorIntegrand::new(z.z, path)? else {
        return Ok(AorEvaluation {
            value: 0.0,
            method: AorMethod::Hermite,
            hermite_discrepancy: 0.0,
        });
    };
    let reference = if order >= MAX_HERMITE_ORDER { order / 2 } else { (2 * order).min(MAX_HERMITE_ORDER) };
    let support = integrand.support();
    let primary = integrand.hermite(&support, &*gauss_hermite_cached(order)?);
    let check = integrand.hermite(&support, &*gauss_hermite_cached(reference)?);
    let discrepancy = (primary - check).exp_m1().abs();
    if discrepancy <= CONVERGENCE_TOLERANCE {
        return Ok(AorEvaluation {
            value: primary.exp(),
            method: AorMethod::Hermite,
            hermite_discrepancy: discrepancy,
        });
    }
    let value = integrand.legendre(&support)?;
    Ok(AorEvaluation {
        value: value.exp(),
        method: AorMethod::LegendreFallback,
        hermite_discrepancy: discrepancy,
    })
}

/// Outage rate computed only with adaptive Gauss-Legendre panels over
/// `y ∈ [0, Y_max]`. Independent of the Hermite mapping.
pub fn af_path_aor_fallback(z: OutageThreshold, path: &AfPathStats) -> Result<f64> {
    match AorIntegrand::new(z.z, path)? {
        None => Ok(0.0),
        Some(integrand) => {
            let support = integrand.support();
            Ok(integrand.legendre(&support)?.exp())
        }
    }
}

/// Log of the integrand in `u = ln y`, with the prefactor kept apart.
struct AorIntegrand {
    /// ln σ²_Sk, ln(σ²_Sk·C), ln(σ²_kD·C²·Z²); −∞ when a variance is zero.
    ln_a: f64,
    ln_b: f64,
    ln_d: f64,
    p: f64,
    q: f64,
    ln_prefactor: f64,
}

struct Support {
    lo: f64,
    hi: f64,
    peak: f64,
}

impl AorIntegrand {
    fn new(z: f64, path: &AfPathStats) -> Result<Option<Self>> {
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("threshold must be finite and >= 0, got {z}")));
        }
        let var_sk = path.sigma_dot_sk * path.sigma_dot_sk;
        let var_kd = path.sigma_dot_kd * path.sigma_dot_kd;
        if z == 0.0 || (var_sk == 0.0 && var_kd == 0.0) {
            return Ok(None);
        }
        let c = path.c;
        let ln_prefactor =
            0.5 * (2.0 / PI).ln() + (2.0 * z).ln() - z * z / path.omega_sk - (path.omega_sk * path.omega_kd).ln();
        Ok(Some(AorIntegrand {
            ln_a: var_sk.ln(),
            ln_b: (var_sk * c).ln(),
            ln_d: (var_kd * c * c * z * z).ln(),
            p: 1.0 / path.omega_kd,
            q: c * z * z / path.omega_sk,
            ln_prefactor,
        }))
    }

    /// `ln(integrand(e^u)·e^u)`.
    #[inline]
    fn log_u(&self, u: f64) -> f64 {
        let t1 = self.ln_a + 2.0 * u;
        let t2 = self.ln_b;
        let t3 = self.ln_d - 4.0 * u;
        let m = t1.max(t2).max(t3);
        let ln_s = m + ((t1 - m).exp() + (t2 - m).exp() + (t3 - m).exp()).ln();
        u + 0.5 * ln_s - self.p * (2.0 * u).exp() - self.q * (-2.0 * u).exp()
    }

    /// Locate the global maximum and the outermost points where the
    /// log-integrand has dropped by [`SUPPORT_DROP`].
    fn support(&self) -> Support {
        let s2 = (self.p * self.q).sqrt();
        let u0 = 0.25 * (self.q / self.p).ln();
        // Outside [left, right] the log-integrand is strictly monotone.
        let right = u0.max(0.5 * ((1.0 + s2) / self.p).ln());
        let left = u0.min(0.5 * (2.0 * self.q / (1.0 + 2.0 * s2)).ln());
        let steps = (((right - left) / 0.02).ceil() as usize).max(64);
        let h = (right - left) / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|i| self.log_u(left + i as f64 * h)).collect();
        let peak = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let level = peak - SUPPORT_DROP;

        let last = grid.iter().rposition(|&v| v >= level).expect("peak is on the grid");
        let hi = if last == steps {
            self.edge_beyond(right, 1.0, level)
        } else {
            self.bisect(left + last as f64 * h, left + (last + 1) as f64 * h, level)
        };
        let first = grid.iter().position(|&v| v >= level).expect("peak is on the grid");
        let lo = if first == 0 {
            self.edge_beyond(left, -1.0, level)
        } else {
            self.bisect(left + first as f64 * h, left + (first - 1) as f64 * h, level)
        };
        Support { lo, hi, peak }
    }

    /// Walk outward from `start` (where the function is above `level`) in
    /// direction `dir` until it falls below `level`, then bisect.
    fn edge_beyond(&self, start: f64, dir: f64, level: f64) -> f64 {
        let mut inside = start;
        let mut step = 0.25;
        let mut outside = start + dir * step;
        while self.log_u(outside) >= level {
            inside = outside;
            step *= 2.0;
            outside += dir * step;
        }
        self.bisect(inside, outside, level)
    }

    /// Bisection between `inside` (value ≥ level) and `outside` (value < level).
    fn bisect(&self, mut inside: f64, mut outside: f64, level: f64) -> f64 {
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if self.log_u(mid) >= level {
                inside = mid;
            } else {
                outside = mid;
            }
            if (inside - outside).abs() < 1e-12 {
                break;
            }
        }
        0.5 * (inside + outside)
    }

    /// Log of the outage rate from a Gauss-Hermite rule.
    fn hermite(&self, support: &Support, rule: &QuadratureRule) -> f64 {
        let center = 0.5 * (support.lo + support.hi);
        let scale = 0.5 * (support.hi - support.lo) / SUPPORT_EDGE_NODE;
        let sum: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * (self.log_u(center + scale * x) - support.peak + x * x).exp())
            .sum();
        self.ln_prefactor + support.peak + scale.ln() + sum.ln()
    }

    /// Log of the outage rate from adaptive Gauss-Legendre panels in `y`.
    fn legendre(&self, support: &Support) -> Result<f64> {
        let rule = gauss_legendre(15)?;
        let peak = support.peak;
        // In y the integrand is exp(log_u(ln y) − ln y); zero at y = 0.
        let f = |y: f64| {
            if y <= 0.0 {
                0.0
            } else {
                let u = y.ln();
                (self.log_u(u) - u - peak).exp()
            }
        };
        let panel = |a: f64, b: f64| 0.5 * (b - a) * rule.integrate(|x| f(0.5 * (b - a) * x + 0.5 * (a + b)));
        let y_max = support.hi.exp();
        // Geometric initial partition resolves the small-y region.
        let y_min = support.lo.exp();
        let mut edges = vec![0.0];
        let pieces = 48;
        for i in 0..=pieces {
            edges.push(y_min * (y_max / y_min).powf(i as f64 / pieces as f64));
        }
        let mut total = 0.0;
        let mut stack: Vec<(f64, f64, f64, usize)> =
            edges.windows(2).map(|e| (e[0], e[1], panel(e[0], e[1]), 0)).collect();
        let scale: f64 = stack.iter().map(|s| s.2).sum();
        let mut evaluations = 0usize;
        while let Some((a, b, whole, depth)) = stack.pop() {
            let mid = 0.5 * (a + b);
            let left = panel(a, mid);
            let right = panel(mid, b);
            evaluations += 2;
            if (left + right - whole).abs() <= 1e-13 * scale || (depth > 12 && (left + right - whole).abs() <= 1e-10 * scale) {
                total += left + right;
            } else if depth >= 40 || evaluations > 200_000 {
                return Err(Error::NonConvergence(format!(
                    "adaptive Gauss-Legendre failed on [{a}, {b}]"
                )));
            } else {
                stack.push((a, mid, left, depth + 1));
                stack.push((mid, b, right, depth + 1));
            }
        }
        Ok(self.ln_prefactor + peak + total.ln())
    }
}
