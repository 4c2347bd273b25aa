//! Modified Bessel function `K1` and Gauss-type quadrature rules.
//!
//! `K1` uses the ascending series below `x = 2` and Steed's continued fraction
//! above it. Gauss-Hermite nodes come from Newton iteration on orthonormal
//! Hermite polynomials.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const MAX_ITER: usize = 10_000;

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check_positive(x)?;
    if x <= SERIES_LIMIT {
        Ok(k1_series(x))
    } else {
        Ok(k1_scaled_cf(x) * (-x).exp())
    }
}

/// `e^x · K1(x)`, finite for every positive `x`.
pub fn bessel_k1_scaled(x: f64) -> Result<f64> {
    check_positive(x)?;
    if x <= SERIES_LIMIT {
        Ok(k1_series(x) * x.exp())
    } else {
        Ok(k1_scaled_cf(x))
    }
}

/// `1 − x·K1(x)` without the cancellation of the direct form at small `x`.
///
/// Lies in `[0, 1)` and tends to 0 as `x → 0⁺`. `x = 0` is accepted.
pub fn one_minus_x_k1(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    check_positive(x)?;
    if x > SERIES_LIMIT {
        return Ok(1.0 - x * k1_scaled_cf(x) * (-x).exp());
    }
    // x·K1(x) = 1 + x·ln(x/2)·I1(x) − (x²/4)·Σ (ψ(k+1)+ψ(k+2)) (x²/4)^k / (k!(k+1)!)
    let (i1, tail) = series_parts(x);
    Ok(-x * (0.5 * x).ln() * i1 + 0.25 * x * x * tail)
}

fn check_positive(x: f64) -> Result<()> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(Error::Domain(format!("K1 requires a finite x > 0, got {x}")));
    }
    Ok(())
}

/// Returns `(I1(x), Σ_k (ψ(k+1)+ψ(k+2))·(x²/4)^k/(k!(k+1)!))`.
fn series_parts(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    // term_k = (x²/4)^k / (k!(k+1)!)
    let mut term = 1.0;
    let mut psi_a = -EULER_GAMMA; // ψ(k+1)
    let mut psi_b = 1.0 - EULER_GAMMA; // ψ(k+2)
    let mut i1_sum = 0.0;
    let mut tail = 0.0;
    for k in 0..200 {
        i1_sum += term;
        let t = term * (psi_a + psi_b);
        tail += t;
        if term < 1e-18 * i1_sum && t.abs() < 1e-18 * tail.abs() {
            break;
        }
        let kf = k as f64;
        term *= y / ((kf + 1.0) * (kf + 2.0));
        psi_a += 1.0 / (kf + 1.0);
        psi_b += 1.0 / (kf + 2.0);
    }
    (0.5 * x * i1_sum, tail)
}

fn k1_series(x: f64) -> f64 {
    let (i1, tail) = series_parts(x);
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * tail
}

/// Steed's continued fraction for `e^x·K0(x)`, then the recurrence step to
/// `K1`. Converges quickly for `x ≥ 2`.
fn k1_scaled_cf(x: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0_scaled = (PI / (2.0 * x)).sqrt() / s;
    k0_scaled * (x + 0.5 - h) / x
}

/// Nodes and weights of an `n`-point Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `Σ wᵢ·f(xᵢ)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub const MIN_HERMITE_ORDER: usize = 2;
pub const MAX_HERMITE_ORDER: usize = 128;
/// Order used by the amplify-and-forward outage rate unless told otherwise.
pub const DEFAULT_HERMITE_ORDER: usize = 40;

/// Gauss-Hermite rule for weight `e^(−x²)` on the real line, exact for
/// polynomials of degree up to `2n − 1`.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if !(MIN_HERMITE_ORDER..=MAX_HERMITE_ORDER).contains(&order) {
        return Err(Error::Parameter(format!(
            "Gauss-Hermite order must be in {MIN_HERMITE_ORDER}..={MAX_HERMITE_ORDER}, got {order}"
        )));
    }
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let mut z: f64 = 0.0;
    for i in 0..(n + 1) / 2 {
        // Initial guesses for the largest roots first.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (p1, p2) = orthonormal_hermite(n, z, pim4);
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                let (_, p2) = orthonormal_hermite(n, z, pim4);
                pp = (2.0 * nf).sqrt() * p2;
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!("Gauss-Hermite root {i} of order {n}")));
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    // Ascending node order.
    nodes.reverse();
    weights.reverse();
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { order, nodes, weights })
}

/// Values of the orthonormal Hermite polynomials of degree `n` and `n − 1` at `z`.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}

/// Shared Gauss-Hermite rules; each order is built once per process.
pub fn gauss_hermite_cached(order: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&order) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(gauss_hermite(order)?);
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(order, Arc::clone(&rule));
    Ok(rule)
}

/// Gauss-Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order < 1 || order > 512 {
        return Err(Error::Parameter(format!("Gauss-Legendre order must be in 1..=512, got {order}")));
    }
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { order, nodes, weights })
}
