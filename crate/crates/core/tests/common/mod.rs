#![allow(dead_code)]

use outage_kit::af::{af_cdf, af_selection_variable, AfPathStats};
use outage_kit::system::{db_to_linear, RelayMode, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference scenario: Ω = 0.5 on every hop, R = 1, static source and
/// destination, relays moving with Doppler rate 1.
pub fn reference(m: usize, snr_db: f64, mode: RelayMode) -> SystemConfig {
    SystemConfig::symmetric(m, 0.5, 1.0, db_to_linear(snr_db), 1.0, mode).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// K1 by the ascending series
/// `1/x + ln(x/2)·I1(x) − (x/4)·Σ (ψ(k+1)+ψ(k+2))·(x²/4)^k/(k!(k+1)!)`.
pub fn k1_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut i1 = 0.0;
    let mut s = 0.0;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        // (x²/4)^k / (k!(k+1)!) built from logs to keep the loop obviously independent
        let lt = kf * q.ln() - ln_factorial(k) - ln_factorial(k + 1);
        let t = lt.exp();
        let psi = digamma_int(k + 1) + digamma_int(k + 2);
        i1 += t;
        s += psi * t;
        if t < 1e-20 * i1 && k > 2 {
            break;
        }
        k += 1;
    }
    1.0 / x + (x / 2.0).ln() * (x / 2.0) * i1 - x / 4.0 * s
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// ψ(n) for a positive integer `n`.
fn digamma_int(n: usize) -> f64 {
    -EULER_GAMMA + (1..n).map(|i| 1.0 / i as f64).sum::<f64>()
}

/// K1 from the large-argument expansion
/// `√(π/2x)·e^(−x)·Σ_k Π_{j≤k}(4 − (2j−1)²) / (k!·(8x)^k)`, truncated at its
/// smallest term.
pub fn k1_asymptotic(x: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let j = (2 * k - 1) as f64;
        let next = term * (4.0 - j * j) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

/// K1 from `∫₀^∞ e^(−x·cosh t)·cosh t dt` by the trapezoid rule, which
/// converges geometrically for this analytic, doubly decaying integrand.
pub fn k1_integral(x: f64) -> f64 {
    let h = 1.0 / 64.0;
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * t.cosh();
    let mut sum = 0.5 * f(0.0);
    let mut i = 1;
    loop {
        let v = f(i as f64 * h);
        sum += v;
        if v < 1e-20 * sum {
            break;
        }
        i += 1;
    }
    sum * h * (-x).exp()
}

/// Independent K1 oracle over `(0, ∞)`.
pub fn k1_oracle(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x)
    } else if x < 25.0 {
        k1_integral(x)
    } else {
        k1_asymptotic(x)
    }
}

/// `∫ x^k e^(−x²) dx` over the real line.
pub fn gaussian_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    // m_0 = √π, m_{k+2} = m_k·(k+1)/2
    (0..k / 2).fold(std::f64::consts::PI.sqrt(), |m, j| m * (2 * j + 1) as f64 / 2.0)
}

/// Standard deviation and mean of a sample.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Largest gap between `af_cdf` and the empirical CDF of `n` draws.
pub fn af_cdf_gap(path: &AfPathStats, zs: &[f64], n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut below = vec![0usize; zs.len()];
    for _ in 0..n {
        let a = (-path.omega_sk * (1.0 - rng.gen::<f64>()).ln()).sqrt();
        let b = (-path.omega_kd * (1.0 - rng.gen::<f64>()).ln()).sqrt();
        let w = af_selection_variable(a, b, path);
        for (count, &z) in below.iter_mut().zip(zs) {
            *count += (w <= z) as usize;
        }
    }
    zs.iter()
        .zip(&below)
        .map(|(&z, &c)| (af_cdf(z, path).unwrap() - c as f64 / n as f64).abs())
        .fold(0.0, f64::max)
}
