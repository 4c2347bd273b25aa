//! Scenario parameters, per-hop statistics and the mapping between the target
//! spectral efficiency and the outage threshold.
//!
//! Doppler rates are expressed per slot, so every rate this crate returns is in
//! slot⁻¹ and every duration in slots.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::af::AfPathStats;
use crate::df::DfPathStats;
use crate::error::{Error, Result};

/// Relaying protocol used by every relay of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelayMode {
    /// Decode-and-forward: the path is as good as its weaker hop.
    Df,
    /// Fixed-gain amplify-and-forward.
    Af,
}

impl RelayMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelayMode::Df => "df",
            RelayMode::Af => "af",
        }
    }
}

impl fmt::Display for RelayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "df" => Ok(RelayMode::Df),
            "af" => Ok(RelayMode::Af),
            other => Err(Error::Parameter(format!(
                "relay mode must be `df` or `af` (systems mixing both are not supported), got `{other}`"
            ))),
        }
    }
}

/// Mean-square gains of the two hops through one relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayPath {
    /// E[α²] of the source → relay hop.
    pub omega_sk: f64,
    /// E[α²] of the relay → destination hop.
    pub omega_kd: f64,
}

/// Maximum Doppler rates (slot⁻¹) of the source, the destination and each relay.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerRates {
    pub source: f64,
    pub destination: f64,
    pub relays: Vec<f64>,
}

/// One hop's mean-square gain and the standard deviation of the envelope's
/// time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopStats {
    pub omega: f64,
    pub sigma_dot: f64,
}

impl HopStats {
    /// Statistics of a hop between terminals with Doppler rates `f_a` and `f_b`.
    pub fn new(omega: f64, f_a: f64, f_b: f64) -> Result<Self> {
        let var = derivative_variance(omega, f_a, f_b)?;
        Ok(HopStats {
            omega,
            sigma_dot: var.sqrt(),
        })
    }

    pub fn derivative_variance(&self) -> f64 {
        self.sigma_dot * self.sigma_dot
    }
}

/// Both hops of the dual-hop path through relay `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats {
    pub first: HopStats,
    pub second: HopStats,
}

/// Amplitude threshold below which the selected path is in capacity outage.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct OutageThreshold {
    pub z: f64,
}

impl OutageThreshold {
    pub fn new(z: f64) -> Result<Self> {
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("threshold must be finite and >= 0, got {z}")));
        }
        Ok(OutageThreshold { z })
    }
}

/// Variance of the envelope derivative of a mobile-to-mobile Rayleigh hop,
/// `π²·Ω·(f_a² + f_b²)`.
pub fn derivative_variance(omega: f64, f_a: f64, f_b: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    if !(f_a >= 0.0) || !(f_b >= 0.0) || !f_a.is_finite() || !f_b.is_finite() {
        return Err(Error::Domain(format!(
            "Doppler rates must be finite and >= 0, got ({f_a}, {f_b})"
        )));
    }
    Ok(PI * PI * omega * (f_a * f_a + f_b * f_b))
}

/// Threshold `Z = sqrt((2^(2R) − 1)/γ)` for spectral efficiency `rate` (bps/Hz)
/// and linear transmit SNR `snr`.
pub fn outage_threshold(rate: f64, snr: f64) -> Result<OutageThreshold> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::Domain(format!("snr must be > 0, got {snr}")));
    }
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("rate must be finite and >= 0, got {rate}")));
    }
    // expm1 keeps the small-rate end accurate.
    let gap = (2.0 * rate * LN_2).exp_m1();
    Ok(OutageThreshold {
        z: (gap / snr).sqrt(),
    })
}

/// Mutual information `½·log₂(1 + γ·w²)` of the selected dual-hop path.
pub fn mutual_information(w_max: f64, snr: f64) -> f64 {
    0.5 * (snr * w_max * w_max).ln_1p() / LN_2
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// A complete scenario: relays, gains, Doppler rates, SNR, rate and mode.
///
/// Construction validates every invariant, so a `SystemConfig` in hand is
/// always usable by the analytics and the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    paths: Vec<RelayPath>,
    doppler: DopplerRates,
    snr: f64,
    rate: f64,
    mode: RelayMode,
}

impl SystemConfig {
    pub fn new(
        paths: Vec<RelayPath>,
        doppler: DopplerRates,
        snr: f64,
        rate: f64,
        mode: RelayMode,
    ) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Parameter("at least one relay is required".into()));
        }
        if doppler.relays.len() != paths.len() {
            return Err(Error::Parameter(format!(
                "{} relay Doppler rates given for {} relays",
                doppler.relays.len(),
                paths.len()
            )));
        }
        for (k, p) in paths.iter().enumerate() {
            if !(p.omega_sk > 0.0) || !p.omega_sk.is_finite() {
                return Err(Error::Domain(format!("omega_sk of relay {} must be > 0, got {}", k + 1, p.omega_sk)));
            }
            if !(p.omega_kd > 0.0) || !p.omega_kd.is_finite() {
                return Err(Error::Domain(format!("omega_kd of relay {} must be > 0, got {}", k + 1, p.omega_kd)));
            }
        }
        let all = [doppler.source, doppler.destination]
            .into_iter()
            .chain(doppler.relays.iter().copied());
        for f in all {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::Domain(format!("Doppler rates must be finite and >= 0, got {f}")));
            }
        }
        for (k, &f_k) in doppler.relays.iter().enumerate() {
            if doppler.source == 0.0 && doppler.destination == 0.0 && f_k == 0.0 {
                return Err(Error::Domain(format!(
                    "path through relay {} is static (all Doppler rates are zero)",
                    k + 1
                )));
            }
        }
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(Error::Domain(format!("snr must be > 0, got {snr}")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("rate must be > 0, got {rate}")));
        }
        Ok(SystemConfig {
            paths,
            doppler,
            snr,
            rate,
            mode,
        })
    }

    /// Scenario with `m` identical relays, fixed source and destination and a
    /// common relay Doppler rate.
    pub fn symmetric(m: usize, omega: f64, relay_doppler: f64, snr: f64, rate: f64, mode: RelayMode) -> Result<Self> {
        let paths = vec![
            RelayPath {
                omega_sk: omega,
                omega_kd: omega,
            };
            m
        ];
        let doppler = DopplerRates {
            source: 0.0,
            destination: 0.0,
            relays: vec![relay_doppler; m],
        };
        SystemConfig::new(paths, doppler, snr, rate, mode)
    }

    pub fn relays(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[RelayPath] {
        &self.paths
    }

    pub fn doppler(&self) -> &DopplerRates {
        &self.doppler
    }

    /// Linear P_T/N₀.
    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mode(&self) -> RelayMode {
        self.mode
    }

    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        SystemConfig::new(self.paths.clone(), self.doppler.clone(), snr, self.rate, self.mode)
    }

    pub fn with_mode(&self, mode: RelayMode) -> Self {
        SystemConfig { mode, ..self.clone() }
    }

    /// Resize the relay set. Only allowed when every relay is identical.
    pub fn with_relays(&self, m: usize) -> Result<Self> {
        if m == self.relays() {
            return Ok(self.clone());
        }
        let first = self.paths[0];
        let f0 = self.doppler.relays[0];
        let homogeneous = self.paths.iter().all(|p| *p == first) && self.doppler.relays.iter().all(|&f| f == f0);
        if !homogeneous {
            return Err(Error::Parameter(
                "cannot change the relay count of a scenario with heterogeneous relays".into(),
            ));
        }
        let doppler = DopplerRates {
            relays: vec![f0; m],
            ..self.doppler.clone()
        };
        SystemConfig::new(vec![first; m], doppler, self.snr, self.rate, self.mode)
    }

    pub fn threshold(&self) -> OutageThreshold {
        outage_threshold(self.rate, self.snr).expect("validated at construction")
    }

    /// Per-hop statistics of the path through relay `k` (0-based).
    pub fn path_stats(&self, k: usize) -> PathStats {
        let p = self.paths[k];
        let f_k = self.doppler.relays[k];
        PathStats {
            first: HopStats::new(p.omega_sk, self.doppler.source, f_k).expect("validated at construction"),
            second: HopStats::new(p.omega_kd, f_k, self.doppler.destination).expect("validated at construction"),
        }
    }

    /// Doppler rate pairs `(f_a, f_b)` of the two hops of path `k`.
    pub fn hop_dopplers(&self, k: usize) -> [(f64, f64); 2] {
        let f_k = self.doppler.relays[k];
        [(self.doppler.source, f_k), (f_k, self.doppler.destination)]
    }

    pub fn df_paths(&self) -> Vec<DfPathStats> {
        (0..self.relays()).map(|k| DfPathStats::from_path(&self.path_stats(k))).collect()
    }

    pub fn af_paths(&self) -> Vec<AfPathStats> {
        (0..self.relays())
            .map(|k| AfPathStats::from_path(&self.path_stats(k), self.snr).expect("validated at construction"))
            .collect()
    }
}
