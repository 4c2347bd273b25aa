//! System level statistics of selection over `M` independent relay paths.
//!
//! With independent paths the selected maximum crosses `Z` downward exactly
//! when one path crosses while every other path is already below `Z`, so
//!
//! ```text
//! N(Z) = Σ_k P_k(Z)·N_k(Z),   P_k(Z) = Π_{i≠k} F_i(Z)
//! T(Z) = Π_k F_k(Z) / N(Z)  = (Σ_k N_k(Z)/F_k(Z))⁻¹
//! ```

use std::fmt;

use crate::af::{af_cdf, af_path_aor_checked, AfPathStats};
use crate::df::{df_cdf, df_path_aor, DfPathStats};
use crate::error::{Error, Result};
use crate::special::DEFAULT_HERMITE_ORDER;
use crate::system::{OutageThreshold, RelayMode, SystemConfig};

/// Below this every per-path CDF is treated as underflowed.
const CDF_UNDERFLOW: f64 = 1e-300;

/// Per-path statistics of a homogeneous-mode system.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSet {
    Df(Vec<DfPathStats>),
    /// AF paths and the Gauss-Hermite order used for their outage rates.
    Af { paths: Vec<AfPathStats>, order: usize },
}

impl PathSet {
    pub fn from_config(config: &SystemConfig) -> Self {
        PathSet::from_config_with_order(config, DEFAULT_HERMITE_ORDER)
    }

    pub fn from_config_with_order(config: &SystemConfig, order: usize) -> Self {
        match config.mode() {
            RelayMode::Df => PathSet::Df(config.df_paths()),
            RelayMode::Af => PathSet::Af {
                paths: config.af_paths(),
                order,
            },
        }
    }

    pub fn mode(&self) -> RelayMode {
        match self {
            PathSet::Df(_) => RelayMode::Df,
            PathSet::Af { .. } => RelayMode::Af,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PathSet::Df(p) => p.len(),
            PathSet::Af { paths, .. } => paths.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `F_k(z)` for every path.
    pub fn cdfs(&self, z: f64) -> Result<Vec<f64>> {
        match self {
            PathSet::Df(p) => p.iter().map(|s| df_cdf(z, s)).collect(),
            PathSet::Af { paths, .. } => paths.iter().map(|s| af_cdf(z, s)).collect(),
        }
    }

    /// `N_k(z)` for every path.
    pub fn rates(&self, z: f64) -> Result<Vec<f64>> {
        let threshold = OutageThreshold { z };
        match self {
            PathSet::Df(p) => Ok(p.iter().map(|s| df_path_aor(threshold, s)).collect()),
            PathSet::Af { paths, order } => paths
                .iter()
                .map(|s| af_path_aor_checked(threshold, s, *order).map(|e| e.value))
                .collect(),
        }
    }
}

fn check_threshold(z: f64) -> Result<()> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {z}")));
    }
    Ok(())
}

/// `Π_{i≠k} F_i`, the probability that every path other than `k` (0-based)
/// is below the threshold.
pub fn conditional_prob_pk(k: usize, cdfs: &[f64]) -> Result<f64> {
    if k >= cdfs.len() {
        return Err(Error::Parameter(format!(
            "path index {k} out of range for {} paths",
            cdfs.len()
        )));
    }
    Ok(cdfs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, f)| f)
        .product())
}

fn combine_rate(cdfs: &[f64], rates: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (k, n) in rates.iter().enumerate() {
        total += conditional_prob_pk(k, cdfs)? * n;
    }
    Ok(total)
}

/// Average outage rate `N(z)` of the selected path (slot⁻¹).
pub fn system_aor(z: f64, paths: &PathSet) -> Result<f64> {
    check_threshold(z)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    combine_rate(&paths.cdfs(z)?, &paths.rates(z)?)
}

/// `Pr{max_k W_k ≤ z}`.
pub fn outage_probability(z: f64, paths: &PathSet) -> Result<f64> {
    check_threshold(z)?;
    Ok(paths.cdfs(z)?.iter().product())
}

/// Average outage duration `T(z)` in slots, from the reciprocal sum.
pub fn system_aod(z: f64, paths: &PathSet) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("outage duration needs z > 0, got {z}")));
    }
    aod_from_parts(&paths.cdfs(z)?, &paths.rates(z)?)
}

fn aod_from_parts(cdfs: &[f64], rates: &[f64]) -> Result<f64> {
    if cdfs.iter().any(|&f| f < CDF_UNDERFLOW) {
        return Err(Error::Domain(
            "per-path outage probability underflows; threshold too small for a duration".into(),
        ));
    }
    let inverse: f64 = rates.iter().zip(cdfs).map(|(n, f)| n / f).sum();
    Ok(1.0 / inverse)
}

/// Whether a report was computed in closed form or measured on traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Analytical,
    Simulated,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Analytical => "analytical",
            Source::Simulated => "simulated",
        })
    }
}

/// Standard errors attached to simulated reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardErrors {
    pub outage_prob: f64,
    pub aor: f64,
    pub aod: f64,
}

/// Outage statistics at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageReport {
    pub z: f64,
    pub outage_prob: f64,
    /// Average outage rate, slot⁻¹.
    pub aor: f64,
    /// Average outage duration, slots.
    pub aod: f64,
    pub source: Source,
    pub mode: RelayMode,
    pub relays: usize,
    pub standard_errors: Option<StandardErrors>,
}

/// Closed-form report at the configuration's own threshold.
pub fn analyze(config: &SystemConfig) -> Result<OutageReport> {
    analyze_at(config, config.threshold().z, DEFAULT_HERMITE_ORDER)
}

/// Closed-form report at an arbitrary threshold `z > 0`.
pub fn analyze_at(config: &SystemConfig, z: f64, order: usize) -> Result<OutageReport> {
    let paths = PathSet::from_config_with_order(config, order);
    if !(z > 0.0) {
        return Err(Error::Domain(format!("threshold must be > 0, got {z}")));
    }
    let cdfs = paths.cdfs(z)?;
    let rates = paths.rates(z)?;
    Ok(OutageReport {
        z,
        outage_prob: cdfs.iter().product(),
        aor: combine_rate(&cdfs, &rates)?,
        aod: aod_from_parts(&cdfs, &rates)?,
        source: Source::Analytical,
        mode: config.mode(),
        relays: config.relays(),
        standard_errors: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{db_to_linear, HopStats, PathStats};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference(m: usize, snr_db: f64, mode: RelayMode) -> SystemConfig {
        SystemConfig::symmetric(m, 0.5, 1.0, db_to_linear(snr_db), 1.0, mode).unwrap()
    }

    #[test]
    fn conditional_probability_examples() {
        assert_eq!(conditional_prob_pk(0, &[0.3]).unwrap(), 1.0);
        assert_eq!(conditional_prob_pk(1, &[0.5, 0.5, 0.5]).unwrap(), 0.25);
        assert_eq!(conditional_prob_pk(0, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(conditional_prob_pk(2, &[0.2, 0.4, 0.9]).unwrap(), 0.2 * 0.4);
        assert!(matches!(conditional_prob_pk(3, &[0.1, 0.2, 0.3]), Err(Error::Parameter(_))));
        assert!(conditional_prob_pk(0, &[]).is_err());
    }

    #[test]
    fn single_path_collapses() {
        for mode in [RelayMode::Df, RelayMode::Af] {
            let cfg = reference(1, 10.0, mode);
            let paths = PathSet::from_config(&cfg);
            let z = cfg.threshold().z;
            let n1 = paths.rates(z).unwrap()[0];
            let f1 = paths.cdfs(z).unwrap()[0];
            assert_eq!(system_aor(z, &paths).unwrap(), n1);
            assert_relative_eq!(system_aod(z, &paths).unwrap(), f1 / n1, max_relative = 1e-15);
            assert_eq!(outage_probability(z, &paths).unwrap(), f1);
        }
    }

    #[test]
    fn identical_paths_collapse() {
        for m in 1..=4 {
            let cfg = reference(m, 12.0, RelayMode::Df);
            let paths = PathSet::from_config(&cfg);
            let z = cfg.threshold().z;
            let one = PathSet::from_config(&cfg.with_relays(1).unwrap());
            let n1 = one.rates(z).unwrap()[0];
            let f = one.cdfs(z).unwrap()[0];
            assert_relative_eq!(
                system_aor(z, &paths).unwrap(),
                m as f64 * f.powi(m as i32 - 1) * n1,
                max_relative = 1e-14
            );
            assert_relative_eq!(system_aod(z, &paths).unwrap(), f / (m as f64 * n1), max_relative = 1e-14);
            assert_relative_eq!(outage_probability(z, &paths).unwrap(), f.powi(m as i32), max_relative = 1e-14);
        }
    }

    #[test]
    fn outage_probability_examples() {
        let paths = PathSet::from_config(&reference(2, 10.0, RelayMode::Df));
        assert_eq!(outage_probability(0.0, &paths).unwrap(), 0.0);
        assert_eq!(system_aor(0.0, &paths).unwrap(), 0.0);
        assert!(system_aod(0.0, &paths).is_err());
        assert!(system_aod(-1.0, &paths).is_err());
        assert!(outage_probability(-1.0, &paths).is_err());
        // Two identical paths with F = 0.1.
        let lambda = 4.0;
        let z = ((1.0f64 / 0.9).ln() / lambda).sqrt();
        assert_relative_eq!(outage_probability(z, &paths).unwrap(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn duration_underflow_is_reported() {
        let paths = PathSet::from_config(&reference(2, 10.0, RelayMode::Df));
        assert!(matches!(system_aod(1e-160, &paths), Err(Error::Domain(_))));
        assert!(system_aod(1e-100, &paths).unwrap() > 0.0);
    }

    #[test]
    fn two_duration_forms_agree() {
        for mode in [RelayMode::Df, RelayMode::Af] {
            for m in 1..=3 {
                for db in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
                    let cfg = reference(m, db, mode);
                    let paths = PathSet::from_config(&cfg);
                    let z = cfg.threshold().z;
                    let product = outage_probability(z, &paths).unwrap() / system_aor(z, &paths).unwrap();
                    assert_relative_eq!(system_aod(z, &paths).unwrap(), product, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn rate_vanishes_at_both_ends() {
        for mode in [RelayMode::Df, RelayMode::Af] {
            let paths = PathSet::from_config(&reference(3, 10.0, mode));
            assert!(system_aor(1e-6, &paths).unwrap() < 1e-12);
            assert!(system_aor(6.0, &paths).unwrap() < 1e-12);
            assert!(system_aor(0.4, &paths).unwrap() > 0.1);
        }
    }

    #[test]
    fn analyze_reports_consistent_fields() {
        let cfg = reference(3, 10.0, RelayMode::Af);
        let r = analyze(&cfg).unwrap();
        assert_eq!(r.source, Source::Analytical);
        assert_eq!(r.mode, RelayMode::Af);
        assert_eq!(r.relays, 3);
        assert!(r.standard_errors.is_none());
        assert_relative_eq!(r.aod * r.aor, r.outage_prob, max_relative = 1e-10);
        assert!(analyze_at(&cfg, 0.0, 40).is_err());
    }

    fn hetero_df(omegas: &[(f64, f64)], scale: f64, dopplers: &[(f64, f64, f64)]) -> PathSet {
        PathSet::Df(
            omegas
                .iter()
                .zip(dopplers)
                .map(|(&(a, b), &(fs, fk, fd))| {
                    let path = PathStats {
                        first: HopStats::new(a * scale, fs, fk).unwrap(),
                        second: HopStats::new(b * scale, fk, fd).unwrap(),
                    };
                    DfPathStats::from_path(&path)
                })
                .collect(),
        )
    }

    proptest! {
        #[test]
        fn more_relays_lower_outage(z in 0.01f64..3.0, m in 1usize..6, db in 0.0f64..30.0) {
            for mode in [RelayMode::Df, RelayMode::Af] {
                let small = PathSet::from_config(&reference(m, db, mode));
                let large = PathSet::from_config(&reference(m + 1, db, mode));
                let ps = outage_probability(z, &small).unwrap();
                let pl = outage_probability(z, &large).unwrap();
                prop_assert!(pl < ps || ps == 0.0 || ps == 1.0);
                prop_assert!(pl <= ps);
            }
        }

        #[test]
        fn duration_forms_agree_heterogeneous(
            o in prop::collection::vec((0.1f64..3.0, 0.1f64..3.0), 1..5),
            f in prop::collection::vec((0.0f64..2.0, 0.05f64..2.0, 0.0f64..2.0), 5),
            z in 0.05f64..2.0,
        ) {
            let paths = hetero_df(&o, 1.0, &f[..o.len()]);
            let cdfs = paths.cdfs(z).unwrap();
            prop_assume!(cdfs.iter().all(|&c| c > 1e-12));
            let n = system_aor(z, &paths).unwrap();
            prop_assume!(n > 1e-290);
            let t = system_aod(z, &paths).unwrap();
            let p = outage_probability(z, &paths).unwrap();
            prop_assert!(((t - p / n) / t).abs() < 1e-10);
            prop_assert!(n >= 0.0);
        }

        #[test]
        fn scaling_every_gain_rescales_threshold(
            o in prop::collection::vec((0.1f64..3.0, 0.1f64..3.0), 1..4),
            f in prop::collection::vec((0.0f64..2.0, 0.05f64..2.0, 0.0f64..2.0), 4),
            c in 0.2f64..5.0,
            z in 0.05f64..2.0,
        ) {
            let dop = &f[..o.len()];
            let base = hetero_df(&o, 1.0, dop);
            let scaled = hetero_df(&o, c * c, dop);
            let lhs = system_aor(z, &scaled).unwrap();
            let rhs = system_aor(z / c, &base).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }
    }
}
