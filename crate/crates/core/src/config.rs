//! Sweep configuration files.
//!
//! The format is line oriented: `[section]` headers, `key = value` pairs,
//! and `#` comments. Lists are comma separated. Every key is optional; an
//! empty file describes the reference scenario (three sections below, all
//! defaults shown).
//!
//! ```text
//! [system]
//! relays = 1          # M
//! mode = df           # df | af
//! omega = 0.5         # both hops; or omega_sk / omega_kd, scalar or M values
//! rate = 1            # bps/Hz
//!
//! [doppler]
//! source = 0          # slot⁻¹
//! destination = 0
//! relays = 1          # scalar or M values
//!
//! [sweep]
//! snr_db = 0, 5, 10, 15, 20, 25, 30
//! normalize_by = 1    # f_m0
//! outputs = both      # aor | aod | both
//! validate = false
//! mc_samples = 20000000
//! mc_reps = 1
//! mc_target_crossings = 0
//! mc_max_samples = 4000000000
//! seed = 1
//! quadrature_order = 40
//! tolerance = 0.05
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special::{DEFAULT_HERMITE_ORDER, MAX_HERMITE_ORDER};
use crate::af::MIN_AOR_ORDER;
use crate::system::{db_to_linear, DopplerRates, RelayMode, RelayPath, SystemConfig};

/// Which normalized statistics a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outputs {
    Aor,
    Aod,
    Both,
}

impl Outputs {
    pub fn aor(self) -> bool {
        matches!(self, Outputs::Aor | Outputs::Both)
    }

    pub fn aod(self) -> bool {
        matches!(self, Outputs::Aod | Outputs::Both)
    }
}

/// Monte Carlo budget per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McBudget {
    /// Minimum samples per repetition.
    pub samples: u64,
    pub reps: usize,
    /// When non-zero, raise the sample count until this many crossings are
    /// expected from the closed-form rate.
    pub target_crossings: u64,
    /// Ceiling on samples per repetition after that adjustment.
    pub max_samples: u64,
}

/// A validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Scenario template; its SNR is replaced at every grid point.
    pub config: SystemConfig,
    pub snr_db: Vec<f64>,
    /// Doppler rate `f_m0` used to normalize rates and durations.
    pub normalize_by: f64,
    pub outputs: Outputs,
    pub validate: bool,
    pub mc: McBudget,
    pub seed: u64,
    pub quadrature_order: usize,
    /// Relative tolerance of the agreement flag.
    pub tolerance: f64,
}

impl SweepSpec {
    pub fn with_mode(mut self, mode: RelayMode) -> Self {
        self.config = self.config.with_mode(mode);
        self
    }

    pub fn with_relays(mut self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("relay count must be >= 1".into()));
        }
        self.config = self.config.with_relays(m)?;
        Ok(self)
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SweepSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

struct Entry {
    line: usize,
    value: String,
}

const KEYS: &[(&str, &[&str])] = &[
    ("system", &["relays", "mode", "omega", "omega_sk", "omega_kd", "rate"]),
    ("doppler", &["source", "destination", "relays"]),
    (
        "sweep",
        &[
            "snr_db",
            "normalize_by",
            "outputs",
            "validate",
            "mc_samples",
            "mc_reps",
            "mc_target_crossings",
            "mc_max_samples",
            "seed",
            "quadrature_order",
            "tolerance",
        ],
    ),
];

fn err(line: Option<usize>, field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        field: Some(field.to_string()),
        message: message.into(),
    }
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<SweepSpec> {
    let entries = tokenize(text)?;
    Fields { entries }.build()
}

fn tokenize(text: &str) -> Result<HashMap<String, Entry>> {
    let mut entries = HashMap::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                line: Some(line),
                field: None,
                message: format!("malformed section header `{content}`"),
            })?;
            let name = name.trim();
            section = Some(
                KEYS.iter()
                    .find(|(s, _)| *s == name)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| Error::Config {
                        line: Some(line),
                        field: None,
                        message: format!("unknown section `[{name}]`; expected [system], [doppler] or [sweep]"),
                    })?,
            );
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line: Some(line),
            field: None,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let Some(section) = section else {
            return Err(err(Some(line), key, "key outside of any section"));
        };
        let allowed = KEYS.iter().find(|(s, _)| *s == section).expect("known section").1;
        if !allowed.contains(&key) {
            return Err(err(
                Some(line),
                key,
                format!("unknown key in [{section}]; expected one of {}", allowed.join(", ")),
            ));
        }
        let full = format!("{section}.{key}");
        if let Some(prev) = entries.get(&full) {
            let prev: &Entry = prev;
            return Err(err(Some(line), &full, format!("duplicate key (first set on line {})", prev.line)));
        }
        entries.insert(
            full,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    Ok(entries)
}

struct Fields {
    entries: HashMap<String, Entry>,
}

impl Fields {
    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .parse()
            .map(Some)
            .map_err(|_| err(Some(e.line), key, format!("expected {what}, got `{}`", e.value)))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(Some(e.line), key, format!("expected a finite number, got `{t}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Scalar or one value per relay, each checked against `ok`.
    fn per_relay(&self, key: &str, m: usize, default: f64, ok: fn(f64) -> bool, range: &str) -> Result<Vec<f64>> {
        let values = match self.list(key)? {
            None => return Ok(vec![default; m]),
            Some(v) if v.len() == 1 => vec![v[0]; m],
            Some(v) if v.len() == m => v,
            Some(v) => {
                return Err(err(
                    self.line(key),
                    key,
                    format!("expected 1 or {m} values (one per relay), got {}", v.len()),
                ))
            }
        };
        if let Some(bad) = values.iter().find(|&&v| !ok(v)) {
            return Err(err(self.line(key), key, format!("value {bad} out of range; expected {range}")));
        }
        Ok(values)
    }

    fn scalar(&self, key: &str, default: f64, ok: fn(f64) -> bool, range: &str) -> Result<f64> {
        let v = self.parse::<f64>(key, "a number")?.unwrap_or(default);
        if !v.is_finite() || !ok(v) {
            return Err(err(self.line(key), key, format!("value {v} out of range; expected {range}")));
        }
        Ok(v)
    }

    fn build(&self) -> Result<SweepSpec> {
        let positive = |v: f64| v > 0.0;
        let non_negative = |v: f64| v >= 0.0;

        let m = self.parse::<usize>("system.relays", "a positive integer")?.unwrap_or(1);
        if m == 0 {
            return Err(err(self.line("system.relays"), "system.relays", "relay count must be >= 1"));
        }
        let mode = match self.entries.get("system.mode") {
            None => RelayMode::Df,
            Some(e) => e
                .value
                .parse::<RelayMode>()
                .map_err(|x| err(Some(e.line), "system.mode", x.to_string()))?,
        };
        if self.entries.contains_key("system.omega")
            && (self.entries.contains_key("system.omega_sk") || self.entries.contains_key("system.omega_kd"))
        {
            return Err(err(
                self.line("system.omega"),
                "system.omega",
                "set either omega or omega_sk/omega_kd, not both",
            ));
        }
        let omega = self.per_relay("system.omega", m, 0.5, positive, "> 0")?;
        let omega_sk = if self.entries.contains_key("system.omega_sk") {
            self.per_relay("system.omega_sk", m, 0.5, positive, "> 0")?
        } else {
            omega.clone()
        };
        let omega_kd = if self.entries.contains_key("system.omega_kd") {
            self.per_relay("system.omega_kd", m, 0.5, positive, "> 0")?
        } else {
            omega
        };
        let rate = self.scalar("system.rate", 1.0, positive, "> 0")?;

        let source = self.scalar("doppler.source", 0.0, non_negative, ">= 0")?;
        let destination = self.scalar("doppler.destination", 0.0, non_negative, ">= 0")?;
        let relays = self.per_relay("doppler.relays", m, 1.0, non_negative, ">= 0")?;
        if source == 0.0 && destination == 0.0 {
            if let Some(k) = relays.iter().position(|&f| f == 0.0) {
                return Err(err(
                    self.line("doppler.relays"),
                    "doppler.relays",
                    format!("path through relay {} is static: every Doppler rate on it is zero", k + 1),
                ));
            }
        }

        let snr_db = self
            .list("sweep.snr_db")?
            .unwrap_or_else(|| vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        if snr_db.is_empty() {
            return Err(err(self.line("sweep.snr_db"), "sweep.snr_db", "grid must not be empty"));
        }
        if snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(err(self.line("sweep.snr_db"), "sweep.snr_db", "grid must be strictly increasing"));
        }
        let normalize_by = self.scalar("sweep.normalize_by", 1.0, positive, "> 0")?;
        let outputs = match self.entries.get("sweep.outputs") {
            None => Outputs::Both,
            Some(e) => match e.value.to_ascii_lowercase().as_str() {
                "aor" => Outputs::Aor,
                "aod" => Outputs::Aod,
                "both" => Outputs::Both,
                other => {
                    return Err(err(
                        Some(e.line),
                        "sweep.outputs",
                        format!("expected aor, aod or both, got `{other}`"),
                    ))
                }
            },
        };
        let validate = self.parse::<bool>("sweep.validate", "true or false")?.unwrap_or(false);
        let samples = self.parse::<u64>("sweep.mc_samples", "a positive integer")?.unwrap_or(20_000_000);
        if samples == 0 {
            return Err(err(self.line("sweep.mc_samples"), "sweep.mc_samples", "must be >= 1"));
        }
        let reps = self.parse::<usize>("sweep.mc_reps", "a positive integer")?.unwrap_or(1);
        if reps == 0 {
            return Err(err(self.line("sweep.mc_reps"), "sweep.mc_reps", "must be >= 1"));
        }
        let target_crossings = self
            .parse::<u64>("sweep.mc_target_crossings", "a non-negative integer")?
            .unwrap_or(0);
        let max_samples = self
            .parse::<u64>("sweep.mc_max_samples", "a positive integer")?
            .unwrap_or(4_000_000_000);
        if max_samples < samples {
            return Err(err(
                self.line("sweep.mc_max_samples"),
                "sweep.mc_max_samples",
                format!("must be >= mc_samples ({samples})"),
            ));
        }
        let seed = self.parse::<u64>("sweep.seed", "a non-negative integer")?.unwrap_or(1);
        let order = self
            .parse::<usize>("sweep.quadrature_order", "an integer")?
            .unwrap_or(DEFAULT_HERMITE_ORDER);
        if !(MIN_AOR_ORDER..=MAX_HERMITE_ORDER).contains(&order) {
            return Err(err(
                self.line("sweep.quadrature_order"),
                "sweep.quadrature_order",
                format!("expected {MIN_AOR_ORDER}..={MAX_HERMITE_ORDER}, got {order}"),
            ));
        }
        let tolerance = self.scalar("sweep.tolerance", 0.05, positive, "> 0")?;

        let paths = omega_sk
            .iter()
            .zip(&omega_kd)
            .map(|(&omega_sk, &omega_kd)| RelayPath { omega_sk, omega_kd })
            .collect();
        let doppler = DopplerRates {
            source,
            destination,
            relays,
        };
        let config = SystemConfig::new(paths, doppler, db_to_linear(snr_db[0]), rate, mode).map_err(|e| Error::Config {
            line: None,
            field: None,
            message: e.to_string(),
        })?;
        Ok(SweepSpec {
            config,
            snr_db,
            normalize_by,
            outputs,
            validate,
            mc: McBudget {
                samples,
                reps,
                target_crossings,
                max_samples,
            },
            seed,
            quadrature_order: order,
            tolerance,
        })
    }
}
