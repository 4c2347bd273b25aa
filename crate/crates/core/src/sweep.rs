//! SNR sweeps producing normalized, plot-ready CSV.

use std::io::Write;

use rayon::prelude::*;

use crate::combiner::{analyze_at, OutageReport};
use crate::config::SweepSpec;
use crate::error::{Error, Result};
use crate::montecarlo::{engine_dt, hop_layout, run_probes, EngineOptions, Probe};
use crate::system::{db_to_linear, RelayMode};

/// Schema token written on the first line of every CSV.
pub const SCHEMA: &str = "outage-kit-sweep/1";

pub const COLUMNS: [&str; 14] = [
    "snr_db",
    "z",
    "mode",
    "relays",
    "outage_prob",
    "aor_norm",
    "aod_norm",
    "outage_prob_mc",
    "aor_mc_norm",
    "aor_mc_se",
    "aod_mc_norm",
    "aod_mc_se",
    "agree",
    "status",
];

/// One grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub z: f64,
    pub mode: RelayMode,
    pub relays: usize,
    pub analytic: std::result::Result<OutageReport, Error>,
    pub simulated: Option<std::result::Result<OutageReport, Error>>,
    /// Whether every requested simulated statistic is within tolerance.
    pub agree: Option<bool>,
}

impl SweepRow {
    pub fn error(&self) -> Option<&Error> {
        match (&self.analytic, &self.simulated) {
            (Err(e), _) | (_, Some(Err(e))) => Some(e),
            _ => None,
        }
    }
}

/// Process exit status of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Ok,
    ComputationError,
    Disagreement,
}

impl SweepStatus {
    pub fn code(self) -> i32 {
        match self {
            SweepStatus::Ok => 0,
            SweepStatus::ComputationError => 1,
            SweepStatus::Disagreement => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub spec: SweepSpec,
}

/// Evaluate every grid point. Errors stay attached to their row.
pub fn run_sweep(spec: &SweepSpec) -> SweepResult {
    let mut rows: Vec<SweepRow> = spec
        .snr_db
        .par_iter()
        .map(|&db| analytic_row(spec, db))
        .collect();
    if spec.validate {
        simulate(spec, &mut rows);
    }
    SweepResult {
        rows,
        spec: spec.clone(),
    }
}

fn analytic_row(spec: &SweepSpec, snr_db: f64) -> SweepRow {
    let config = spec.config.with_snr(db_to_linear(snr_db));
    let (z, analytic) = match config {
        Ok(c) => {
            let z = c.threshold().z;
            (z, analyze_at(&c, z, spec.quadrature_order))
        }
        Err(e) => (f64::NAN, Err(e)),
    };
    SweepRow {
        snr_db,
        z,
        mode: spec.config.mode(),
        relays: spec.config.relays(),
        analytic,
        simulated: None,
        agree: None,
    }
}

fn simulate(spec: &SweepSpec, rows: &mut [SweepRow]) {
    let layout = hop_layout(&spec.config);
    let dt = engine_dt(&layout);
    let mut probes = Vec::new();
    let mut owners = Vec::new();
    for (i, row) in rows.iter_mut().enumerate() {
        let config = match spec.config.with_snr(db_to_linear(row.snr_db)) {
            Ok(c) => c,
            Err(e) => {
                row.simulated = Some(Err(e));
                continue;
            }
        };
        let mut samples = spec.mc.samples;
        if let (true, Ok(report)) = (spec.mc.target_crossings > 0, &row.analytic) {
            let per_rep = spec.mc.target_crossings as f64 / spec.mc.reps as f64;
            let wanted = (per_rep / (report.aor * dt)).ceil();
            if wanted.is_finite() {
                samples = samples.max(wanted.min(spec.mc.max_samples as f64) as u64);
            } else {
                samples = spec.mc.max_samples;
            }
        }
        probes.push(Probe::from_config(&config, row.z, samples));
        owners.push(i);
    }
    let opts = EngineOptions {
        master_seed: spec.seed,
        n_reps: spec.mc.reps,
        threads: None,
    };
    match run_probes(&layout, &probes, &opts) {
        Ok(results) => {
            for (i, result) in owners.into_iter().zip(results) {
                let row = &mut rows[i];
                if let Ok(an) = &row.analytic {
                    row.agree = Some(agrees(an, &result.report, spec));
                }
                row.simulated = Some(Ok(result.report));
            }
        }
        Err(e) => {
            for i in owners {
                rows[i].simulated = Some(Err(e.clone()));
            }
        }
    }
}

fn within(mc: f64, an: f64, tol: f64) -> bool {
    mc.is_finite() && (mc - an).abs() <= tol * an.abs()
}

fn agrees(an: &OutageReport, mc: &OutageReport, spec: &SweepSpec) -> bool {
    (!spec.outputs.aor() || within(mc.aor, an.aor, spec.tolerance))
        && (!spec.outputs.aod() || within(mc.aod, an.aod, spec.tolerance))
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl SweepResult {
    pub fn status(&self) -> SweepStatus {
        if self.rows.iter().any(|r| r.error().is_some()) {
            SweepStatus::ComputationError
        } else if self.rows.iter().any(|r| r.agree == Some(false)) {
            SweepStatus::Disagreement
        } else {
            SweepStatus::Ok
        }
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        writeln!(out, "# schema={SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS).map_err(csv_error)?;
        let f0 = self.spec.normalize_by;
        let (want_aor, want_aod) = (self.spec.outputs.aor(), self.spec.outputs.aod());
        for row in &self.rows {
            let mut rec: Vec<String> = vec![num(row.snr_db), num(row.z), row.mode.to_string(), row.relays.to_string()];
            match &row.analytic {
                Ok(a) => rec.extend([
                    num(a.outage_prob),
                    if want_aor { num(a.aor / f0) } else { String::new() },
                    if want_aod { num(a.aod * f0) } else { String::new() },
                ]),
                Err(_) => rec.extend([String::new(), String::new(), String::new()]),
            }
            match &row.simulated {
                Some(Ok(s)) => {
                    let se = s.standard_errors.expect("simulated reports carry errors");
                    rec.extend([
                        num(s.outage_prob),
                        if want_aor { num(s.aor / f0) } else { String::new() },
                        if want_aor { num(se.aor / f0) } else { String::new() },
                        if want_aod { num(s.aod * f0) } else { String::new() },
                        if want_aod { num(se.aod * f0) } else { String::new() },
                    ]);
                }
                _ => rec.extend(std::iter::repeat(String::new()).take(5)),
            }
            rec.push(match row.agree {
                Some(true) => "pass".into(),
                Some(false) => "fail".into(),
                None => String::new(),
            });
            rec.push(match row.error() {
                Some(e) => format!("error: {e}"),
                None => "ok".into(),
            });
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiner::{system_aor, PathSet};
    use crate::config::parse_config;

    #[test]
    fn single_point_df_matches_closed_form() {
        let spec = parse_config("[sweep]\nsnr_db = 10\n").unwrap();
        let result = run_sweep(&spec);
        assert_eq!(result.rows.len(), 1);
        let row = &result.rows[0];
        let cfg = spec.config.with_snr(10.0).unwrap();
        let paths = PathSet::from_config(&cfg);
        let an = row.analytic.as_ref().unwrap();
        assert_eq!(an.aor, system_aor(cfg.threshold().z, &paths).unwrap());
        assert_eq!(result.status(), SweepStatus::Ok);
        let csv = result.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "# schema=outage-kit-sweep/1");
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), COLUMNS.len());
        assert_eq!(fields[0], "10");
        assert_eq!(fields[2], "df");
        assert_eq!(fields[5].parse::<f64>().unwrap(), an.aor);
        assert_eq!(fields[13], "ok");
    }

    #[test]
    fn normalization_and_outputs() {
        let spec = parse_config("[sweep]\nsnr_db = 10\nnormalize_by = 2\noutputs = aor\n").unwrap();
        let result = run_sweep(&spec);
        let an = result.rows[0].analytic.clone().unwrap();
        let csv = result.to_csv_string();
        let fields: Vec<String> = csv.lines().nth(2).unwrap().split(',').map(String::from).collect();
        assert_eq!(fields[5].parse::<f64>().unwrap(), an.aor / 2.0);
        assert_eq!(fields[6], "");
    }

    #[test]
    fn analytic_csv_is_stable() {
        let spec = parse_config("[system]\nrelays = 2\nmode = af\n").unwrap();
        assert_eq!(run_sweep(&spec).to_csv_string(), run_sweep(&spec).to_csv_string());
    }

    #[test]
    fn status_codes() {
        assert_eq!(SweepStatus::Ok.code(), 0);
        assert_eq!(SweepStatus::ComputationError.code(), 1);
        assert_eq!(SweepStatus::Disagreement.code(), 2);
    }
}
