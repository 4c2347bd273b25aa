//! Mobile-to-mobile Rayleigh fading traces.
//!
//! A hop whose terminals move with maximum Doppler rates `f_a` and `f_b` has
//! the double-ring Doppler spectrum: the law of `f_a·cos θ_a + f_b·cos θ_b`
//! with independent uniform angles. Traces are synthesized in the frequency
//! domain. Every resolved frequency bin inside the band carries one complex
//! sinusoid whose power is the spectral mass of that bin and whose phase is
//! uniform. An inverse FFT gives the complex gain `g(t)`, and a second one
//! with `j2πν` weights gives `ġ(t)` exactly.
//!
//! The trace is periodic in its length, and its time-average power is exactly
//! `Ω`. With `f_b = 0` the spectrum is the classic Jakes spectrum of a
//! fixed-to-mobile link.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest admissible `dt·(f_a + f_b)` for a stored trace.
pub const MAX_OVERSAMPLING_PRODUCT: f64 = 1.0 / 32.0;
/// Default `dt·(f_a + f_b)`.
pub const DEFAULT_OVERSAMPLING_PRODUCT: f64 = 1.0 / 64.0;

const TRACE_MAGIC: &[u8; 8] = b"OKTRACE1";
/// Angle nodes used to integrate the inner ring of the double-ring law.
const RING_NODES: usize = 1024;

/// Sampled envelope of one hop.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingTrace {
    /// Envelope `|g(t_i)|`, non-negative.
    pub samples: Vec<f64>,
    /// Sampling interval, slots.
    pub dt: f64,
    /// Target `E[α²]`.
    pub omega: f64,
    pub f_a: f64,
    pub f_b: f64,
    /// Seed the trace was generated from; `None` for traces read from disk.
    pub seed: Option<u64>,
}

impl FadingTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Sample mean of `α²`.
    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|a| a * a).sum::<f64>() / self.samples.len() as f64
    }

    /// Kolmogorov-Smirnov distance between the empirical envelope law and
    /// the Rayleigh CDF `1 − exp(−w²/Ω)`.
    pub fn rayleigh_ks_distance(&self) -> f64 {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let f = -(-w * w / self.omega).exp_m1();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn check_hop(omega: f64, f_a: f64, f_b: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    if !(f_a >= 0.0 && f_b >= 0.0) || !(f_a + f_b).is_finite() {
        return Err(Error::Domain(format!("Doppler rates must be finite and >= 0, got ({f_a}, {f_b})")));
    }
    if f_a + f_b == 0.0 {
        return Err(Error::Domain("a hop with both Doppler rates zero is static".into()));
    }
    Ok(())
}

/// Trace of `n_samples` envelope samples spaced `dt` slots apart.
pub fn generate_m2m_trace(omega: f64, f_a: f64, f_b: f64, dt: f64, n_samples: usize, seed: u64) -> Result<FadingTrace> {
    check_hop(omega, f_a, f_b)?;
    if !(dt > 0.0) || dt * (f_a + f_b) > MAX_OVERSAMPLING_PRODUCT {
        return Err(Error::Parameter(format!(
            "dt·(f_a + f_b) = {} exceeds the oversampling bound 1/32",
            dt * (f_a + f_b)
        )));
    }
    if n_samples < 2 {
        return Err(Error::Parameter(format!("a trace needs at least 2 samples, got {n_samples}")));
    }
    let synth = Synthesizer::new(omega, f_a, f_b, dt, n_samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![Complex64::default(); n_samples];
    synth.synthesize_gain(&mut rng, &mut g);
    Ok(FadingTrace {
        samples: g.iter().map(|c| c.norm_sqr().sqrt()).collect(),
        dt,
        omega,
        f_a,
        f_b,
        seed: Some(seed),
    })
}

/// Trace with the default sampling interval `1/(64·(f_a + f_b))`.
pub fn generate_default_trace(omega: f64, f_a: f64, f_b: f64, n_samples: usize, seed: u64) -> Result<FadingTrace> {
    check_hop(omega, f_a, f_b)?;
    generate_m2m_trace(omega, f_a, f_b, DEFAULT_OVERSAMPLING_PRODUCT / (f_a + f_b), n_samples, seed)
}

/// Sample variance of the central differences `(α[i+1] − α[i−1])/(2·dt)`.
pub fn trace_derivative_variance(trace: &FadingTrace) -> Result<f64> {
    let s = &trace.samples;
    if s.len() < 3 {
        return Err(Error::Parameter(format!(
            "derivative variance needs at least 3 samples, got {}",
            s.len()
        )));
    }
    let d: Vec<f64> = s.windows(3).map(|w| (w[2] - w[0]) / (2.0 * trace.dt)).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let ss: f64 = d.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(if d.len() > 1 { ss / (n - 1.0) } else { 0.0 })
}

/// Binary dump: magic, then `dt`, `omega`, `f_a`, `f_b` and the samples, all
/// little-endian `f64`.
pub fn write_trace(path: impl AsRef<Path>, trace: &FadingTrace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(TRACE_MAGIC)?;
    for v in [trace.dt, trace.omega, trace.f_a, trace.f_b].iter().chain(&trace.samples) {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<FadingTrace> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < 40 || &bytes[..8] != TRACE_MAGIC {
        return Err(Error::Io("not a trace file (bad magic or truncated header)".into()));
    }
    if (bytes.len() - 8) % 8 != 0 {
        return Err(Error::Io("trace payload is not a whole number of f64 values".into()));
    }
    let mut values = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut next = || values.next().expect("header length checked");
    let (dt, omega, f_a, f_b) = (next(), next(), next(), next());
    Ok(FadingTrace {
        samples: values.collect(),
        dt,
        omega,
        f_a,
        f_b,
        seed: None,
    })
}

/// `P(f·cos θ ≤ x)` for uniform `θ`.
fn ring_cdf(x: f64, f: f64) -> f64 {
    if f == 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - (x / f).clamp(-1.0, 1.0).acos() / PI
}

/// `P(f_a·cos θ_a + f_b·cos θ_b ≤ x)`, outer angle by the midpoint rule.
fn double_ring_cdf(x: f64, f_a: f64, f_b: f64, cosines: &[f64]) -> f64 {
    if f_a == 0.0 || f_b == 0.0 {
        return ring_cdf(x, f_a + f_b);
    }
    // Integrate over the smaller ring so the inner CDF carries the sharper edge.
    let (outer, inner) = if f_a <= f_b { (f_a, f_b) } else { (f_b, f_a) };
    cosines.iter().map(|c| ring_cdf(x - outer * c, inner)).sum::<f64>() / cosines.len() as f64
}

/// Unit-power line spectrum on the FFT grid: bin index, frequency, amplitude.
#[derive(Debug)]
struct LineSpectrum {
    bins: Vec<(usize, f64, f64)>,
}

type SpectrumKey = (u64, u64, u64, usize);

fn line_spectrum(f_a: f64, f_b: f64, dt: f64, len: usize) -> Arc<LineSpectrum> {
    static CACHE: OnceLock<Mutex<HashMap<SpectrumKey, Arc<LineSpectrum>>>> = OnceLock::new();
    let key = (f_a.to_bits(), f_b.to_bits(), dt.to_bits(), len);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().expect("spectrum cache poisoned").get(&key) {
        return Arc::clone(s);
    }
    let spectrum = Arc::new(build_line_spectrum(f_a, f_b, dt, len));
    cache
        .lock()
        .expect("spectrum cache poisoned")
        .entry(key)
        .or_insert(spectrum)
        .clone()
}

fn build_line_spectrum(f_a: f64, f_b: f64, dt: f64, len: usize) -> LineSpectrum {
    let cosines: Vec<f64> = (0..RING_NODES)
        .map(|i| (PI * (i as f64 + 0.5) / RING_NODES as f64).cos())
        .collect();
    let df = 1.0 / (len as f64 * dt);
    let band = f_a + f_b;
    let reach = (band / df).ceil() as i64 + 1;
    let half = (len / 2) as i64;
    let lo = (-reach).max(half - len as i64 + 1);
    let hi = reach.min(half);
    let cdf = |j: i64| double_ring_cdf((j as f64 - 0.5) * df, f_a, f_b, &cosines);
    let mut bins = Vec::new();
    let mut below = cdf(lo);
    // Mass outside the represented bins folds into the extreme bins.
    let mut carry = below;
    for j in lo..=hi {
        let above = if j == hi { 1.0 } else { cdf(j + 1) };
        let mass = above - below + carry;
        carry = 0.0;
        below = above;
        if mass > 0.0 {
            let index = if j < 0 { (j + len as i64) as usize } else { j as usize };
            bins.push((index, j as f64 * df, mass.sqrt()));
        }
    }
    LineSpectrum { bins }
}

thread_local! {
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
}

/// Frequency-domain synthesizer for one hop and one block length.
pub(crate) struct Synthesizer {
    len: usize,
    amplitude: f64,
    spectrum: Arc<LineSpectrum>,
    fft: Arc<dyn Fft<f64>>,
}

impl Synthesizer {
    pub(crate) fn new(omega: f64, f_a: f64, f_b: f64, dt: f64, len: usize) -> Result<Self> {
        check_hop(omega, f_a, f_b)?;
        if len < 2 || !(dt > 0.0) {
            return Err(Error::Parameter("synthesizer needs len >= 2 and dt > 0".into()));
        }
        Ok(Synthesizer {
            len,
            amplitude: omega.sqrt(),
            spectrum: line_spectrum(f_a, f_b, dt, len),
            fft: PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len)),
        })
    }

    fn draw_phasors(&self, rng: &mut impl Rng) -> Vec<Complex64> {
        self.spectrum
            .bins
            .iter()
            .map(|&(_, _, a)| Complex64::from_polar(self.amplitude * a, 2.0 * PI * rng.gen::<f64>()))
            .collect()
    }

    fn scatter(
        &self,
        phasors: &[Complex64],
        weight: impl Fn(f64) -> Complex64,
        out: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
    ) {
        out.fill(Complex64::default());
        for (&(j, nu, _), &p) in self.spectrum.bins.iter().zip(phasors) {
            out[j] = p * weight(nu);
        }
        scratch.resize(self.fft.get_inplace_scratch_len(), Complex64::default());
        self.fft.process_with_scratch(out, scratch);
    }

    pub(crate) fn synthesize_gain(&self, rng: &mut impl Rng, g: &mut [Complex64]) {
        assert_eq!(g.len(), self.len);
        let phasors = self.draw_phasors(rng);
        self.scatter(&phasors, |_| Complex64::new(1.0, 0.0), g, &mut Vec::new());
    }

    /// Complex gain and its exact time derivative on the block grid.
    pub(crate) fn synthesize(
        &self,
        rng: &mut impl Rng,
        g: &mut [Complex64],
        gd: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
    ) {
        assert_eq!(g.len(), self.len);
        assert_eq!(gd.len(), self.len);
        let phasors = self.draw_phasors(rng);
        self.scatter(&phasors, |_| Complex64::new(1.0, 0.0), g, scratch);
        self.scatter(&phasors, |nu| Complex64::new(0.0, 2.0 * PI * nu), gd, scratch);
    }
}
