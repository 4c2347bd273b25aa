//! Monte Carlo estimation of outage probability, rate and duration.
//!
//! Two levels are exposed. [`selection_process`] and [`count_crossings`] work
//! on sampled envelopes with plain sign-change counting. The block engine
//! behind [`run_probes`] and [`run_experiment`] is what the validation uses.
//! It synthesizes the complex gain and its exact derivative for every hop, so
//! between samples each gain is a cubic Hermite curve. Crossings of the
//! selected maximum are located on that curve by interval bounds and
//! bisection, so excursions shorter than a sample step are still counted and
//! the dwell time below the threshold is measured in continuous time.
//!
//! Blocks are periodic and independent. Every block is one realization of the
//! scenario, and standard errors come from the spread across blocks. Traces
//! are shared by every probe that runs on the same hop layout, so one
//! simulation serves all thresholds, relay counts and both relaying modes.

use rayon::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use smallvec::SmallVec;

use crate::af::select as af_select;
use crate::combiner::{OutageReport, PathSet, Source, StandardErrors};
use crate::error::{Error, Result};
use crate::fading::{FadingTrace, Synthesizer};
use crate::system::{RelayMode, SystemConfig};

/// Samples per engine block.
pub const BLOCK_LEN: usize = 1 << 16;
/// Engine `dt·(f_a + f_b)` for the fastest hop.
pub const ENGINE_OVERSAMPLING_PRODUCT: f64 = 1.0 / 8.0;
/// Bisection depth below one sample step (leaf width `dt/1024`).
const REFINE_DEPTH: u32 = 10;
/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "OUTAGE_KIT_THREADS";

/// Crossing bookkeeping of one sampled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CrossingStats {
    pub n_down: u64,
    /// Trace duration, slots.
    pub total_time: f64,
    /// Dwell time of complete below-threshold intervals, slots.
    pub outage_time: f64,
    /// Number of complete below-threshold intervals.
    pub n_outage_events: u64,
    /// All time spent below the threshold, including intervals cut by the
    /// trace boundaries.
    pub below_time: f64,
}

impl CrossingStats {
    pub fn aor(&self) -> f64 {
        self.n_down as f64 / self.total_time
    }

    pub fn aod(&self) -> f64 {
        self.outage_time / self.n_outage_events as f64
    }

    pub fn outage_fraction(&self) -> f64 {
        self.below_time / self.total_time
    }
}

/// Count downward crossings of `z` on a sampled sequence.
///
/// A down-crossing happens at `i` when `w[i−1] > z ≥ w[i]`. Each sample
/// stands for `dt` of time. Below-threshold runs touching either end of the
/// sequence are censored: they count in `below_time` but not in the duration
/// statistics.
pub fn count_crossings(w: &[f64], z: f64, dt: f64) -> CrossingStats {
    let mut stats = CrossingStats {
        total_time: w.len() as f64 * dt,
        ..Default::default()
    };
    let mut run: Option<(usize, bool)> = None;
    for (i, &x) in w.iter().enumerate() {
        let below = x <= z;
        if below {
            stats.below_time += dt;
            if run.is_none() {
                let crossed = i > 0;
                if crossed {
                    stats.n_down += 1;
                }
                run = Some((i, crossed));
            }
        } else if let Some((start, crossed)) = run.take() {
            if crossed {
                stats.n_outage_events += 1;
                stats.outage_time += (i - start) as f64 * dt;
            }
        }
    }
    stats
}

/// `W_max` on the common sample grid of `M` hop-trace pairs.
pub fn selection_process(traces: &[(FadingTrace, FadingTrace)], paths: &PathSet) -> Result<Vec<f64>> {
    if traces.is_empty() || traces.len() != paths.len() {
        return Err(Error::Parameter(format!(
            "{} trace pairs for {} paths",
            traces.len(),
            paths.len()
        )));
    }
    let (n, dt) = (traces[0].0.len(), traces[0].0.dt);
    for (a, b) in traces {
        if a.len() != n || b.len() != n || a.dt != dt || b.dt != dt {
            return Err(Error::Parameter("trace grids differ in length or sampling interval".into()));
        }
    }
    let mut w = vec![0.0f64; n];
    for (k, (a, b)) in traces.iter().enumerate() {
        let c = match paths {
            PathSet::Df(_) => None,
            PathSet::Af { paths, .. } => Some(paths[k].c),
        };
        for ((out, &x), &y) in w.iter_mut().zip(&a.samples).zip(&b.samples) {
            let v = match c {
                None => x.min(y),
                Some(c) => af_select(x, y, c),
            };
            *out = out.max(v);
        }
    }
    Ok(w)
}

/// Statistics of one hop: mean-square gain and the Doppler rates of its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopSpec {
    pub omega: f64,
    pub f_a: f64,
    pub f_b: f64,
}

/// Hops of every path of a scenario, source side first.
pub fn hop_layout(config: &SystemConfig) -> Vec<[HopSpec; 2]> {
    (0..config.relays())
        .map(|k| {
            let p = config.paths()[k];
            let [(fa1, fb1), (fa2, fb2)] = config.hop_dopplers(k);
            [
                HopSpec {
                    omega: p.omega_sk,
                    f_a: fa1,
                    f_b: fb1,
                },
                HopSpec {
                    omega: p.omega_kd,
                    f_a: fa2,
                    f_b: fb2,
                },
            ]
        })
        .collect()
}

/// How a path's selection variable is formed from its hop amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Df,
    /// Fixed-gain AF with one gain constant per path.
    Af(Vec<f64>),
}

impl Selector {
    #[inline]
    fn eval(&self, k: usize, a: f64, b: f64) -> f64 {
        match self {
            Selector::Df => a.min(b),
            Selector::Af(c) => af_select(a, b, c[k]),
        }
    }

    pub fn mode(&self) -> RelayMode {
        match self {
            Selector::Df => RelayMode::Df,
            Selector::Af(_) => RelayMode::Af,
        }
    }
}

/// One quantity to estimate: the selected maximum over the first `relays`
/// paths of the layout, crossing `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub selector: Selector,
    pub relays: usize,
    pub z: f64,
    /// Samples per repetition, rounded up to whole blocks.
    pub samples_per_rep: u64,
}

impl Probe {
    /// Probe for the scenario's mode and relay count at threshold `z`.
    pub fn from_config(config: &SystemConfig, z: f64, samples_per_rep: u64) -> Self {
        let selector = match config.mode() {
            RelayMode::Df => Selector::Df,
            RelayMode::Af => Selector::Af(config.af_paths().iter().map(|p| p.c).collect()),
        };
        Probe {
            selector,
            relays: config.relays(),
            z,
            samples_per_rep,
        }
    }

    fn blocks_per_rep(&self) -> usize {
        self.samples_per_rep.div_ceil(BLOCK_LEN as u64).max(1) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub master_seed: u64,
    pub n_reps: usize,
    /// Worker cap; `None` reads [`THREADS_ENV`], falling back to all cores.
    pub threads: Option<usize>,
}

/// Per-block tally of one probe.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BlockTally {
    n_down: u32,
    below_time: f64,
}

/// Result of one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub report: OutageReport,
    pub n_down: u64,
    pub blocks: usize,
    pub samples: u64,
    /// Engine sampling interval, slots.
    pub dt: f64,
    pub total_time: f64,
    pub below_time: f64,
}

/// Shared sampling interval of the engine for a layout.
pub fn engine_dt(layout: &[[HopSpec; 2]]) -> f64 {
    let fastest = layout
        .iter()
        .flatten()
        .map(|h| h.f_a + h.f_b)
        .fold(0.0, f64::max);
    ENGINE_OVERSAMPLING_PRODUCT / fastest
}

fn validate(layout: &[[HopSpec; 2]], probes: &[Probe], opts: &EngineOptions) -> Result<()> {
    if layout.is_empty() {
        return Err(Error::Parameter("hop layout is empty".into()));
    }
    for h in layout.iter().flatten() {
        if !(h.omega > 0.0) || !(h.f_a >= 0.0 && h.f_b >= 0.0) || !(h.f_a + h.f_b > 0.0) {
            return Err(Error::Domain(format!("invalid hop {h:?}")));
        }
    }
    if opts.n_reps == 0 {
        return Err(Error::Parameter("at least one repetition is required".into()));
    }
    for p in probes {
        if p.relays == 0 || p.relays > layout.len() {
            return Err(Error::Parameter(format!(
                "probe uses {} relays, layout has {}",
                p.relays,
                layout.len()
            )));
        }
        if !(p.z > 0.0) || !p.z.is_finite() {
            return Err(Error::Domain(format!("probe threshold must be finite and > 0, got {}", p.z)));
        }
        if let Selector::Af(c) = &p.selector {
            if c.len() < p.relays || c.iter().any(|&c| !(c > 0.0)) {
                return Err(Error::Parameter("AF probe needs a positive gain constant per path".into()));
            }
        }
    }
    Ok(())
}

/// Derive an independent stream seed for one hop of one block.
fn stream_seed(master: u64, rep: usize, block: usize, path: usize, hop: usize) -> u64 {
    fn mix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^ (x >> 31)
    }
    [rep as u64, block as u64, path as u64, hop as u64]
        .into_iter()
        .fold(mix(master), |acc, v| mix(acc ^ mix(v)))
}

/// Run every probe on shared traces.
pub fn run_probes(layout: &[[HopSpec; 2]], probes: &[Probe], opts: &EngineOptions) -> Result<Vec<ProbeResult>> {
    validate(layout, probes, opts)?;
    let dt = engine_dt(layout);
    let synths: Vec<[Synthesizer; 2]> = layout
        .iter()
        .map(|[a, b]| {
            Ok([
                Synthesizer::new(a.omega, a.f_a, a.f_b, dt, BLOCK_LEN)?,
                Synthesizer::new(b.omega, b.f_a, b.f_b, dt, BLOCK_LEN)?,
            ])
        })
        .collect::<Result<_>>()?;
    let blocks: Vec<usize> = probes.iter().map(Probe::blocks_per_rep).collect();
    let max_blocks = blocks.iter().copied().max().unwrap_or(0);
    let units: Vec<(usize, usize)> = (0..opts.n_reps)
        .flat_map(|r| (0..max_blocks).map(move |b| (r, b)))
        .collect();

    let work = || -> Vec<Vec<Option<BlockTally>>> {
        units
            .par_iter()
            .map(|&(rep, block)| {
                let active: Vec<usize> = (0..probes.len()).filter(|&i| block < blocks[i]).collect();
                let needed = active.iter().map(|&i| probes[i].relays).max().unwrap_or(0);
                with_workspace(layout.len(), |ws| {
                    for (path, pair) in synths.iter().enumerate().take(needed) {
                        for (hop, synth) in pair.iter().enumerate() {
                            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(opts.master_seed, rep, block, path, hop));
                            ws.hops[2 * path + hop].fill(synth, &mut rng, dt, &mut ws.scratch);
                        }
                    }
                    let mut out = vec![None; probes.len()];
                    for i in active {
                        out[i] = Some(ws.tally(&probes[i], dt));
                    }
                    out
                })
            })
            .collect()
    };
    let per_unit = match thread_cap(opts.threads) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let block_time = BLOCK_LEN as f64 * dt;
    Ok(probes
        .iter()
        .enumerate()
        .map(|(i, probe)| {
            let tallies: Vec<BlockTally> = per_unit.iter().filter_map(|u| u[i]).collect();
            summarize(probe, &tallies, block_time, dt)
        })
        .collect())
}

fn thread_cap(explicit: Option<usize>) -> Option<usize> {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
}

fn summarize(probe: &Probe, tallies: &[BlockTally], block_time: f64, dt: f64) -> ProbeResult {
    let b = tallies.len() as f64;
    let n: Vec<f64> = tallies.iter().map(|t| t.n_down as f64).collect();
    let o: Vec<f64> = tallies.iter().map(|t| t.below_time).collect();
    let sum_n: f64 = n.iter().sum();
    let sum_o: f64 = o.iter().sum();
    let total_time = b * block_time;
    let aor = sum_n / total_time;
    let outage_prob = sum_o / total_time;
    let aod = if sum_n > 0.0 {
        sum_o / sum_n
    } else if sum_o > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let spread = |resid: &dyn Fn(usize) -> f64| {
        if tallies.len() < 2 {
            return f64::NAN;
        }
        ((0..tallies.len()).map(|i| resid(i).powi(2)).sum::<f64>() / (b * (b - 1.0))).sqrt()
    };
    let se_aor = spread(&|i| n[i] - aor * block_time) / block_time;
    let se_p = spread(&|i| o[i] - outage_prob * block_time) / block_time;
    let se_aod = if sum_n > 0.0 {
        spread(&|i| o[i] - aod * n[i]) / (sum_n / b)
    } else {
        f64::NAN
    };
    ProbeResult {
        report: OutageReport {
            z: probe.z,
            outage_prob,
            aor,
            aod,
            source: Source::Simulated,
            mode: probe.selector.mode(),
            relays: probe.relays,
            standard_errors: Some(StandardErrors {
                outage_prob: se_p,
                aor: se_aor,
                aod: se_aod,
            }),
        },
        n_down: sum_n as u64,
        blocks: tallies.len(),
        samples: (tallies.len() * BLOCK_LEN) as u64,
        dt,
        total_time,
        below_time: sum_o,
    }
}

/// Simulated report for a scenario at threshold `z`: `n_reps` independent
/// repetitions of at least `n_samples` samples each.
pub fn run_experiment(config: &SystemConfig, z: f64, n_samples: u64, master_seed: u64, n_reps: usize) -> Result<OutageReport> {
    let layout = hop_layout(config);
    let probe = Probe::from_config(config, z, n_samples);
    let opts = EngineOptions {
        master_seed,
        n_reps,
        threads: None,
    };
    Ok(run_probes(&layout, &[probe], &opts)?.remove(0).report)
}

/// Complex gain and derivative of one hop over one block, with per-segment
/// envelope bounds.
struct HopBlock {
    g: Vec<Complex64>,
    gd: Vec<Complex64>,
    amp: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl HopBlock {
    fn new() -> Self {
        HopBlock {
            g: vec![Complex64::default(); BLOCK_LEN],
            gd: vec![Complex64::default(); BLOCK_LEN],
            amp: vec![0.0; BLOCK_LEN],
            lo: vec![0.0; BLOCK_LEN],
            hi: vec![0.0; BLOCK_LEN],
        }
    }

    fn fill(&mut self, synth: &Synthesizer, rng: &mut ChaCha8Rng, dt: f64, scratch: &mut Vec<Complex64>) {
        synth.synthesize(rng, &mut self.g, &mut self.gd, scratch);
        for (a, g) in self.amp.iter_mut().zip(&self.g) {
            *a = g.norm_sqr().sqrt();
        }
        for i in 0..BLOCK_LEN {
            let j = (i + 1) % BLOCK_LEN;
            let (lo, hi) = envelope_bounds(self.g[i], self.gd[i], self.g[j], self.gd[j], self.amp[i], self.amp[j], dt);
            self.lo[i] = lo;
            self.hi[i] = hi;
        }
    }
}

/// Bounds of `|p(t)|` over a segment of width `w`, where `p` is the cubic
/// Hermite curve through `(p0, d0)` and `(p1, d1)`.
///
/// `p(τ) − chord(τ) = w·τ(1−τ)·[(1−τ)(d0 − s) − τ(d1 − s)]` with `s` the chord
/// slope, which bounds the curve's distance from its chord.
#[inline]
fn envelope_bounds(p0: Complex64, d0: Complex64, p1: Complex64, d1: Complex64, a0: f64, a1: f64, w: f64) -> (f64, f64) {
    let chord = p1 - p0;
    let s = chord / w;
    let ea = (d0 - s).norm_sqr().sqrt();
    let eb = (d1 - s).norm_sqr().sqrt();
    let slack = w * (0.25 * ea.max(eb)).min(4.0 / 27.0 * (ea + eb));
    let len2 = chord.norm_sqr();
    let nearest = if len2 > 0.0 {
        let t = (-(p0.re * chord.re + p0.im * chord.im) / len2).clamp(0.0, 1.0);
        (p0 + chord * t).norm_sqr().sqrt()
    } else {
        a0
    };
    ((nearest - slack).max(0.0), a0.max(a1) + slack)
}

/// Hermite state of one hop at one instant.
#[derive(Clone, Copy)]
struct HopState {
    p: Complex64,
    d: Complex64,
    amp: f64,
}

impl HopState {
    /// State at the middle of a segment of width `w`.
    #[inline]
    fn midpoint(&self, right: &HopState, w: f64) -> HopState {
        let p = (self.p + right.p) * 0.5 + (self.d - right.d) * (w / 8.0);
        HopState {
            p,
            d: (right.p - self.p) * (1.5 / w) - (self.d + right.d) * 0.25,
            amp: p.norm_sqr().sqrt(),
        }
    }

    #[inline]
    fn bounds(&self, right: &HopState, w: f64) -> (f64, f64) {
        envelope_bounds(self.p, self.d, right.p, right.d, self.amp, right.amp, w)
    }
}

/// A path that still decides the comparison with `z` on one segment. A DF
/// hop known to stay above `z` is dropped (`None`) and acts as unbounded.
#[derive(Clone, Copy)]
struct PathSeg {
    k: usize,
    left: [Option<HopState>; 2],
    right: [Option<HopState>; 2],
}

type Live = SmallVec<[PathSeg; 3]>;

enum Verdict {
    /// The selected process stays above `z`.
    Above,
    /// This path stays at or below `z`.
    Quiet,
    /// Hops that still matter.
    Open([bool; 2]),
}

/// Classify path `k` on a segment from per-hop envelope bounds. A path whose
/// upper bound stays at or below `z` cannot lift the maximum over `z`, and a
/// DF hop whose lower bound is above `z` cannot pull the minimum under it.
#[inline]
fn classify(sel: &Selector, k: usize, z: f64, bounds: [Option<(f64, f64)>; 2]) -> Verdict {
    let lo = |h: usize| bounds[h].map_or(f64::INFINITY, |b| b.0);
    let hi = |h: usize| bounds[h].map_or(f64::INFINITY, |b| b.1);
    if sel.eval(k, lo(0), lo(1)) > z {
        return Verdict::Above;
    }
    if sel.eval(k, hi(0), hi(1)) <= z {
        return Verdict::Quiet;
    }
    match sel {
        Selector::Df => Verdict::Open([bounds[0].is_some() && lo(0) <= z, bounds[1].is_some() && lo(1) <= z]),
        Selector::Af(_) => Verdict::Open([true, true]),
    }
}

struct Workspace {
    hops: Vec<HopBlock>,
    scratch: Vec<Complex64>,
}

thread_local! {
    static WORKSPACE: std::cell::RefCell<Option<Workspace>> = const { std::cell::RefCell::new(None) };
}

/// Run `f` on this thread's block buffers, sized for `paths` paths.
fn with_workspace<R>(paths: usize, f: impl FnOnce(&mut Workspace) -> R) -> R {
    WORKSPACE.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().is_none_or(|w| w.hops.len() < 2 * paths) {
            *slot = Some(Workspace::new(paths));
        }
        f(slot.as_mut().expect("workspace just created"))
    })
}

impl Workspace {
    fn new(paths: usize) -> Self {
        Workspace {
            hops: (0..2 * paths).map(|_| HopBlock::new()).collect(),
            scratch: Vec::new(),
        }
    }

    fn tally(&self, probe: &Probe, dt: f64) -> BlockTally {
        let sel = &probe.selector;
        let z = probe.z;
        let mut n_down = 0u32;
        let mut below = 0.0;
        let mut live = Live::new();
        'samples: for i in 0..BLOCK_LEN {
            let j = (i + 1) % BLOCK_LEN;
            live.clear();
            for k in 0..probe.relays {
                let hops = [&self.hops[2 * k], &self.hops[2 * k + 1]];
                let bounds = [Some((hops[0].lo[i], hops[0].hi[i])), Some((hops[1].lo[i], hops[1].hi[i]))];
                match classify(sel, k, z, bounds) {
                    Verdict::Above => continue 'samples,
                    Verdict::Quiet => {}
                    Verdict::Open(keep) => {
                        let state = |h: usize, t: usize| {
                            keep[h].then(|| HopState {
                                p: hops[h].g[t],
                                d: hops[h].gd[t],
                                amp: hops[h].amp[t],
                            })
                        };
                        live.push(PathSeg {
                            k,
                            left: [state(0, i), state(1, i)],
                            right: [state(0, j), state(1, j)],
                        });
                    }
                }
            }
            if live.is_empty() {
                below += dt;
            } else {
                refine(sel, z, &live, dt, REFINE_DEPTH, &mut n_down, &mut below);
            }
        }
        BlockTally {
            n_down,
            below_time: below,
        }
    }
}

/// Selected value over the live paths at one end of a segment.
fn selected(sel: &Selector, live: &[PathSeg], end: impl Fn(&PathSeg) -> &[Option<HopState>; 2]) -> f64 {
    live.iter()
        .map(|s| {
            let [a, b] = end(s);
            let amp = |h: &Option<HopState>| h.map_or(f64::INFINITY, |h| h.amp);
            sel.eval(s.k, amp(a), amp(b))
        })
        .fold(0.0, f64::max)
}

/// Resolve one segment of width `w` whose bounds straddle `z` by bisection,
/// following only the live paths.
fn refine(sel: &Selector, z: f64, live: &[PathSeg], w: f64, depth: u32, n_down: &mut u32, below: &mut f64) {
    if depth == 0 {
        let w0 = selected(sel, live, |s| &s.left);
        let w1 = selected(sel, live, |s| &s.right);
        match (w0 <= z, w1 <= z) {
            (true, true) => *below += w,
            (false, false) => {}
            (false, true) => {
                *n_down += 1;
                *below += w * (z - w1) / (w0 - w1);
            }
            (true, false) => *below += w * (z - w0) / (w1 - w0),
        }
        return;
    }
    let half = 0.5 * w;
    let mids: SmallVec<[[Option<HopState>; 2]; 3]> = live
        .iter()
        .map(|s| {
            let mid = |h: usize| match (&s.left[h], &s.right[h]) {
                (Some(a), Some(b)) => Some(a.midpoint(b, w)),
                _ => None,
            };
            [mid(0), mid(1)]
        })
        .collect();
    for first in [true, false] {
        let mut child = Live::new();
        let mut above = false;
        for (s, mid) in live.iter().zip(&mids) {
            let (l, r) = if first { (&s.left, mid) } else { (mid, &s.right) };
            let bound = |h: usize| match (&l[h], &r[h]) {
                (Some(a), Some(b)) => Some(a.bounds(b, half)),
                _ => None,
            };
            let bounds = [bound(0), bound(1)];
            match classify(sel, s.k, z, bounds) {
                Verdict::Above => {
                    above = true;
                    break;
                }
                Verdict::Quiet => {}
                Verdict::Open(keep) => child.push(PathSeg {
                    k: s.k,
                    left: [l[0].filter(|_| keep[0]), l[1].filter(|_| keep[1])],
                    right: [r[0].filter(|_| keep[0]), r[1].filter(|_| keep[1])],
                }),
            }
        }
        if above {
            continue;
        }
        if child.is_empty() {
            *below += half;
        } else {
            refine(sel, z, &child, half, depth - 1, n_down, below);
        }
    }
}
