mod common;

use common::{mean_sd, reference, rel};
use outage_kit::combiner::{PathSet, Source};
use outage_kit::fading::{generate_m2m_trace, FadingTrace};
use outage_kit::montecarlo::{
    count_crossings, engine_dt, hop_layout, run_experiment, run_probes, selection_process, EngineOptions, Probe,
    BLOCK_LEN,
};
use outage_kit::system::RelayMode;
use proptest::prelude::*;

#[test]
fn crossing_examples() {
    assert_eq!(count_crossings(&[0.6, 0.4, 0.7, 0.3], 0.5, 1.0).n_down, 2);
    let none = count_crossings(&[0.9, 0.8, 0.7, 1.2], 0.5, 0.25);
    assert_eq!((none.n_down, none.outage_time, none.below_time), (0, 0.0, 0.0));
    assert_eq!(none.total_time, 1.0);
}

proptest! {
    #[test]
    fn crossing_bookkeeping_is_consistent(w in prop::collection::vec(0.0f64..1.0, 2..400), z in 0.05f64..0.95) {
        let s = count_crossings(&w, z, 0.5);
        prop_assert!(s.n_outage_events == s.n_down || s.n_outage_events + 1 == s.n_down);
        prop_assert!(s.outage_time <= s.below_time + 1e-12);
        prop_assert!(s.below_time <= s.total_time + 1e-12);
        let flips = w.windows(2).filter(|p| p[0] > z && p[1] <= z).count() as u64;
        prop_assert_eq!(s.n_down, flips);
    }
}

fn trace(samples: Vec<f64>) -> FadingTrace {
    FadingTrace {
        samples,
        dt: 0.1,
        omega: 0.5,
        f_a: 0.0,
        f_b: 1.0,
        seed: None,
    }
}

#[test]
fn selection_examples() {
    let cfg = reference(2, 10.0, RelayMode::Df);
    let one = PathSet::from_config(&cfg.with_relays(1).unwrap());
    let a = trace(vec![0.1, 0.9, 0.5]);
    let b = trace(vec![0.3, 0.2, 0.5]);
    assert_eq!(selection_process(&[(a.clone(), b.clone())], &one).unwrap(), vec![0.1, 0.2, 0.5]);

    let strong = (trace(vec![2.0, 3.0, 2.5]), trace(vec![4.0, 2.1, 3.0]));
    let two = PathSet::from_config(&cfg);
    let w = selection_process(&[(a.clone(), b.clone()), strong.clone()], &two).unwrap();
    assert_eq!(w, selection_process(&[strong], &one).unwrap());

    assert!(selection_process(&[(a.clone(), trace(vec![0.1, 0.2]))], &one).is_err());
    assert!(selection_process(&[(a, b)], &two).is_err());
}

#[test]
fn af_selection_never_exceeds_first_hop() {
    let cfg = reference(1, 5.0, RelayMode::Af);
    let a = generate_m2m_trace(0.5, 0.0, 1.0, 1.0 / 64.0, 5000, 1).unwrap();
    let b = generate_m2m_trace(0.5, 0.0, 1.0, 1.0 / 64.0, 5000, 2).unwrap();
    let w = selection_process(&[(a.clone(), b)], &PathSet::from_config(&cfg)).unwrap();
    assert!(w.iter().zip(&a.samples).all(|(w, a)| w <= a));
}

#[test]
fn experiments_are_reproducible() {
    let cfg = reference(2, 10.0, RelayMode::Af);
    let z = cfg.threshold().z;
    let a = run_experiment(&cfg, z, 3 * BLOCK_LEN as u64, 42, 2).unwrap();
    let b = run_experiment(&cfg, z, 3 * BLOCK_LEN as u64, 42, 2).unwrap();
    let c = run_experiment(&cfg, z, 3 * BLOCK_LEN as u64, 43, 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.aor, c.aor);
    assert_eq!(a.source, Source::Simulated);
    assert!(a.standard_errors.is_some());
}

#[test]
fn unreachable_threshold_is_permanent_outage() {
    let cfg = reference(2, 10.0, RelayMode::Df);
    let r = run_experiment(&cfg, 50.0, BLOCK_LEN as u64, 1, 1).unwrap();
    assert_eq!(r.outage_prob, 1.0);
    assert_eq!(r.aor, 0.0);
}

#[test]
fn duration_times_rate_is_outage_fraction() {
    for mode in [RelayMode::Df, RelayMode::Af] {
        let cfg = reference(3, 15.0, mode);
        let r = run_experiment(&cfg, cfg.threshold().z, 4 * BLOCK_LEN as u64, 5, 1).unwrap();
        let se = r.standard_errors.unwrap();
        assert!((r.aod * r.aor - r.outage_prob).abs() <= 3.0 * se.outage_prob.max(1e-15));
    }
}

#[test]
fn shared_probes_and_thread_counts_do_not_change_results() {
    let cfg = reference(3, 10.0, RelayMode::Df);
    let layout = hop_layout(&cfg);
    let z = cfg.threshold().z;
    let probes: Vec<Probe> = (1..=3)
        .map(|m| Probe::from_config(&cfg.with_relays(m).unwrap(), z, (m * BLOCK_LEN) as u64))
        .collect();
    let opts = |threads| EngineOptions {
        master_seed: 9,
        n_reps: 2,
        threads,
    };
    let together = run_probes(&layout, &probes, &opts(Some(1))).unwrap();
    for (i, p) in probes.iter().enumerate() {
        let alone = run_probes(&layout, std::slice::from_ref(p), &opts(Some(2))).unwrap();
        assert_eq!(alone[0], together[i]);
    }
    assert_eq!(together[2].blocks, 6);
    assert_eq!(together[0].dt, engine_dt(&layout));
}

#[test]
fn standard_error_scales_as_inverse_root_of_samples() {
    let cfg = reference(1, 10.0, RelayMode::Df);
    let z = cfg.threshold().z;
    let base = 8 * BLOCK_LEN as u64;
    let runs: Vec<Vec<(f64, f64)>> = [1, 2, 4]
        .iter()
        .map(|&mult| {
            (0..8)
                .map(|seed| {
                    let r = run_experiment(&cfg, z, mult * base, 100 + seed, 1).unwrap();
                    (r.aor, r.standard_errors.unwrap().aor)
                })
                .collect()
        })
        .collect();
    let mean_se: Vec<f64> = runs.iter().map(|r| r.iter().map(|x| x.1).sum::<f64>() / 8.0).collect();
    let spread: Vec<f64> = runs.iter().map(|r| mean_sd(&r.iter().map(|x| x.0).collect::<Vec<_>>()).1).collect();
    assert!(rel(mean_se[0] / mean_se[1], 2f64.sqrt()) < 0.15, "{mean_se:?}");
    assert!(rel(mean_se[0] / mean_se[2], 2.0) < 0.15, "{mean_se:?}");
    // Eight repetitions pin a standard deviation to roughly ±25%.
    for (sd, se) in spread.iter().zip(&mean_se) {
        assert!((0.5..1.6).contains(&(sd / se)), "spread {spread:?} vs se {mean_se:?}");
    }
    assert!((1.0..4.0).contains(&(spread[0] / spread[2])), "{spread:?}");
}

#[test]
fn probe_validation() {
    let cfg = reference(2, 10.0, RelayMode::Df);
    let layout = hop_layout(&cfg);
    let opts = EngineOptions {
        master_seed: 1,
        n_reps: 1,
        threads: None,
    };
    let mut p = Probe::from_config(&cfg, 0.5, 1);
    p.relays = 3;
    assert!(run_probes(&layout, &[p.clone()], &opts).is_err());
    p.relays = 2;
    p.z = -1.0;
    assert!(run_probes(&layout, &[p], &opts).is_err());
    assert!(run_experiment(&cfg, 0.5, 1, 1, 0).is_err());
}
