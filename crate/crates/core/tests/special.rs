mod common;

use common::{gaussian_moment, k1_asymptotic, k1_integral, k1_oracle, k1_series, rel};
use outage_kit::special::{bessel_k1, bessel_k1_scaled, gauss_hermite, gauss_legendre, one_minus_x_k1};
use outage_kit::Error;
use proptest::prelude::*;

fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn oracle_branches_agree_on_their_overlaps() {
    for x in [0.5, 1.0, 1.5, 2.0, 3.0] {
        assert!(rel(k1_series(x), k1_integral(x)) < 1e-12, "x = {x}");
    }
    for x in [20.0, 25.0, 35.0, 50.0] {
        assert!(rel(k1_asymptotic(x), k1_integral(x)) < 1e-12, "x = {x}");
    }
}

#[test]
fn k1_against_oracle_on_log_grid() {
    for x in log_grid(200, 1e-6, 50.0) {
        let got = bessel_k1(x).unwrap();
        assert!(rel(got, k1_oracle(x)) <= 1e-10, "x = {x}: {got} vs {}", k1_oracle(x));
    }
}

#[test]
fn k1_reference_values() {
    // Arbitrary-precision evaluations, rounded to 17 digits.
    let table = [
        (1e-6, 999_999.999_992_784_28),
        (0.1, 9.853_844_780_870_606_1),
        (1.0, 0.601_907_230_197_234_57),
        (2.0, 0.139_865_881_816_522_43),
        (5.0, 0.004_044_613_445_452_164_2),
        (10.0, 1.864_877_345_382_558_5e-5),
        (50.0, 3.444_102_226_717_555_6e-23),
    ];
    for (x, want) in table {
        assert!(rel(bessel_k1(x).unwrap(), want) < 1e-12, "x = {x}");
    }
}

#[test]
fn k1_limits_and_domain() {
    for x in [1e-12, 1e-9, 1e-6] {
        assert!((x * bessel_k1(x).unwrap() - 1.0).abs() < 1e-9);
    }
    for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(bessel_k1(bad), Err(Error::Domain(_))));
    }
}

#[test]
fn scaled_and_complement_forms() {
    for x in log_grid(60, 1e-4, 50.0) {
        assert!(rel(bessel_k1_scaled(x).unwrap(), x.exp() * k1_oracle(x)) < 1e-10, "x = {x}");
        let c = one_minus_x_k1(x).unwrap();
        assert!((c - (1.0 - x * k1_oracle(x))).abs() < 1e-12, "x = {x}");
    }
    assert_eq!(one_minus_x_k1(0.0).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn k1_positive_and_decreasing(x in 1e-6f64..60.0, dx in 1e-6f64..1.0) {
        let a = bessel_k1(x).unwrap();
        let b = bessel_k1(x + dx).unwrap();
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
        let xk = x * a;
        prop_assert!(xk > 0.0 && xk <= 1.0);
    }
}

#[test]
fn hermite_moments_through_degree_2n_minus_1() {
    for n in [8, 16, 40] {
        let rule = gauss_hermite(n).unwrap();
        for k in 0..2 * n {
            let got = rule.integrate(|x| x.powi(k as i32));
            let want = gaussian_moment(k);
            if k % 2 == 0 {
                assert!(rel(got, want) < 1e-9, "n = {n}, k = {k}: {got} vs {want}");
            } else {
                // odd moments vanish; compare with the size of the matching even moment
                assert!(got.abs() < 1e-12 * gaussian_moment(k + 1).max(1.0), "n = {n}, k = {k}: {got}");
            }
        }
    }
}

#[test]
fn hermite_examples() {
    let pi_sqrt = std::f64::consts::PI.sqrt();
    for n in [2, 5, 40, 128] {
        let rule = gauss_hermite(n).unwrap();
        assert!(rel(rule.weights.iter().sum::<f64>(), pi_sqrt) < 1e-10);
        assert!(rel(rule.integrate(|x| x * x), pi_sqrt / 2.0) < 1e-10);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        for i in 0..n {
            assert!((rule.nodes[i] + rule.nodes[n - 1 - i]).abs() < 1e-12);
        }
    }
    for n in [10, 20, 40] {
        let got = gauss_hermite(n).unwrap().integrate(f64::cos);
        assert!((got - pi_sqrt * (-0.25f64).exp()).abs() < 1e-9);
    }
    for bad in [0, 1, 129] {
        assert!(matches!(gauss_hermite(bad), Err(Error::Parameter(_))));
    }
}

#[test]
fn legendre_integrates_polynomials() {
    let rule = gauss_legendre(15).unwrap();
    for k in 0..30 {
        let want = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
        assert!((rule.integrate(|x| x.powi(k)) - want).abs() < 1e-13, "k = {k}");
    }
}
