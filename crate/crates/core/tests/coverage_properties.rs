use nalgebra::DMatrix;
use proptest::prelude::*;
use trs_core::coverage::{
    active_probability, outage_probability, spectral_efficiency, toeplitz_inverse_column, user_rate, NetworkConfig,
};
use trs_core::hypergeom::{coeff_k, coefficient_table, gauss_2f1};
use trs_core::trs::log_grid;

const ALPHAS: [f64; 5] = [2.5, 3.0, 3.5, 4.0, 5.0];

/// Induced 1-norm of `(d·I − Q)^(−1)` by dense triangular solve.
fn dense_inverse_norm(k: &[f64], p_a: f64) -> f64 {
    let m = k.len();
    let d = k[0] + 1.0 / p_a;
    let a = DMatrix::from_fn(m, m, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => d,
        std::cmp::Ordering::Greater => -k[i - j],
        std::cmp::Ordering::Less => 0.0,
    });
    let inv = a
        .solve_lower_triangular(&DMatrix::identity(m, m))
        .expect("non-singular");
    (0..m)
        .map(|j| inv.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[test]
fn k0_closed_form_on_log_grid() {
    let mut worst: f64 = 0.0;
    for t in log_grid(1e-3, 1e4, 400) {
        let k0 = coeff_k(0, t, 4.0).unwrap();
        let closed = t.sqrt() * t.sqrt().atan();
        worst = worst.max((k0 - closed).abs() / k0.max(1.0));
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn coefficients_non_negative_on_grid() {
    for &alpha in &ALPHAS {
        for t in log_grid(1e-3, 1e4, 30) {
            for i in 0..=32 {
                let k = coeff_k(i, t, alpha).unwrap();
                assert!(k.is_finite() && k >= 0.0, "i={i} T={t} alpha={alpha}: {k}");
            }
        }
    }
}

#[test]
fn k0_strictly_increasing_in_threshold() {
    for &alpha in &ALPHAS {
        let values: Vec<f64> = log_grid(1e-3, 1e4, 200)
            .iter()
            .map(|&t| coeff_k(0, t, alpha).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "alpha={alpha}");
    }
}

#[test]
fn zero_threshold_tables_vanish() {
    assert_eq!(coefficient_table(3, 0.0, 4.0).unwrap().values(), &[0.0, 0.0, 0.0]);
}

#[test]
fn scalar_outage_closed_form() {
    for &alpha in &ALPHAS {
        for t in log_grid(1e-3, 1e3, 25) {
            for p_a in [1e-3, 0.0939, 0.3, 0.585, 0.99, 1.0] {
                let got = outage_probability(t, p_a, 1, alpha).unwrap().p_out;
                let closed = 1.0 - 1.0 / (1.0 + p_a * coeff_k(0, t, alpha).unwrap());
                assert!((got - closed).abs() <= 1e-12, "T={t} p_a={p_a}: {got} vs {closed}");
            }
        }
    }
}

#[test]
fn recursion_matches_dense_solve() {
    for &alpha in &ALPHAS {
        for t in [1e-2, 0.3, 1.0, 7.0, 100.0] {
            for p_a in [0.05, 0.5, 1.0] {
                for m in 1..=32 {
                    let table = coefficient_table(m, t, alpha).unwrap();
                    let k = table.values();
                    let recursion: f64 = toeplitz_inverse_column(k, k[0] + 1.0 / p_a).iter().sum();
                    let dense = dense_inverse_norm(k, p_a);
                    assert!(
                        (recursion - dense).abs() <= 1e-12 * dense,
                        "alpha={alpha} T={t} p_a={p_a} M={m}: {recursion} vs {dense}"
                    );
                }
            }
        }
    }
}

#[test]
fn worked_outage_examples() {
    let out = outage_probability(1.0, 1.0, 1, 4.0).unwrap().p_out;
    assert!((out - 0.43990).abs() < 1e-5);
    let out = outage_probability(1.0, 0.0939, 1, 4.0).unwrap().p_out;
    assert!((out - 0.0687).abs() < 1e-4);
    assert!(outage_probability(1e-12, 0.7, 8, 4.0).unwrap().p_out < 1e-5);
}

#[test]
fn active_probability_reference_values() {
    // 50-digit evaluations of 1 − (1 + 1/(3.5ρ))^(−3.5)
    assert!((active_probability(0.1).unwrap() - 0.9911270105428268).abs() < 1e-15);
    assert!((active_probability(10.0).unwrap() - 0.09389317308100409).abs() < 1e-15);
    assert!((active_probability(1e-9).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn spectral_efficiency_grid_monotone() {
    for p_a in [0.05, 0.3, 0.7, 1.0] {
        let se: Vec<f64> = [1, 2, 3, 4, 8, 16]
            .iter()
            .map(|&m| spectral_efficiency(p_a, m, 4.0).unwrap())
            .collect();
        assert!(se.windows(2).all(|w| w[1] > w[0]), "p_a={p_a}: {se:?}");
    }
    for m in [1, 4] {
        let se: Vec<f64> = [0.05, 0.1, 0.3, 0.6, 1.0]
            .iter()
            .map(|&p| spectral_efficiency(p, m, 3.0).unwrap())
            .collect();
        assert!(se.windows(2).all(|w| w[1] < w[0]), "M={m}: {se:?}");
    }
}

#[test]
fn sparse_duality_under_mean_load() {
    for rho in [0.01, 0.05, 0.1] {
        let base = NetworkConfig::new(rho * 100.0, 100.0, 2, 20.0);
        let doubled = NetworkConfig {
            lambda_u: 200.0,
            ..base
        };
        let r1 = user_rate(&base).unwrap();
        let r2 = user_rate(&doubled).unwrap();
        assert!((r2 - r1 / 2.0).abs() / r1 <= 0.01, "rho={rho}: {r1} {r2}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hypergeometric_at_zero_is_one(a in -5.0f64..5.0, b in -5.0f64..5.0, c in 0.1f64..6.0) {
        prop_assert_eq!(gauss_2f1(a, b, c, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn outage_monotone_in_antennas_and_threshold(
        t in 1e-3f64..1e3,
        p_a in 0.01f64..=1.0,
        alpha_idx in 0usize..5,
        m in 1usize..24,
    ) {
        let alpha = ALPHAS[alpha_idx];
        let here = outage_probability(t, p_a, m, alpha).unwrap().p_out;
        let more = outage_probability(t, p_a, m + 1, alpha).unwrap().p_out;
        let higher = outage_probability(t * 1.5, p_a, m, alpha).unwrap().p_out;
        prop_assert!((0.0..=1.0).contains(&here));
        prop_assert!(more <= here + 1e-15);
        prop_assert!(higher >= here - 1e-15);
    }

    #[test]
    fn rate_homogeneous_in_bandwidth(
        lb in 0.1f64..2000.0,
        lu in 1.0f64..500.0,
        m in 1usize..8,
        w in 0.1f64..200.0,
        c in 0.0f64..10.0,
    ) {
        let cfg = NetworkConfig::new(lb, lu, m, w);
        let scaled = cfg.with_bandwidth(c * w);
        let r = user_rate(&cfg).unwrap();
        prop_assert!((user_rate(&scaled).unwrap() - c * r).abs() <= 1e-12 * (c * r).max(1e-300));
    }
}
