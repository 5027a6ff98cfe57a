//! Randomized invariants of the public surface: certificate algebra, fit
//! equivariance, contrast-constant homogeneity, and bitwise determinism.

use std::collections::BTreeMap;

use delaykit::certificates::{bounded_certificate, unbounded_certificate};
use delaykit::diagnostics::{estimate_mu, fit_log_linear, Mu};
use delaykit::history::History;
use delaykit::models::build_by_name;
use delaykit::solver::{solve_method_of_steps, SolverConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Square matrix with dominant diagonal, hence invertible, from a flat draw.
fn dominant(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    for i in 0..n {
        m[(i, i)] += 2.0 * n as f64 + 1.0;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bounded_rate_penalty_grows_with_gain(
        m in 1.0..20.0f64,
        omega in 0.05..5.0f64,
        tau in 0.05..3.0f64,
        bnorm in 0.1..10.0f64,
        k in 0.0..5.0f64,
        dk in 1e-6..5.0f64,
    ) {
        let lo = bounded_certificate(m, omega, tau, bnorm, k).unwrap();
        let hi = bounded_certificate(m, omega, tau, bnorm, k + dk).unwrap();
        prop_assert!(lo.sigma >= 0.0);
        prop_assert!(hi.sigma > lo.sigma, "sigma must be strictly increasing in |k|");
        // The penalty depends on the gain only through its magnitude, and
        // the threshold does not depend on the gain at all.
        let mirrored = bounded_certificate(m, omega, tau, bnorm, -k).unwrap();
        prop_assert_eq!(mirrored.sigma, lo.sigma);
        prop_assert_eq!(mirrored.k0, lo.k0);
        prop_assert_eq!(hi.k0, lo.k0);
        prop_assert_eq!(lo.omega_prime, omega - lo.sigma);
    }

    #[test]
    fn unbounded_rate_penalty_grows_with_gain(
        m in 0.5..20.0f64,
        omega in 0.05..5.0f64,
        tau in 0.05..3.0f64,
        c1 in 0.1..10.0f64,
        c2 in 0.1..10.0f64,
        c3 in 0.1..10.0f64,
        k in 0.0..5.0f64,
        dk in 1e-6..5.0f64,
    ) {
        let lo = unbounded_certificate(m, omega, tau, c1, c2, c3, k).unwrap();
        let hi = unbounded_certificate(m, omega, tau, c1, c2, c3, k + dk).unwrap();
        prop_assert!(lo.sigma >= 0.0);
        prop_assert!(hi.sigma > lo.sigma, "sigma must be strictly increasing in |k|");
        let mirrored = unbounded_certificate(m, omega, tau, c1, c2, c3, -k).unwrap();
        prop_assert_eq!(mirrored.sigma, lo.sigma);
        prop_assert_eq!(hi.k0, lo.k0);
        prop_assert_eq!(lo.omega_prime, omega - lo.sigma);
    }

    #[test]
    fn threshold_gain_loses_exactly_the_rate(
        m in 1.0..20.0f64,
        omega in 0.05..5.0f64,
        tau in 0.05..3.0f64,
        bnorm in 0.1..10.0f64,
        c1 in 0.1..10.0f64,
        c2 in 0.1..10.0f64,
        c3 in 0.1..10.0f64,
    ) {
        let k0 = bounded_certificate(m, omega, tau, bnorm, 0.0).unwrap().k0;
        let at = bounded_certificate(m, omega, tau, bnorm, k0).unwrap();
        prop_assert!((at.sigma - omega).abs() <= 1e-12 * omega);

        let k0u = unbounded_certificate(m, omega, tau, c1, c2, c3, 0.0).unwrap().k0;
        let atu = unbounded_certificate(m, omega, tau, c1, c2, c3, k0u).unwrap();
        prop_assert!((atu.sigma - omega).abs() <= 1e-12 * omega);
    }

    #[test]
    fn verdict_flips_exactly_at_the_threshold(
        m in 1.0..20.0f64,
        omega in 0.05..5.0f64,
        tau in 0.05..3.0f64,
        bnorm in 0.1..10.0f64,
    ) {
        let k0 = bounded_certificate(m, omega, tau, bnorm, 0.0).unwrap().k0;
        let below = bounded_certificate(m, omega, tau, bnorm, k0 * (1.0 - 1e-9)).unwrap();
        let at = bounded_certificate(m, omega, tau, bnorm, k0).unwrap();
        let above = bounded_certificate(m, omega, tau, bnorm, k0 * (1.0 + 1e-9)).unwrap();
        prop_assert!(below.stable);
        prop_assert!(!at.stable, "the verdict |k| < k0 is strict");
        prop_assert!(!above.stable);
        prop_assert!(below.omega_prime > 0.0);
        prop_assert!(above.omega_prime < 0.0);
    }

    #[test]
    fn fit_rate_is_scale_invariant(
        rate in -2.0..2.0f64,
        amplitude in 0.1..10.0f64,
        scale in 1e-3..1e3f64,
    ) {
        let times: Vec<f64> = (0..=80).map(|i| 0.1 * i as f64).collect();
        let values: Vec<f64> =
            times.iter().map(|t| amplitude * (-rate * t).exp()).collect();
        let scaled: Vec<f64> = values.iter().map(|v| scale * v).collect();

        let base = fit_log_linear(&times, &values, (0.0, 8.0), 0.5).unwrap();
        let lifted = fit_log_linear(&times, &scaled, (0.0, 8.0), 0.5).unwrap();

        prop_assert!((base.rate_fit - rate).abs() <= 1e-8 * (1.0 + rate.abs()));
        prop_assert!(
            (lifted.rate_fit - base.rate_fit).abs() <= 1e-10 * (1.0 + base.rate_fit.abs()),
            "scaling the data must not move the fitted rate"
        );
        prop_assert!((lifted.m_fit / base.m_fit - scale).abs() <= 1e-10 * scale);
        prop_assert_eq!(base.points, lifted.points);
    }

    #[test]
    fn contrast_constant_is_quadratically_homogeneous(
        n in 2usize..5,
        flat_b in prop::collection::vec(-2.0..2.0f64, 16),
        flat_c in prop::collection::vec(-2.0..2.0f64, 25),
        factor in 0.1..10.0f64,
    ) {
        let bstar = DMatrix::from_fn(2, n, |i, j| flat_b[i * n + j]);
        let cstar = dominant(n, &flat_c);

        let Mu::Finite(mu) = estimate_mu(&bstar, &cstar).unwrap() else {
            return Err(TestCaseError::fail("full-rank C* must give a finite constant"));
        };
        let Mu::Finite(mu_b) = estimate_mu(&(&bstar * factor), &cstar).unwrap() else {
            return Err(TestCaseError::fail("scaling B* cannot lose finiteness"));
        };
        let Mu::Finite(mu_c) = estimate_mu(&bstar, &(&cstar * factor)).unwrap() else {
            return Err(TestCaseError::fail("scaling C* cannot lose finiteness"));
        };

        let sq = factor * factor;
        prop_assert!((mu_b - sq * mu).abs() <= 1e-8 * sq * mu.max(1e-30));
        prop_assert!((mu_c - mu / sq).abs() <= 1e-8 * (mu / sq).max(1e-30));
    }

    #[test]
    fn hidden_directions_are_reported_as_infinite(
        n in 2usize..5,
        flat_c in prop::collection::vec(-2.0..2.0f64, 25),
        column in 0usize..5,
    ) {
        // Blind one state direction in C*; any B* that sees it has no
        // finite contrast constant.
        let column = column % n;
        let mut cstar = dominant(n, &flat_c);
        for i in 0..n {
            cstar[(i, column)] = 0.0;
        }
        let mut bstar = DMatrix::zeros(1, n);
        bstar[(0, column)] = 1.0;
        prop_assert_eq!(estimate_mu(&bstar, &cstar).unwrap(), Mu::Infinite);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn catalog_and_solver_are_bitwise_deterministic(
        dim in 1usize..5,
        seed in 0u64..1000,
        k in -0.5..0.5f64,
    ) {
        let mut params = BTreeMap::new();
        params.insert("dim".to_string(), dim as f64);
        params.insert("seed".to_string(), seed as f64);
        params.insert("k".to_string(), k);

        let first = build_by_name::<f64>("linear-toy", &params).unwrap();
        let second = build_by_name::<f64>("linear-toy", &params).unwrap();
        prop_assert_eq!(&first.a, &second.a, "same seed must rebuild the same generator");
        prop_assert_eq!(&first.input_map, &second.input_map);

        let m = 16;
        let config = SolverConfig::new(first.tau / m as f64, 2.0 * first.tau);
        let u0 = nalgebra::DVector::from_element(dim, 1.0);
        let history = History::constant(first.tau, m, first.output(&u0)).unwrap();
        let a = solve_method_of_steps(&first, &u0, &history, &config).unwrap();
        let b = solve_method_of_steps(&second, &u0, &history, &config).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert_eq!(x, y, "reruns must agree to the bit");
        }
        prop_assert_eq!(&a.norms, &b.norms);
    }
}
