use hallband::asymptotics::*;
use hallband::fiber_solver::{band_velocity_point, FiberPoint, SolverConfig};
use hallband::Error;
use proptest::prelude::*;

fn fast() -> SolverConfig {
    SolverConfig::default().without_crosscheck()
}

#[test]
fn threshold_momentum_composes_with_the_band_function() {
    for n in [1, 2] {
        for delta in [1e-4, 1e-6, 1e-8, 1e-10] {
            let t = k_delta(n, delta, &fast()).unwrap();
            let (bp, _) = band_velocity_point(FiberPoint::new(n, t.k_numeric), &fast()).unwrap();
            assert!((bp.gap - delta).abs() < 1e-8 * delta, "n={n} delta={delta}: {}", bp.gap);
        }
    }
}

#[test]
fn expansion_error_shrinks_and_anchor_holds() {
    for n in [1, 2] {
        let diffs: Vec<f64> = [1e-4, 1e-6, 1e-8, 1e-10]
            .iter()
            .map(|&d| {
                let t = k_delta(n, d, &fast()).unwrap();
                (t.k_numeric - t.k_expansion).abs()
            })
            .collect();
        assert!(diffs.windows(2).all(|w| w[1] < w[0]), "n={n}: {diffs:?}");
    }
    let k = k_delta(1, 1e-6, &fast()).unwrap().k_numeric;
    assert!((k - 3.89).abs() < 0.05, "{k}");
}

#[test]
fn below_the_floor_is_a_precision_error() {
    assert!(matches!(k_delta(1, 1e-12, &fast()), Err(Error::PrecisionFloor(_))));
    assert!(matches!(k_expansion(1, 0.0), Err(Error::InvalidInput(_))));
}

#[test]
fn envelope_is_increasing_in_delta() {
    let deltas = [1e-10, 1e-8, 1e-6, 1e-4];
    for mu in [0.0, 1.0, 3.0] {
        let b: Vec<f64> = deltas.iter().map(|&d| envelope(d, mu)).collect();
        assert!(b.windows(2).all(|w| w[0] < w[1]), "{b:?}");
    }
}

#[test]
fn calibrated_mu_makes_the_envelope_dominate() {
    for n in [1, 2] {
        let cal = calibrate_mu(n, &[1e-4, 1e-6, 1e-8], &fast()).unwrap();
        assert!(cal.mu <= 4.0 * n as f64, "n={n}: {}", cal.mu);
        for e in &cal.envelopes {
            assert!(e.sweep_sup <= envelope(e.delta, cal.mu) * (1.0 + 1e-12));
        }
        let report = sandwich(n, 1e-8, 1e-4, cal.mu, &fast()).unwrap();
        assert!(report.holds, "n={n}: {report:?}");
        assert!(report.samples.iter().all(|&(_, v)| v >= report.lower && v <= report.upper));
    }
}

#[test]
fn convergence_ratios_approach_one() {
    let grid = [2.5, 3.0, 3.5, 4.0, 4.5];
    for n in [1, 2, 3] {
        let r = convergence_report(n, &grid, &fast()).unwrap();
        let at = |k: f64| r.rows.iter().find(|row| row.k == k).unwrap();
        assert!((at(4.5).rho - 1.0).abs() <= 0.2, "n={n}: {}", at(4.5).rho);
        assert!((at(4.5).rho - 1.0).abs() < (at(3.0).rho - 1.0).abs());
        assert!((at(4.5).rho_prime - 1.0).abs() < (at(3.0).rho_prime - 1.0).abs());
        if n <= 2 {
            assert!((-3.0..=-1.0).contains(&r.slope_rho), "n={n}: {}", r.slope_rho);
        }
    }
    assert!(matches!(convergence_report(1, &[3.0, 4.0], &fast()), Err(Error::InvalidInput(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn velocity_identity_is_exact(n in 1usize..=6, k in 0.01f64..30.0) {
        let a = leading_terms(n, k).unwrap();
        let gap = a.lambda_lead - (2 * n - 1) as f64;
        prop_assert!((a.dlambda_lead + 2.0 * k * a.gap_lead).abs() <= 1e-15 * a.dlambda_lead.abs());
        if k < 5.0 {
            prop_assert!((gap - a.gap_lead).abs() <= 1e-12 * (2 * n) as f64);
        }
    }

    #[test]
    fn expansion_grows_like_root_log(delta in 1e-11f64..1e-3) {
        let k = k_expansion(1, delta).unwrap();
        let root = delta.ln().abs().sqrt();
        prop_assert!(k > 0.8 * root && k < 1.3 * root);
    }
}
