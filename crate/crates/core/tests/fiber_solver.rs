use hallband::fiber_solver::*;
use hallband::hermite::landau_level;
use hallband::Error;
use proptest::prelude::*;

fn fast() -> SolverConfig {
    SolverConfig::default().without_crosscheck()
}

#[test]
fn zero_momentum_anchor_for_first_five_bands() {
    for n in 1..=5 {
        let p = eigenvalue(FiberPoint::new(n, 0.0), &SolverConfig::default()).unwrap();
        assert!((p.lambda - (4 * n - 1) as f64).abs() < 1e-8, "n={n}: {}", p.lambda);
        assert_eq!(p.method, Method::Shooting);
    }
}

#[test]
fn shooting_agrees_with_both_oracles() {
    let cfg = fast();
    for n in [1, 3] {
        for k in [-2.0, 1.0, 3.0] {
            let p = FiberPoint::new(n, k);
            let shot = eigenvalue(p, &cfg).unwrap().lambda;
            let fd = fd_oracle(p, &cfg).unwrap().lambda;
            let full = iwatsuka_crosscheck(p, &cfg).unwrap().lambda;
            assert!((shot - fd).abs() < 1e-7, "n={n} k={k}: {shot} vs {fd}");
            assert!((shot - full).abs() < 1e-7, "n={n} k={k}: {shot} vs {full}");
        }
    }
}

#[test]
fn full_line_odd_levels_are_the_half_line_dirichlet_levels() {
    let cfg = fast();
    let mu2 = full_line_eigenvalue(2, 1.5, &cfg).unwrap();
    let mu1 = full_line_eigenvalue(1, 1.5, &cfg).unwrap();
    let lam = eigenvalue(FiberPoint::new(1, 1.5), &cfg).unwrap().lambda;
    assert!(mu1 < mu2);
    assert!((mu2 - lam).abs() < 1e-7);
}

#[test]
fn sturm_count_brackets_each_band() {
    let cfg = fast();
    for n in 1..=3 {
        let lam = eigenvalue(FiberPoint::new(n, 1.0), &cfg).unwrap().lambda;
        assert_eq!(sturm_count(1.0, lam - 1e-3, &cfg).unwrap(), n - 1);
        assert_eq!(sturm_count(1.0, lam + 1e-3, &cfg).unwrap(), n);
    }
}

#[test]
fn eigenfunction_is_normalized_with_dirichlet_edge_and_n_minus_one_zeros() {
    for n in 1..=3 {
        let u = eigenfunction(FiberPoint::new(n, 2.0), &fast()).unwrap();
        assert_eq!(u.value_at(0.0), 0.0);
        assert!(u.boundary_slope > 0.0);
        assert!((u.norm_check - 1.0).abs() < 1e-9, "{}", u.norm_check);
        assert!(u.tail_mass < 1e-20);
        assert_eq!(u.interior_zeros(), n - 1);
        assert!((u.mass_below(u.right_end()) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn precision_floor_splits_eigenvalue_from_velocity() {
    let p = FiberPoint::new(1, 6.5);
    assert!(matches!(eigenvalue(p, &fast()), Err(Error::PrecisionFloor(_))));
    let (bp, _) = band_velocity_point(p, &fast()).unwrap();
    let gap_lead = 2.0 / std::f64::consts::PI.sqrt() * 6.5 * (-6.5f64 * 6.5).exp();
    assert!(bp.gap > 0.0 && (bp.gap / gap_lead - 1.0).abs() < 0.05, "{} vs {gap_lead}", bp.gap);
    assert!((bp.dlambda / (-2.0 * 6.5 * gap_lead) - 1.0).abs() < 0.05);
}

#[test]
fn central_difference_matches_boundary_slope() {
    for (n, k) in [(1, 0.0), (2, 2.0), (3, 4.0)] {
        let p = FiberPoint::new(n, k);
        let h = hadamard_derivative(p, &fast()).unwrap();
        let fd = central_difference(p, 1e-4, &fast()).unwrap();
        assert!(((h - fd) / fd).abs() < 1e-6, "n={n} k={k}: {h} vs {fd}");
    }
    assert!(central_difference(FiberPoint::new(1, 1.0), 0.0, &fast()).is_err());
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(eigenvalue(FiberPoint::new(0, 1.0), &fast()).is_err());
    assert!(eigenvalue(FiberPoint::new(1, f64::NAN), &fast()).is_err());
    let mut bad = fast();
    bad.step = -1.0;
    assert!(matches!(eigenvalue(FiberPoint::new(1, 1.0), &bad), Err(Error::InvalidInput(_))));
}

#[test]
fn sweep_is_order_preserving() {
    let ks = [3.0, 0.0, 1.5];
    let out: Vec<f64> = band_sweep(2, &ks, &fast()).into_iter().map(|r| r.unwrap().lambda).collect();
    assert!(out[1] > out[2] && out[2] > out[0]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn bands_decrease_and_stay_above_the_landau_level(n in 1usize..=3, k in -2.0f64..4.5, dk in 0.05f64..0.5) {
        let cfg = fast();
        let (a, _) = band_velocity_point(FiberPoint::new(n, k), &cfg).unwrap();
        let (b, _) = band_velocity_point(FiberPoint::new(n, k + dk), &cfg).unwrap();
        prop_assert!(a.gap > 0.0 && b.gap > 0.0);
        prop_assert!(a.lambda > landau_level(n));
        prop_assert!(b.gap < a.gap);
        prop_assert!(a.dlambda < 0.0);
    }
}
