//! Harmonic-oscillator eigenfunctions Ψₙ, the Wronskian-conjugate second solutions Φₙ,
//! and their leading-order behaviour as x → −∞.
//!
//! Band indices are 1-based throughout the public API (n = 1 is the ground state with
//! energy Eₙ = 2n − 1). The recurrence below uses the 0-based index m = n − 1 internally.

use crate::error::{ensure_finite, invalid, Error, Result};
use std::f64::consts::PI;

/// Default bound on |ΨΦ' − Ψ'Φ − 1| accepted from [`second_solution`].
pub const WRONSKIAN_TOL: f64 = 1e-8;

/// Largest integration step accepted for second solutions.
pub const MAX_PHI_STEP: f64 = 1e-3;

pub(crate) fn check_index(n: usize) -> Result<()> {
    if n == 0 {
        Err(invalid("band index n must be at least 1"))
    } else {
        Ok(())
    }
}

/// Landau level Eₙ = 2n − 1.
pub fn landau_level(n: usize) -> f64 {
    2.0 * n as f64 - 1.0
}

/// γₙ = (2^{n−1} (n−1)! √π)^{−1/2}, evaluated in log space.
pub fn gamma(n: usize) -> f64 {
    let m = n.saturating_sub(1);
    let log_fact: f64 = (1..=m).map(|j| (j as f64).ln()).sum();
    let log = m as f64 * std::f64::consts::LN_2 + log_fact + 0.5 * PI.ln();
    (-0.5 * log).exp()
}

/// Returns (Eₙ, γₙ).
pub fn landau_gamma(n: usize) -> Result<(f64, f64)> {
    check_index(n)?;
    Ok((landau_level(n), gamma(n)))
}

/// Ψₙ(x) and Ψₙ'(x) from the normalized three-term recurrence on damped functions.
pub fn hermite_eval(n: usize, x: f64) -> Result<(f64, f64)> {
    check_index(n)?;
    if !x.is_finite() {
        return Err(invalid(format!("hermite_eval needs a finite abscissa, got {x}")));
    }
    Ok(psi_pair(n, x))
}

/// Unchecked evaluation used in inner loops.
pub(crate) fn psi_pair(n: usize, x: f64) -> (f64, f64) {
    let m = n - 1;
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if m == 0 {
        return (psi0, -x * psi0);
    }
    let mut prev = psi0;
    let mut cur = x * std::f64::consts::SQRT_2 * psi0;
    for j in 2..=m {
        let jf = j as f64;
        let next = x * (2.0 / jf).sqrt() * cur - ((jf - 1.0) / jf).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    let deriv = (2.0 * m as f64).sqrt() * prev - x * cur;
    (cur, deriv)
}

/// Leftmost real zero of Ψₙ, or `None` for the zero-free ground state.
pub fn leftmost_zero(n: usize) -> Result<Option<f64>> {
    check_index(n)?;
    if n == 1 {
        return Ok(None);
    }
    let start = -(4.0 * n as f64 + 2.0).sqrt() - 1.0;
    let step = 1e-3;
    let mut x = start;
    let mut fx = psi_pair(n, x).0;
    while x < 1e-12 {
        let xn = x + step;
        let fn_ = psi_pair(n, xn).0;
        if fn_ == 0.0 {
            return Ok(Some(xn));
        }
        if fn_.signum() != fx.signum() {
            let (mut lo, mut hi, mut flo) = (x, xn, fx);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = psi_pair(n, mid).0;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        x = xn;
        fx = fn_;
    }
    Err(Error::Bracket(format!("no zero of Psi_{n} found on the left half-line")))
}

/// Ψₙ, Φₙ and derivatives on a uniform grid, with the measured Wronskian drift.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPairSample {
    pub n: usize,
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// max over the grid of |ΨΦ' − Ψ'Φ − 1|
    pub wronskian_error: f64,
}

/// Samples Φₙ on [x_left, x_right] (both ≤ 0, left of every zero of Ψₙ).
///
/// Φₙ is the solution of u'' = (x² − Eₙ)u with opposite parity to Ψₙ and unit Wronskian
/// ΨΦ' − Ψ'Φ = 1. It is seeded at the origin and integrated outward, the direction in
/// which Φₙ dominates Ψₙ. For odd n it coincides with Ψₙ(x)∫₀ˣΨₙ⁻².
pub fn second_solution(n: usize, x_left: f64, x_right: f64, step: f64) -> Result<SolutionPairSample> {
    check_index(n)?;
    for (v, name) in [(x_left, "x_left"), (x_right, "x_right"), (step, "step")] {
        if !v.is_finite() {
            return Err(invalid(format!("{name} must be finite")));
        }
    }
    if x_left > x_right {
        return Err(invalid(format!("x_left {x_left} exceeds x_right {x_right}")));
    }
    if !(step > 0.0 && step <= MAX_PHI_STEP) {
        return Err(invalid(format!("step must lie in (0, {MAX_PHI_STEP}], got {step}")));
    }
    if x_right > 0.0 {
        return Err(invalid("second solutions are sampled on the left tail only (x_right <= 0)"));
    }
    if let Some(z) = leftmost_zero(n)? {
        if x_right >= z {
            return Err(invalid(format!(
                "window reaches the oscillatory region of Psi_{n}: x_right = {x_right} >= zero at {z:.6}"
            )));
        }
    }
    let intervals = ((x_right - x_left) / step).ceil().max(1.0) as usize;
    let h = if x_right > x_left { (x_right - x_left) / intervals as f64 } else { 0.0 };
    let count = if h > 0.0 { intervals + 1 } else { 1 };
    sample_pair(n, x_left, h, count, WRONSKIAN_TOL)
}

/// Builds the full pair on `y0 + j h`, `j < count`, without the zero-free restriction.
pub(crate) fn sample_pair(n: usize, y0: f64, h: f64, count: usize, tol: f64) -> Result<SolutionPairSample> {
    let (phi, dphi) = phi_on_grid(n, y0, h, count)?;
    let mut grid = Vec::with_capacity(count);
    let mut psi = Vec::with_capacity(count);
    let mut dpsi = Vec::with_capacity(count);
    let mut werr: f64 = 0.0;
    for j in 0..count {
        let y = y0 + j as f64 * h;
        let (p, dp) = psi_pair(n, y);
        werr = werr.max((p * dphi[j] - dp * phi[j] - 1.0).abs());
        grid.push(y);
        psi.push(p);
        dpsi.push(dp);
    }
    ensure_finite(werr, "Wronskian of the second solution")?;
    if werr > tol {
        return Err(Error::Wronskian { error: werr, tolerance: tol });
    }
    Ok(SolutionPairSample { n, grid, psi, dpsi, phi, dphi, wronskian_error: werr })
}

fn oscillator_rhs(y: f64, energy: f64) -> f64 {
    y * y - energy
}

fn rk4_oscillator(y: f64, u: f64, p: f64, s: f64, energy: f64) -> (f64, f64) {
    let q0 = oscillator_rhs(y, energy);
    let qm = oscillator_rhs(y + 0.5 * s, energy);
    let q1 = oscillator_rhs(y + s, energy);
    let k1u = p;
    let k1p = q0 * u;
    let k2u = p + 0.5 * s * k1p;
    let k2p = qm * (u + 0.5 * s * k1u);
    let k3u = p + 0.5 * s * k2p;
    let k3p = qm * (u + 0.5 * s * k2u);
    let k4u = p + s * k3p;
    let k4p = q1 * (u + s * k3u);
    (
        u + s / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        p + s / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// Φₙ and Φₙ' at `y0 + j h` for `j < count`; the last abscissa must not be positive.
pub(crate) fn phi_on_grid(n: usize, y0: f64, h: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if count == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let energy = landau_level(n);
    let y_last = y0 + (count - 1) as f64 * h;
    if y_last > 1e-12 {
        return Err(invalid("second-solution grid must end at or left of the origin"));
    }
    let y_last = y_last.min(0.0);
    let (psi0, dpsi0) = psi_pair(n, 0.0);
    let (mut u, mut p) = if n % 2 == 1 { (0.0, 1.0 / psi0) } else { (-1.0 / dpsi0, 0.0) };

    // reach the right end of the grid from the seed at the origin
    let lead_steps = if y_last < 0.0 {
        let target = if h > 0.0 { h } else { MAX_PHI_STEP };
        (-y_last / target).ceil().max(1.0) as usize
    } else {
        0
    };
    if lead_steps > 0 {
        let s = y_last / lead_steps as f64;
        for i in 0..lead_steps {
            let y = i as f64 * s;
            (u, p) = rk4_oscillator(y, u, p, s, energy);
        }
    }

    let mut phi = vec![0.0; count];
    let mut dphi = vec![0.0; count];
    phi[count - 1] = u;
    dphi[count - 1] = p;
    for j in (1..count).rev() {
        let y = y0 + j as f64 * h;
        (u, p) = rk4_oscillator(y, u, p, -h, energy);
        if !(u.is_finite() && p.is_finite()) {
            return Err(Error::NonFinite(format!("second solution overflowed near x = {y}")));
        }
        phi[j - 1] = u;
        dphi[j - 1] = p;
    }
    Ok((phi, dphi))
}

/// Which leading-order tail formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticKind {
    Psi,
    Dpsi,
    Phi,
    Dphi,
}

/// Leading-order forms of Ψₙ, Ψₙ', Φₙ, Φₙ' as x → −∞.
pub fn asymptotic_eval(n: usize, x: f64, which: AsymptoticKind) -> Result<f64> {
    check_index(n)?;
    if !(x.is_finite() && x < 0.0) {
        return Err(invalid(format!("asymptotic forms need finite x < 0, got {x}")));
    }
    let g = gamma(n);
    let ni = n as i32;
    let value = match which {
        AsymptoticKind::Psi => g * 2f64.powi(ni - 1) * x.powi(ni - 1) * (-0.5 * x * x).exp(),
        AsymptoticKind::Dpsi => -g * 2f64.powi(ni - 1) * x.powi(ni) * (-0.5 * x * x).exp(),
        AsymptoticKind::Phi => (0.5 * x * x).exp() / (x.powi(ni) * g * 2f64.powi(ni)),
        AsymptoticKind::Dphi => (0.5 * x * x).exp() / (x.powi(ni - 1) * g * 2f64.powi(ni)),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;

    #[test]
    fn gamma_values() {
        assert!((gamma(1) - PI.powf(-0.25)).abs() < 1e-15);
        assert!((gamma(2) - (2.0 * PI.sqrt()).powf(-0.5)).abs() < 1e-15);
        assert!((gamma(3) - (8.0 * PI.sqrt()).powf(-0.5)).abs() < 1e-15);
        assert!((gamma(1) - 0.751126).abs() < 1e-6);
        assert!((gamma(2) - 0.531126).abs() < 1e-6);
        assert!((gamma(3) - 0.265562).abs() < 1e-6);
        assert_eq!(landau_gamma(3).unwrap().0, 5.0);
        assert!(landau_gamma(0).is_err());
    }

    #[test]
    fn closed_forms_for_low_indices() {
        for &x in &[-6.0f64, -1.3, 0.0, 0.7, 4.2] {
            let g = (-0.5 * x * x).exp() * PI.powf(-0.25);
            let (p1, d1) = hermite_eval(1, x).unwrap();
            assert!((p1 - g).abs() < 1e-15);
            assert!((d1 + x * g).abs() < 1e-15);
            let (p2, _) = hermite_eval(2, x).unwrap();
            assert!((p2 - 2f64.sqrt() * x * g).abs() <= 1e-15 * (1.0 + p2.abs()));
            let (p3, _) = hermite_eval(3, x).unwrap();
            let h2 = 4.0 * x * x - 2.0;
            assert!((p3 - gamma(3) * h2 * (-0.5 * x * x).exp()).abs() < 1e-14);
        }
        let (v, _) = hermite_eval(2, -6.0).unwrap();
        assert!((v / -9.707e-8 - 1.0).abs() < 1e-3);
        assert_eq!(hermite_eval(2, 0.0).unwrap().0, 0.0);
        assert!(hermite_eval(2, 0.0).unwrap().1 != 0.0);
        assert!(hermite_eval(1, f64::NAN).is_err());
    }

    #[test]
    fn parity_holds_to_machine_precision() {
        for n in 1..=10 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            for i in 0..=200 {
                let x = -10.0 + 0.1 * i as f64;
                let a = hermite_eval(n, -x).unwrap().0;
                let b = hermite_eval(n, x).unwrap().0;
                assert!((a - sign * b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalization_over_wide_window() {
        let h = 1e-3;
        let xs: Vec<f64> = (0..=60_000).map(|i| -30.0 + i as f64 * h).collect();
        for n in 1..=10 {
            let vals: Vec<f64> = xs.iter().map(|&x| psi_pair(n, x).0.powi(2)).collect();
            assert!((simpson(&vals, h) - 1.0).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn no_overflow_far_out() {
        for n in 1..=20 {
            for &x in &[-40.0, -25.0, 25.0, 40.0] {
                let (p, d) = hermite_eval(n, x).unwrap();
                assert!(p.is_finite() && d.is_finite());
            }
        }
    }

    #[test]
    fn oscillator_equation_residual() {
        let h = 1e-4;
        for n in 1..=6 {
            let e = landau_level(n);
            for &x in &[-3.1, -1.0, 0.4, 2.2] {
                let dp_plus = psi_pair(n, x + h).1;
                let dp_minus = psi_pair(n, x - h).1;
                let second = (dp_plus - dp_minus) / (2.0 * h);
                let psi = psi_pair(n, x).0;
                let residual = -second + x * x * psi - e * psi;
                assert!(residual.abs() < 1e-7, "n={n} x={x} residual={residual}");
            }
        }
    }

    #[test]
    fn asymptotic_ratio_decays_like_inverse_square() {
        for n in 1..=5 {
            let mut worst: f64 = 0.0;
            for i in 0..=70 {
                let x = -12.0 + 0.1 * i as f64;
                let exact = psi_pair(n, x).0;
                let lead = asymptotic_eval(n, x, AsymptoticKind::Psi).unwrap();
                worst = worst.max((exact / lead - 1.0).abs() * x * x);
            }
            assert!(worst.is_finite() && worst < 10.0 * (n * n) as f64, "n={n} C={worst}");
        }
        let lead = asymptotic_eval(1, -2.5, AsymptoticKind::Psi).unwrap();
        assert!((lead - psi_pair(1, -2.5).0).abs() < 1e-16);
        let r = psi_pair(2, -6.0).0 / asymptotic_eval(2, -6.0, AsymptoticKind::Psi).unwrap();
        assert!((r - 1.0).abs() < 1.0 / 36.0 + 1e-12);
        assert!((asymptotic_eval(1, -3.0, AsymptoticKind::Phi).unwrap() + 19.973).abs() < 1e-3);
        assert!(asymptotic_eval(1, 0.0, AsymptoticKind::Phi).is_err());
    }

    /// Φ₁ from its integral representation Ψ₁(x)∫₀ˣΨ₁⁻², evaluated by fine quadrature.
    fn phi1_by_quadrature(x: f64) -> f64 {
        let m = 200_000;
        let h = x / m as f64;
        let vals: Vec<f64> = (0..=m).map(|i| (i as f64 * h).powi(2).exp()).collect();
        PI.powf(0.25) * (-0.5 * x * x).exp() * simpson(&vals, h)
    }

    #[test]
    fn ground_state_second_solution_matches_integral_form() {
        let s = second_solution(1, -5.0, -0.5, 5e-4).unwrap();
        assert!(s.wronskian_error < 1e-10);
        for &x in &[-5.0, -3.0, -1.0, -0.5] {
            let j = s.grid.iter().position(|g| (g - x).abs() < 1e-9).unwrap();
            let oracle = phi1_by_quadrature(x);
            assert!((s.phi[j] / oracle - 1.0).abs() < 1e-9, "x={x}: {} vs {oracle}", s.phi[j]);
        }
        let j = s.grid.iter().position(|g| (g + 3.0).abs() < 1e-9).unwrap();
        let lead = asymptotic_eval(1, -3.0, AsymptoticKind::Phi).unwrap();
        assert!((s.phi[j] / lead - 1.0).abs() < 0.11);
        // a unit multiple of Psi_1 moves Phi_1(-3) by less than 1e-3 relative
        assert!(s.psi[j] < 8.4e-3 && s.psi[j] / s.phi[j].abs() < 1e-3);
    }

    #[test]
    fn wronskian_conserved_for_several_indices() {
        for n in 1..=6 {
            let right = leftmost_zero(n).unwrap().map_or(-0.25, |z| z - 0.5);
            let s = second_solution(n, -6.0, right, 1e-3).unwrap();
            assert!(s.wronskian_error <= WRONSKIAN_TOL, "n={n}: {}", s.wronskian_error);
            assert_eq!(s.grid.len(), s.phi.len());
            // dominant leading behaviour on the far tail
            let lead = asymptotic_eval(n, s.grid[0], AsymptoticKind::Phi).unwrap();
            assert!((s.phi[0] / lead - 1.0).abs() < 0.5, "n={n}");
        }
    }

    #[test]
    fn rejects_windows_entering_oscillatory_region() {
        let z = leftmost_zero(3).unwrap().unwrap();
        assert!((z + 0.5f64.sqrt()).abs() < 1e-12);
        assert!(second_solution(3, -4.0, -0.5, 1e-3).is_err());
        assert!(second_solution(3, -4.0, -1.0, 1e-3).is_ok());
        assert!(second_solution(2, -4.0, 0.5, 1e-3).is_err());
        assert!(second_solution(1, -4.0, -1.0, 2e-3).is_err());
        assert!(second_solution(1, -1.0, -4.0, 1e-3).is_err());
    }

    #[test]
    fn internal_grid_crosses_zeros_with_unit_wronskian() {
        let s = sample_pair(3, -4.0, 5e-4, 6001, WRONSKIAN_TOL).unwrap();
        assert!(s.wronskian_error < 1e-9);
    }
}
