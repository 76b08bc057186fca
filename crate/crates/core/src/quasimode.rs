//! Quasi-modes fₙ(·,k) = αΨₙ(·−k) + βχ₀(·/k)Φₙ(·−k), their energies and defects, and
//! Kato–Temple enclosures of λₙ(k).

use crate::error::{ensure_finite, invalid, Result};
use crate::fiber_solver::{eigenfunction, FiberGrid, FiberPoint, SolverConfig};
use crate::hermite::{check_index, landau_level, psi_pair, sample_pair, WRONSKIAN_TOL};
use crate::quadrature::simpson_by;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Smallest quasi-momentum for which a quasi-mode is built.
pub const MIN_K: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    #[default]
    ExpBump,
    Smoothstep7,
}

impl FromStr for Transition {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_bump" => Ok(Transition::ExpBump),
            "smoothstep7" => Ok(Transition::Smoothstep7),
            other => Err(invalid(format!("unknown cutoff transition '{other}'"))),
        }
    }
}

/// χ₀: equal to 1 on [0, 1/2], 0 on [3/4, ∞), smooth and non-increasing in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub transition: Transition,
}

impl CutoffSpec {
    pub fn new(transition: Transition) -> Self {
        CutoffSpec { transition }
    }

    /// (χ₀(t), χ₀'(t), χ₀''(t)).
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.5 {
            return (1.0, 0.0, 0.0);
        }
        if t >= 0.75 {
            return (0.0, 0.0, 0.0);
        }
        let s = 4.0 * (t - 0.5);
        let (c, ds, dss) = match self.transition {
            Transition::ExpBump => exp_bump(s),
            Transition::Smoothstep7 => {
                let s2 = s * s;
                let s3 = s2 * s;
                let step = s3 * s * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s3);
                let d1 = 140.0 * s3 * (1.0 - 3.0 * s + 3.0 * s2 - s3);
                let d2 = 420.0 * s2 * (1.0 - 4.0 * s + 5.0 * s2 - 2.0 * s3);
                (1.0 - step, -d1, -d2)
            }
        };
        (c, 4.0 * ds, 16.0 * dss)
    }
}

fn exp_bump(s: f64) -> (f64, f64, f64) {
    let e = 1.0 / (1.0 - s) - 1.0 / s;
    let chi = 1.0 / (1.0 + e.exp());
    let sigma = 1.0 / (1.0 + (-e).exp());
    let w = chi * sigma;
    if w == 0.0 {
        return (chi, 0.0, 0.0);
    }
    let q = 1.0 / (1.0 - s).powi(2) + 1.0 / (s * s);
    let dq = 2.0 / (1.0 - s).powi(3) - 2.0 / (s * s * s);
    (chi, -q * w, w * (q * q * (1.0 - 2.0 * chi) - dq))
}

/// A sampled quasi-mode on the solver grid [0, k + margin].
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiMode {
    pub n: usize,
    pub k: f64,
    pub cutoff: CutoffSpec,
    pub alpha: f64,
    pub beta: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// fₙ'(0,k), equal to −α/Φₙ(−k) by the unit Wronskian.
    pub boundary_slope: f64,
    /// Φₙ(x − k), Φₙ'(x − k) at the grid points x ≤ 3k/4.
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub wronskian_error: f64,
}

impl QuasiMode {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Residual r = (𝔥(k) − Eₙ)f = −β(χ₀''Φₙ/k² + 2χ₀'Φₙ'/k) at every grid point.
    pub fn residual(&self) -> Vec<f64> {
        let k = self.k;
        (0..self.values.len())
            .map(|i| {
                if i >= self.phi.len() {
                    return 0.0;
                }
                let (_, d1, d2) = self.cutoff.eval(self.x(i) / k);
                -self.beta * (d2 / (k * k) * self.phi[i] + 2.0 * d1 / k * self.dphi[i])
            })
            .collect()
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k >= MIN_K) {
        return Err(invalid(format!(
            "quasi-modes need k >= {MIN_K} (Phi_n(-k) away from the oscillatory region), got {k}"
        )));
    }
    Ok(())
}

/// Builds fₙ(·,k) with β = −αΨₙ(−k)/Φₙ(−k) and α fixed by ‖f‖ = 1.
pub fn build(n: usize, k: f64, cutoff: CutoffSpec, cfg: &SolverConfig) -> Result<QuasiMode> {
    check_index(n)?;
    check_k(k)?;
    cfg.validate()?;
    let grid = FiberGrid::new(k, cfg)?;
    let h = grid.h;
    let window = ((0.75 * k / h).floor() as usize).min(grid.intervals);
    let pair = sample_pair(n, -k, h, window + 1, WRONSKIAN_TOL)?;
    let phi0 = pair.phi[0];
    if !(phi0.abs() > 0.0) {
        return Err(invalid(format!("Phi_{n}(-{k}) vanishes")));
    }
    let psi_k = psi_pair(n, -k).0;
    let ratio = -psi_k / phi0;
    let count = grid.intervals + 1;

    let mut base = vec![0.0; count];
    let mut dbase = vec![0.0; count];
    let mut corr = vec![0.0; count];
    let mut dcorr = vec![0.0; count];
    for i in 0..count {
        let x = grid.x(i);
        let (p, dp) = psi_pair(n, x - k);
        base[i] = p;
        dbase[i] = dp;
        if i <= window {
            let (c, dc, _) = cutoff.eval(x / k);
            corr[i] = ratio * c * pair.phi[i];
            dcorr[i] = ratio * (dc / k * pair.phi[i] + c * pair.dphi[i]);
        }
    }
    let norm2 = simpson_by(count, h, |i| {
        let v = base[i] + corr[i];
        v * v
    });
    ensure_finite(norm2, "quasi-mode norm")?;
    let alpha = 1.0 / norm2.sqrt();
    let beta = alpha * ratio;
    let mut values: Vec<f64> = (0..count).map(|i| alpha * (base[i] + corr[i])).collect();
    let slopes: Vec<f64> = (0..count).map(|i| alpha * (dbase[i] + dcorr[i])).collect();
    values[0] = 0.0;
    Ok(QuasiMode {
        n,
        k,
        cutoff,
        alpha,
        beta,
        step: h,
        values,
        slopes,
        boundary_slope: -alpha / phi0,
        phi: pair.phi,
        dphi: pair.dphi,
        wronskian_error: pair.wronskian_error,
    })
}

/// (α(k), β(k)) of the quasi-mode built with the default cutoff.
pub fn coefficients(n: usize, k: f64, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let qm = build(n, k, CutoffSpec::default(), cfg)?;
    Ok((qm.alpha, qm.beta))
}

/// Kato–Temple enclosure. All energies are offsets from `origin`, which lets enclosures
/// narrower than the spacing of doubles near Eₙ be represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoTempleEnclosure {
    pub origin: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub gap_lo: f64,
    pub gap_hi: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub valid: bool,
}

impl KatoTempleEnclosure {
    /// Whether `origin + offset` lies in the enclosure.
    pub fn contains_offset(&self, offset: f64) -> bool {
        match (self.valid, self.lower, self.upper) {
            (true, Some(lo), Some(hi)) => lo <= offset && offset <= hi,
            _ => false,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.contains_offset(value - self.origin)
    }

    pub fn absolute_bounds(&self) -> Option<(f64, f64)> {
        Some((self.origin + self.lower?, self.origin + self.upper?))
    }
}

/// Kato–Temple inequality: if ε² < (gap_hi − η)(η − gap_lo) the interval
/// [η − ε²/(gap_hi − η), η + ε²/(η − gap_lo)] contains an eigenvalue.
pub fn kato_temple(eta: f64, epsilon: f64, gap_lo: f64, gap_hi: f64) -> Result<KatoTempleEnclosure> {
    kato_temple_about(0.0, eta, epsilon, gap_lo, gap_hi)
}

/// [`kato_temple`] with every energy given relative to `origin`.
pub fn kato_temple_about(origin: f64, eta: f64, epsilon: f64, gap_lo: f64, gap_hi: f64) -> Result<KatoTempleEnclosure> {
    for v in [origin, eta, epsilon, gap_lo, gap_hi] {
        ensure_finite(v, "Kato-Temple input")?;
    }
    if gap_lo >= gap_hi {
        return Err(invalid(format!("gap_lo {gap_lo} must be below gap_hi {gap_hi}")));
    }
    let eps2 = epsilon * epsilon;
    let valid = gap_lo < eta && eta < gap_hi && eps2 < (gap_hi - eta) * (eta - gap_lo);
    let (lower, upper) = if valid {
        (Some(eta - eps2 / (gap_hi - eta)), Some(eta + eps2 / (eta - gap_lo)))
    } else {
        (None, None)
    };
    Ok(KatoTempleEnclosure { origin, eta, epsilon, gap_lo, gap_hi, lower, upper, valid })
}

/// Energy, defect and enclosure of one quasi-mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiModeReport {
    pub n: usize,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub boundary_slope: f64,
    /// η = ⟨𝔥(k)f, f⟩.
    pub eta: f64,
    /// η − Eₙ = ⟨r, f⟩, accurate in relative terms.
    pub eta_shift: f64,
    /// η from direct quadrature of the quadratic form.
    pub eta_form: f64,
    pub residual_norm: f64,
    /// ‖(𝔥(k) − η)f‖.
    pub epsilon: f64,
    /// The boundary interaction −β fₙ'(0) Φₙ(−k) = αβ.
    pub interaction: f64,
    pub support_ok: bool,
    pub wronskian_error: f64,
    /// Enclosure about Eₙ with gap (Eₙ − 1, Eₙ + 1).
    pub enclosure: KatoTempleEnclosure,
}

/// η, ‖r‖ and ε for a built quasi-mode, with the support check supp r ⊂ [k/2, 3k/4].
pub fn energy_and_residual(qm: &QuasiMode) -> Result<QuasiModeReport> {
    let h = qm.step;
    let len = qm.values.len();
    let k = qm.k;
    let r = qm.residual();
    let support_ok = r.iter().enumerate().all(|(i, v)| {
        let x = qm.x(i);
        *v == 0.0 || (x >= 0.5 * k && x <= 0.75 * k)
    });
    let f = &qm.values;
    let rf = simpson_by(len, h, |i| r[i] * f[i]);
    let rr = simpson_by(len, h, |i| r[i] * r[i]);
    let ff = simpson_by(len, h, |i| f[i] * f[i]);
    let form = simpson_by(len, h, |i| {
        let d = qm.x(i) - k;
        qm.slopes[i] * qm.slopes[i] + d * d * f[i] * f[i]
    });
    let energy = landau_level(qm.n);
    let shift = rf / ff;
    let eps2 = (rr - 2.0 * shift * rf + shift * shift * ff).max(0.0);
    let epsilon = ensure_finite(eps2.sqrt(), "quasi-mode defect")?;
    let enclosure = kato_temple_about(energy, shift, epsilon, -1.0, 1.0)?;
    Ok(QuasiModeReport {
        n: qm.n,
        k,
        alpha: qm.alpha,
        beta: qm.beta,
        boundary_slope: qm.boundary_slope,
        eta: energy + shift,
        eta_shift: shift,
        eta_form: form / ff,
        residual_norm: rr.sqrt(),
        epsilon,
        interaction: qm.alpha * qm.beta,
        support_ok,
        wronskian_error: qm.wronskian_error,
        enclosure,
    })
}

/// Builds the quasi-mode and evaluates its report in one step.
pub fn report(n: usize, k: f64, cutoff: CutoffSpec, cfg: &SolverConfig) -> Result<QuasiModeReport> {
    energy_and_residual(&build(n, k, cutoff, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenComparison {
    pub n: usize,
    pub k: f64,
    pub sup_diff: f64,
    pub sup_slope_diff: f64,
    /// Boundary slopes of f and of the gauge-fixed eigenfunction have the same sign.
    pub sign_aligned: bool,
    /// The ±1 applied to uₙ.
    pub gauge: f64,
}

/// sup |f − σu| and sup |f' − σu'| over the grid, with σ = ±1 chosen to minimize the first.
pub fn eigen_comparison(n: usize, k: f64, cfg: &SolverConfig) -> Result<EigenComparison> {
    let qm = build(n, k, CutoffSpec::default(), cfg)?;
    let u = eigenfunction(FiberPoint::new(n, k), &cfg.without_crosscheck())?;
    if u.values.len() != qm.values.len() {
        return Err(invalid("quasi-mode and eigenfunction grids differ"));
    }
    let sup = |sigma: f64, a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - sigma * y).abs()));
    let plus = sup(1.0, &qm.values, &u.values);
    let minus = sup(-1.0, &qm.values, &u.values);
    let (gauge, sup_diff) = if plus <= minus { (1.0, plus) } else { (-1.0, minus) };
    Ok(EigenComparison {
        n,
        k,
        sup_diff,
        sup_slope_diff: sup(gauge, &qm.slopes, &u.slopes),
        sign_aligned: qm.boundary_slope * gauge * u.boundary_slope > 0.0,
        gauge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::gamma;

    #[test]
    fn cutoff_shape_and_derivatives() {
        for transition in [Transition::ExpBump, Transition::Smoothstep7] {
            let c = CutoffSpec::new(transition);
            assert_eq!(c.eval(0.3), (1.0, 0.0, 0.0));
            assert_eq!(c.eval(0.8), (0.0, 0.0, 0.0));
            let mut prev = 1.0;
            let h = 1e-5;
            for i in 1..250 {
                let t = 0.5 + i as f64 * 1e-3;
                let (v, d, dd) = c.eval(t);
                assert!((0.0..=1.0).contains(&v) && v <= prev);
                prev = v;
                let fd1 = (c.eval(t + h).0 - c.eval(t - h).0) / (2.0 * h);
                let fd2 = (c.eval(t + h).1 - c.eval(t - h).1) / (2.0 * h);
                assert!((fd1 - d).abs() < 1e-5 * (1.0 + d.abs()), "{transition:?} t={t}");
                assert!((fd2 - dd).abs() < 1e-4 * (1.0 + dd.abs()), "{transition:?} t={t}");
            }
        }
    }

    #[test]
    fn kato_temple_examples() {
        let e = kato_temple(3.0, 0.1, 2.0, 4.0).unwrap();
        assert!(e.valid);
        assert!((e.lower.unwrap() - 2.99).abs() < 1e-14 && (e.upper.unwrap() - 3.01).abs() < 1e-14);
        assert!(!kato_temple(3.0, 1.0, 2.0, 4.0).unwrap().valid);
        assert!(kato_temple(3.0, 0.1, 4.0, 2.0).is_err());
    }

    #[test]
    fn quasimode_at_k3() {
        let cfg = SolverConfig::default();
        let qm = build(1, 3.0, CutoffSpec::default(), &cfg).unwrap();
        assert_eq!(qm.values[0], 0.0);
        assert!(qm.beta > 0.0);
        let lead_beta = 2.0 * gamma(1).powi(2) * 3.0 * (-9.0f64).exp();
        assert!((qm.beta / lead_beta - 1.0).abs() < 0.2);
        let lead_slope = 2.0 * gamma(1) * 3.0 * (-4.5f64).exp();
        assert!((qm.boundary_slope / lead_slope - 1.0).abs() < 0.2 && qm.boundary_slope > 0.0);
        let i = (2.4 / qm.step).ceil() as usize;
        for j in i..qm.values.len() {
            assert_eq!(qm.values[j], qm.alpha * psi_pair(1, qm.x(j) - 3.0).0);
        }
        let rep = energy_and_residual(&qm).unwrap();
        assert!(rep.support_ok);
        assert!((rep.eta_shift / 4.178e-4 - 1.0).abs() < 0.15);
        assert!(((rep.eta_form - 1.0) / rep.eta_shift - 1.0).abs() < 1e-6);
        assert!(rep.enclosure.valid);
    }

    #[test]
    fn alpha_tends_to_one() {
        let (a, b) = coefficients(1, 4.0, &SolverConfig::default()).unwrap();
        assert!((a - 1.0).abs() <= 1e-6);
        let (_, b3) = coefficients(1, 3.0, &SolverConfig::default()).unwrap();
        assert!(b < b3);
        assert!(coefficients(1, 1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn cutoff_choice_does_not_change_leading_energy() {
        let cfg = SolverConfig::default();
        let a = report(1, 4.0, CutoffSpec::new(Transition::ExpBump), &cfg).unwrap();
        let b = report(1, 4.0, CutoffSpec::new(Transition::Smoothstep7), &cfg).unwrap();
        assert!((a.eta_shift / b.eta_shift - 1.0).abs() < 1e-3);
    }
}
