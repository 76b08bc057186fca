//! Large-k expansions of the band functions and the harness comparing them with the solver.

use crate::error::{invalid, Error, Result};
use crate::fiber_solver::{band_velocity_point, eigenvalue, FiberPoint, SolverConfig};
use crate::hermite::{check_index, gamma, landau_level};
use crate::roots::brent;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest δ for which λₙ(k) − Eₙ = δ is resolved by the solver.
pub const DELTA_FLOOR: f64 = 1e-11;

/// Width of the k-window swept by [`velocity_envelope`].
pub const SWEEP_WIDTH: f64 = 4.0;

/// Beyond this quasi-momentum band velocities come from the leading term; there
/// |λₙ'| < 10⁻¹⁹ and the relative error of the formula is O(k⁻²).
pub const FAR_FIELD_K: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPoint {
    pub n: usize,
    pub k: f64,
    pub lambda_lead: f64,
    pub dlambda_lead: f64,
    /// lambda_lead − Eₙ, kept separately because it underflows the sum for large k.
    pub gap_lead: f64,
}

/// 2^{2n−1} γₙ² k^{2n−1} e^{−k²}, evaluated in log space.
pub(crate) fn leading_gap(n: usize, k: f64) -> f64 {
    let g = gamma(n);
    let m = (2 * n - 1) as f64;
    (m * std::f64::consts::LN_2 + 2.0 * g.ln() + m * k.ln() - k * k).exp()
}

/// Leading-order band function and band velocity.
pub fn leading_terms(n: usize, k: f64) -> Result<AsymptoticPoint> {
    check_index(n)?;
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid(format!("leading terms need finite k > 0, got {k}")));
    }
    let gap = leading_gap(n, k);
    Ok(AsymptoticPoint {
        n,
        k,
        lambda_lead: landau_level(n) + gap,
        dlambda_lead: -2.0 * k * gap,
        gap_lead: gap,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0 && delta < 2.0) {
        return Err(invalid(format!("delta must lie in (0, 2), got {delta}")));
    }
    Ok(())
}

/// √|log δ| + ((2n−1)/4) log|log δ| / √|log δ|.
pub fn k_expansion(n: usize, delta: f64) -> Result<f64> {
    check_index(n)?;
    check_delta(delta)?;
    let l = delta.ln().abs();
    let root = l.sqrt();
    Ok(root + 0.25 * (2 * n - 1) as f64 * l.ln() / root)
}

/// 2δ√|log δ| + μ δ log|log δ| / √|log δ|.
pub fn envelope(delta: f64, mu: f64) -> f64 {
    let l = delta.ln().abs();
    2.0 * delta * l.sqrt() + mu * delta * l.ln() / l.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMomentum {
    pub n: usize,
    pub delta: f64,
    pub k_numeric: f64,
    pub k_expansion: f64,
    /// λₙ(k_numeric) − Eₙ − δ.
    pub residual: f64,
}

fn gap_at(n: usize, k: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(band_velocity_point(FiberPoint::new(n, k), cfg)?.0.gap)
}

/// kₙ(δ), the unique k with λₙ(k) = Eₙ + δ.
pub fn k_delta(n: usize, delta: f64, cfg: &SolverConfig) -> Result<ThresholdMomentum> {
    check_index(n)?;
    check_delta(delta)?;
    cfg.validate()?;
    if delta < DELTA_FLOOR {
        return Err(Error::PrecisionFloor(format!(
            "delta = {delta:e} is below the double-precision floor {DELTA_FLOOR:e}"
        )));
    }
    let expansion = k_expansion(n, delta)?;
    let k = solve_level(n, delta, cfg)?;
    let gap = gap_at(n, k, cfg)?;
    Ok(ThresholdMomentum { n, delta, k_numeric: k, k_expansion: expansion, residual: gap - delta })
}

/// The k at which λₙ(k) − Eₙ = gap, for any gap > 0 the solver resolves.
pub(crate) fn solve_level(n: usize, gap: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(invalid(format!("level offset must be positive, got {gap}")));
    }
    let fast = cfg.without_crosscheck();
    let g = |k: f64| gap_at(n, k, &fast).map(|v| (v / gap).ln());
    let l = gap.ln().abs();
    let guess = l.sqrt() + 0.25 * (2 * n - 1) as f64 * l.ln() / l.sqrt();
    let center = if guess.is_finite() && gap < 1.0 { guess } else { 0.5 };
    let (mut lo, mut hi) = (center - 0.5, center + 0.5);
    let (mut glo, mut ghi) = (g(lo)?, g(hi)?);
    let mut tries = 0;
    while glo < 0.0 || ghi > 0.0 {
        tries += 1;
        if tries > 40 {
            return Err(Error::Bracket(format!("could not bracket lambda_{n}(k) = E_n + {gap:e}")));
        }
        if glo < 0.0 {
            hi = lo;
            ghi = glo;
            lo -= 0.5 * tries as f64;
            glo = g(lo)?;
        } else {
            lo = hi;
            glo = ghi;
            hi += 0.5 * tries as f64;
            ghi = g(hi)?;
        }
    }
    Ok(brent(g, lo, hi, glo, ghi, 1e-13, 200)?.interpolated())
}

/// λₙ'(k) from the Hadamard formula, or from the leading term beyond [`FAR_FIELD_K`].
pub fn band_velocity(n: usize, k: f64, cfg: &SolverConfig) -> Result<f64> {
    if k > FAR_FIELD_K {
        return Ok(leading_terms(n, k)?.dlambda_lead);
    }
    Ok(band_velocity_point(FiberPoint::new(n, k), cfg)?.0.dlambda)
}

/// (k, −λₙ'(k)) on `points` equally spaced nodes of [a, b].
pub fn velocity_sweep(n: usize, a: f64, b: f64, points: usize, cfg: &SolverConfig) -> Result<Vec<(f64, f64)>> {
    if points < 2 || !(b > a) {
        return Err(invalid("velocity sweep needs b > a and at least two points"));
    }
    let fast = cfg.without_crosscheck();
    (0..points)
        .into_par_iter()
        .map(|i| {
            let k = a + (b - a) * i as f64 / (points - 1) as f64;
            band_velocity(n, k, &fast).map(|d| (k, -d))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityEnvelope {
    pub n: usize,
    pub delta: f64,
    pub k_delta: f64,
    pub first_term: f64,
    pub bound: f64,
    pub sweep_sup: f64,
    pub argsup: f64,
    pub mu_used: f64,
    /// Smallest μ for which bound ≥ sweep_sup at this δ.
    pub mu_needed: f64,
}

/// Default μₙ = 2n − 1.
pub fn default_mu(n: usize) -> f64 {
    (2 * n - 1) as f64
}

fn mu_needed(delta: f64, sup: f64) -> f64 {
    let l = delta.ln().abs();
    (sup - 2.0 * delta * l.sqrt()) / (delta * l.ln() / l.sqrt())
}

/// Compares sup −λₙ' on [kₙ(δ), kₙ(δ) + 4] with the envelope for the given μ.
pub fn velocity_envelope(n: usize, delta: f64, mu: f64, cfg: &SolverConfig) -> Result<VelocityEnvelope> {
    if !mu.is_finite() {
        return Err(invalid("mu must be finite"));
    }
    let t = k_delta(n, delta, cfg)?;
    let sweep = velocity_sweep(n, t.k_numeric, t.k_numeric + SWEEP_WIDTH, 41, cfg)?;
    let (argsup, sweep_sup) = sweep.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |acc, (k, v)| {
        if v > acc.1 {
            (k, v)
        } else {
            acc
        }
    });
    Ok(VelocityEnvelope {
        n,
        delta,
        k_delta: t.k_numeric,
        first_term: envelope(delta, 0.0),
        bound: envelope(delta, mu),
        sweep_sup,
        argsup,
        mu_used: mu,
        mu_needed: mu_needed(delta, sweep_sup),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCalibration {
    pub n: usize,
    pub mu: f64,
    pub envelopes: Vec<VelocityEnvelope>,
}

/// Minimal μₙ for which the envelope dominates the velocity sweep at every δ given.
pub fn calibrate_mu(n: usize, deltas: &[f64], cfg: &SolverConfig) -> Result<MuCalibration> {
    if deltas.is_empty() {
        return Err(invalid("calibration needs at least one delta"));
    }
    let mut envelopes = Vec::with_capacity(deltas.len());
    for &d in deltas {
        envelopes.push(velocity_envelope(n, d, default_mu(n), cfg)?);
    }
    let mu = envelopes.iter().map(|e| e.mu_needed).fold(f64::NEG_INFINITY, f64::max);
    for e in &mut envelopes {
        e.mu_used = mu;
        e.bound = envelope(e.delta, mu);
    }
    Ok(MuCalibration { n, mu, envelopes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub n: usize,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub mu: f64,
    pub lower: f64,
    pub upper: f64,
    /// (k, −λₙ'(k)) on [kₙ(δ_hi), kₙ(δ_lo)].
    pub samples: Vec<(f64, f64)>,
    pub holds: bool,
}

/// Checks envelope(δ_lo, −μ) ≤ −λₙ'(k) ≤ envelope(δ_hi, μ) for k between kₙ(δ_hi) and kₙ(δ_lo).
pub fn sandwich(n: usize, delta_lo: f64, delta_hi: f64, mu: f64, cfg: &SolverConfig) -> Result<SandwichReport> {
    if !(delta_lo < delta_hi) {
        return Err(invalid("sandwich needs delta_lo < delta_hi"));
    }
    let k_hi = k_delta(n, delta_lo, cfg)?.k_numeric;
    let k_lo = k_delta(n, delta_hi, cfg)?.k_numeric;
    let samples = velocity_sweep(n, k_lo, k_hi, 21, cfg)?;
    let lower = envelope(delta_lo, -mu);
    let upper = envelope(delta_hi, mu);
    let holds = samples.iter().all(|&(_, v)| lower <= v && v <= upper);
    Ok(SandwichReport { n, delta_lo, delta_hi, mu, lower, upper, samples, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub k: f64,
    pub lambda: f64,
    pub gap: f64,
    pub gap_lead: f64,
    pub rho: f64,
    pub dlambda: f64,
    pub dlambda_lead: f64,
    pub rho_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log|ρ − 1| against log k.
    pub slope_rho: f64,
    pub slope_rho_prime: f64,
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(invalid("a slope fit needs at least three points"));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("degenerate slope fit: abscissae coincide"));
    }
    Ok(sxy / sxx)
}

/// Solver-to-formula ratios ρ, ρ' on a k-grid in [2.5, 5] and their log–log decay rates.
pub fn convergence_report(n: usize, k_grid: &[f64], cfg: &SolverConfig) -> Result<ConvergenceReport> {
    check_index(n)?;
    if k_grid.len() < 3 {
        return Err(invalid("convergence report needs at least three k values"));
    }
    if let Some(k) = k_grid.iter().find(|k| !(**k >= 2.5 && **k <= 5.0)) {
        return Err(invalid(format!("convergence grid must lie in [2.5, 5], got {k}")));
    }
    let rows: Vec<ConvergenceRow> = k_grid
        .par_iter()
        .map(|&k| {
            let p = eigenvalue(FiberPoint::new(n, k), cfg)?;
            let a = leading_terms(n, k)?;
            Ok(ConvergenceRow {
                n,
                k,
                lambda: p.lambda,
                gap: p.gap,
                gap_lead: a.gap_lead,
                rho: p.gap / a.gap_lead,
                dlambda: p.dlambda,
                dlambda_lead: a.dlambda_lead,
                rho_prime: p.dlambda / a.dlambda_lead,
            })
        })
        .collect::<Result<_>>()?;
    let lk: Vec<f64> = rows.iter().map(|r| r.k.ln()).collect();
    let lr: Vec<f64> = rows.iter().map(|r| (r.rho - 1.0).abs().ln()).collect();
    let lrp: Vec<f64> = rows.iter().map(|r| (r.rho_prime - 1.0).abs().ln()).collect();
    Ok(ConvergenceReport { n, slope_rho: fit_slope(&lk, &lr)?, slope_rho_prime: fit_slope(&lk, &lrp)?, rows })
}
