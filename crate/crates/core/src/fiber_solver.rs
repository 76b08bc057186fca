//! Eigenvalues λₙ(k), eigenfunctions uₙ(·,k) and band velocities λₙ'(k) of the Dirichlet
//! fiber operator h(k) = −∂ₓ² + (x − k)² on the half-line.
//!
//! The production path shoots inward from the classically forbidden right end and roots
//! the boundary value at x = 0. Two finite-difference oracles (half-line and the symmetric
//! full-line problem) provide independent estimates.

use crate::asymptotics;
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::hermite::{check_index, landau_level, psi_pair};
use crate::quadrature::{simpson, simpson_by, trapezoid, GaussLegendre};
use crate::roots::brent;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Numerical settings shared by every solver entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// The computational domain is [0, k + domain_margin].
    pub domain_margin: f64,
    /// Upper bound on the ODE and grid step.
    pub step: f64,
    /// Root tolerance on the eigenvalue.
    pub lambda_tol: f64,
    /// Solution magnitude that triggers a rescale during shooting.
    pub renorm_threshold: f64,
    /// Run the finite-difference oracle alongside every shooting solve.
    pub crosscheck: bool,
    /// Oracle disagreement treated as a solver defect.
    pub disagreement_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            domain_margin: 14.0,
            step: 5e-4,
            lambda_tol: 1e-12,
            renorm_threshold: 1e100,
            crosscheck: true,
            disagreement_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("domain_margin", self.domain_margin),
            ("step", self.step),
            ("lambda_tol", self.lambda_tol),
            ("renorm_threshold", self.renorm_threshold),
            ("disagreement_tol", self.disagreement_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.domain_margin < 8.0 {
            return Err(invalid(format!("domain_margin must be at least 8, got {}", self.domain_margin)));
        }
        if self.renorm_threshold < 1e10 {
            return Err(invalid("renorm_threshold must be at least 1e10"));
        }
        Ok(())
    }

    /// Largest eigenvalue the truncated domain resolves reliably.
    pub fn truncation_limit(&self) -> f64 {
        (0.5 * self.domain_margin).powi(2)
    }

    pub fn without_crosscheck(mut self) -> Self {
        self.crosscheck = false;
        self
    }
}

/// A band index and quasi-momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub n: usize,
    pub k: f64,
}

impl FiberPoint {
    pub fn new(n: usize, k: f64) -> Self {
        FiberPoint { n, k }
    }

    fn validate(&self) -> Result<()> {
        check_index(self.n)?;
        if !self.k.is_finite() {
            return Err(invalid(format!("quasi-momentum must be finite, got {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shooting,
    FdOracle,
    Iwatsuka,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Shooting => "shooting",
            Method::FdOracle => "fd_oracle",
            Method::Iwatsuka => "iwatsuka",
        }
    }
}

/// One sample of a dispersion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub n: usize,
    pub k: f64,
    pub lambda: f64,
    /// λₙ'(k) from the boundary slope of the eigenfunction.
    pub dlambda: f64,
    pub err_est: f64,
    pub method: Method,
    /// λₙ(k) − Eₙ carried with relative (not absolute) accuracy.
    pub gap: f64,
}

/// Uniform grid on [0, k + margin] with an even number of intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FiberGrid {
    pub k: f64,
    pub intervals: usize,
    pub h: f64,
}

impl FiberGrid {
    pub fn new(k: f64, cfg: &SolverConfig) -> Result<Self> {
        let length = k + cfg.domain_margin;
        if !(length > 1.0) {
            return Err(invalid(format!(
                "domain [0, k + margin] is degenerate for k = {k}, margin = {}",
                cfg.domain_margin
            )));
        }
        let mut intervals = (length / cfg.step).ceil() as usize;
        intervals += intervals % 2;
        Ok(FiberGrid { k, intervals, h: length / intervals as f64 })
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn right_end(&self) -> f64 {
        self.x(self.intervals)
    }
}

// ---------------------------------------------------------------------------------------
// Sturm counting and finite-difference oracles
// ---------------------------------------------------------------------------------------

/// Negative pivots of the LDLᵀ factorization of tridiag(−1, 2 + h²(Vᵢ − λ), −1).
///
/// Pivots are carried as tᵢ = qᵢ − 1, which keeps the O(h²) diagonal perturbation from
/// being absorbed into the constant 2.
fn count_negative_pivots(interior: usize, h: f64, lambda: f64, potential: impl Fn(usize) -> f64) -> usize {
    let h2 = h * h;
    let mut count = 0;
    let mut ratio = 1.0; // t_{i-1} / (1 + t_{i-1}); equals 1 before the first row
    for i in 1..=interior {
        let t = h2 * (potential(i) - lambda) + ratio;
        let mut q = 1.0 + t;
        if q == 0.0 {
            q = f64::MIN_POSITIVE;
        }
        if q < 0.0 {
            count += 1;
        }
        ratio = (q - 1.0) / q;
    }
    count
}

fn check_resolution(h: f64, lambda: f64) -> Result<()> {
    if lambda > 0.0 && h * lambda.sqrt() > 0.1 {
        return Err(invalid(format!(
            "grid too coarse: step*sqrt(lambda) = {:.3} exceeds 0.1",
            h * lambda.sqrt()
        )));
    }
    Ok(())
}

/// Number of eigenvalues of the half-line finite-difference operator strictly below `lambda`.
pub fn sturm_count(k: f64, lambda: f64, cfg: &SolverConfig) -> Result<usize> {
    cfg.validate()?;
    if !k.is_finite() || !lambda.is_finite() {
        return Err(invalid("sturm_count needs finite k and lambda"));
    }
    let grid = FiberGrid::new(k, cfg)?;
    check_resolution(grid.h, lambda)?;
    Ok(half_line_count(k, grid.h, grid.intervals, lambda))
}

fn half_line_count(k: f64, h: f64, intervals: usize, lambda: f64) -> usize {
    count_negative_pivots(intervals - 1, h, lambda, |i| {
        let d = i as f64 * h - k;
        d * d
    })
}

/// Finite-difference discretization used by the oracles.
#[derive(Clone, Copy)]
enum FdKind {
    HalfLine,
    FullLine,
}

#[derive(Clone, Copy)]
struct FdProblem {
    kind: FdKind,
    k: f64,
    length: f64,
    intervals: usize,
}

impl FdProblem {
    fn new(kind: FdKind, k: f64, cfg: &SolverConfig, refine: usize) -> Result<Self> {
        let grid = FiberGrid::new(k, cfg)?;
        let length = grid.right_end();
        let base = match kind {
            FdKind::HalfLine => grid.intervals,
            FdKind::FullLine => 2 * grid.intervals,
        };
        Ok(FdProblem { kind, k, length, intervals: base * refine })
    }

    fn h(&self) -> f64 {
        match self.kind {
            FdKind::HalfLine => self.length / self.intervals as f64,
            FdKind::FullLine => 2.0 * self.length / self.intervals as f64,
        }
    }

    fn interior(&self) -> usize {
        self.intervals - 1
    }

    fn x(&self, i: usize) -> f64 {
        match self.kind {
            FdKind::HalfLine => i as f64 * self.h(),
            FdKind::FullLine => -self.length + i as f64 * self.h(),
        }
    }

    fn potential(&self, i: usize) -> f64 {
        let x = self.x(i);
        let d = match self.kind {
            FdKind::HalfLine => x - self.k,
            FdKind::FullLine => x.abs() - self.k,
        };
        d * d
    }

    fn count(&self, lambda: f64) -> usize {
        count_negative_pivots(self.interior(), self.h(), lambda, |i| self.potential(i))
    }

    /// Smallest discrete eigenvalue with index `m` (1-based) by bisection on the count.
    fn eigenvalue(&self, m: usize, limit: f64, guess: Option<f64>) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, limit);
        if let Some(g) = guess {
            let w = 1e-4 * (1.0 + g.abs());
            if self.count(g - w) < m && self.count(g + w) >= m {
                lo = g - w;
                hi = g + w;
            }
        }
        if lo == 0.0 && self.count(hi) < m {
            return Err(Error::Truncation { lambda: f64::INFINITY, limit });
        }
        check_resolution(self.h(), hi)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
            if self.count(mid) >= m {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Inverse iteration for the eigenvector at shift `sigma`.
    fn eigenvector(&self, sigma: f64) -> Vec<f64> {
        let m = self.interior();
        let h = self.h();
        let h2 = h * h;
        let mut piv = vec![0.0; m + 1];
        let mut ratio = 1.0;
        for i in 1..=m {
            let t = h2 * (self.potential(i) - sigma) + ratio;
            let mut q = 1.0 + t;
            if q == 0.0 {
                q = f64::MIN_POSITIVE;
            }
            piv[i] = q;
            ratio = (q - 1.0) / q;
        }
        let mut y = vec![1.0; m + 2];
        y[0] = 0.0;
        y[m + 1] = 0.0;
        let mut g = vec![0.0; m + 1];
        for _ in 0..4 {
            let mut prev = 0.0;
            for i in 1..=m {
                g[i] = (y[i] + prev) / piv[i];
                prev = g[i];
            }
            y[m] = g[m];
            for i in (1..m).rev() {
                y[i] = g[i] + y[i + 1] / piv[i];
            }
            let scale = y[1..=m].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for v in &mut y[1..=m] {
                *v /= scale;
            }
        }
        y
    }

    /// −u'(0)² from the discrete eigenvector normalized to unit half-line mass.
    fn boundary_velocity(&self, sigma: f64) -> f64 {
        let y = self.eigenvector(sigma);
        let h = self.h();
        let norm2: f64 = y.iter().map(|v| v * v).sum::<f64>() * h;
        match self.kind {
            FdKind::HalfLine => {
                let slope = (4.0 * y[1] - y[2]) / (2.0 * h);
                -(slope * slope) / norm2
            }
            FdKind::FullLine => {
                let c = self.intervals / 2;
                let slope = (y[c + 1] - y[c - 1]) / (2.0 * h);
                -2.0 * slope * slope / norm2
            }
        }
    }
}

fn richardson_oracle(p: FiberPoint, cfg: &SolverConfig, kind: FdKind, index: usize, method: Method) -> Result<BandPoint> {
    cfg.validate()?;
    p.validate()?;
    let limit = cfg.truncation_limit();
    let coarse = FdProblem::new(kind, p.k, cfg, 1)?;
    let fine = FdProblem::new(kind, p.k, cfg, 2)?;
    let lam_h = coarse.eigenvalue(index, limit, None)?;
    let lam_h2 = fine.eigenvalue(index, limit, Some(lam_h))?;
    let lambda = (4.0 * lam_h2 - lam_h) / 3.0;
    if lambda > limit {
        return Err(Error::Truncation { lambda, limit });
    }
    let d_h = coarse.boundary_velocity(lam_h);
    let d_h2 = fine.boundary_velocity(lam_h2);
    let dlambda = (4.0 * d_h2 - d_h) / 3.0;
    ensure_finite(lambda, "finite-difference eigenvalue")?;
    let energy = landau_level(p.n);
    Ok(BandPoint {
        n: p.n,
        k: p.k,
        lambda,
        dlambda,
        err_est: (lam_h2 - lam_h).abs() / 3.0,
        method,
        gap: lambda - energy,
    })
}

/// Independent estimate: half-line finite differences, Sturm bisection, Richardson over h, h/2.
pub fn fd_oracle(p: FiberPoint, cfg: &SolverConfig) -> Result<BandPoint> {
    richardson_oracle(p, cfg, FdKind::HalfLine, p.n, Method::FdOracle)
}

/// The m-th eigenvalue of −∂² + (|x| − k)² on the symmetric domain [−(k+margin), k+margin].
pub fn full_line_eigenvalue(m: usize, k: f64, cfg: &SolverConfig) -> Result<f64> {
    check_index(m)?;
    let p = FiberPoint::new(1, k);
    Ok(richardson_oracle(p, cfg, FdKind::FullLine, m, Method::Iwatsuka)?.lambda)
}

/// λₙ(k) as the 2n-th eigenvalue of the full-line operator with potential (|x| − k)².
pub fn iwatsuka_crosscheck(p: FiberPoint, cfg: &SolverConfig) -> Result<BandPoint> {
    richardson_oracle(p, cfg, FdKind::FullLine, 2 * p.n, Method::Iwatsuka)
}

// ---------------------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------------------

struct Shot {
    boundary: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn integrate_inward(grid: &FiberGrid, lambda: f64, cfg: &SolverConfig, store: bool) -> Result<Shot> {
    let k = grid.k;
    let h = grid.h;
    let n = grid.intervals;
    let q = |x: f64| {
        let d = x - k;
        d * d - lambda
    };
    let kappa2 = q(grid.right_end());
    if !(kappa2 > 0.0) {
        return Err(invalid(format!(
            "lambda = {lambda} is not below the potential at the right end of the domain"
        )));
    }
    let mut v = 1.0f64;
    let mut w = -kappa2.sqrt();
    let (mut values, mut slopes) = if store {
        (vec![0.0; n + 1], vec![0.0; n + 1])
    } else {
        (Vec::new(), Vec::new())
    };
    if store {
        values[n] = v;
        slopes[n] = w;
    }
    let mut max_abs = 1.0f64;
    let s = -h;
    for i in (1..=n).rev() {
        let x = i as f64 * h;
        let q0 = q(x);
        let qm = q((i as f64 - 0.5) * h);
        let q1 = q((i - 1) as f64 * h);
        let k1v = w;
        let k1w = q0 * v;
        let k2v = w + 0.5 * s * k1w;
        let k2w = qm * (v + 0.5 * s * k1v);
        let k3v = w + 0.5 * s * k2w;
        let k3w = qm * (v + 0.5 * s * k2v);
        let k4v = w + s * k3w;
        let k4w = q1 * (v + s * k3v);
        v += s / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += s / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        let a = v.abs();
        if a > cfg.renorm_threshold {
            let scale = 1.0 / a;
            v *= scale;
            w *= scale;
            max_abs *= scale;
            if store {
                for j in i..=n {
                    values[j] *= scale;
                    slopes[j] *= scale;
                }
            }
        }
        if !(v.is_finite() && w.is_finite()) {
            return Err(Error::NonFinite(format!("shooting state overflowed near x = {x}")));
        }
        max_abs = max_abs.max(v.abs());
        if store {
            values[i - 1] = v;
            slopes[i - 1] = w;
        }
    }
    if store {
        for j in 0..=n {
            values[j] /= max_abs;
            slopes[j] /= max_abs;
        }
    }
    Ok(Shot { boundary: v / max_abs, values, slopes })
}

/// Scale-normalized boundary value F(λ) = v(0)/max|v| of the inward-shot decaying solution.
pub fn shoot(lambda: f64, p: FiberPoint, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    p.validate()?;
    if !lambda.is_finite() {
        return Err(invalid("lambda must be finite"));
    }
    let grid = FiberGrid::new(p.k, cfg)?;
    Ok(integrate_inward(&grid, lambda, cfg, false)?.boundary)
}

/// Normalized eigenfunction on the grid [0, k + margin] with its derivative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionSample {
    pub n: usize,
    pub k: f64,
    /// Grid spacing; abscissae are `i * step`.
    pub step: f64,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// uₙ'(0, k) > 0 by convention.
    pub boundary_slope: f64,
    /// Trapezoid-rule norm of the normalized samples (an independent check on the Simpson normalization).
    pub norm_check: f64,
    /// Estimated mass beyond the right end of the grid.
    pub tail_mass: f64,
}

fn gl4() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(4))
}

impl EigenfunctionSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn right_end(&self) -> f64 {
        self.x(self.len() - 1)
    }

    fn hermite_piece(&self, i: usize, t: f64) -> f64 {
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }

    /// Cubic Hermite interpolant of uₙ(·,k); zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        if !(x > 0.0) || x >= self.right_end() {
            return 0.0;
        }
        let pos = x / self.step;
        let i = (pos.floor() as usize).min(self.len() - 2);
        self.hermite_piece(i, pos - i as f64)
    }

    /// ∫₀ᵃ uₙ(x,k)² dx, exact for the piecewise cubic interpolant.
    pub fn mass_below(&self, a: f64) -> f64 {
        if !(a > 0.0) || self.len() < 2 {
            return 0.0;
        }
        let a = a.min(self.right_end());
        let rule = gl4();
        let full = ((a / self.step).floor() as usize).min(self.len() - 1);
        let piece = |i: usize, t_end: f64| -> f64 {
            rule.integrate(0.0, t_end, |t| {
                let v = self.hermite_piece(i, t);
                v * v
            }) * self.step
        };
        let mut total = 0.0;
        for i in 0..full.min(self.len() - 1) {
            total += piece(i, 1.0);
        }
        let rest = a / self.step - full as f64;
        if full < self.len() - 1 && rest > 0.0 {
            total += piece(full, rest);
        }
        total
    }

    /// Keeps every `factor`-th sample; interpolation accuracy stays O(step⁴) in the coarser step.
    pub fn decimated(&self, factor: usize) -> EigenfunctionSample {
        let factor = factor.max(1);
        let count = (self.len() - 1) / factor + 1;
        EigenfunctionSample {
            n: self.n,
            k: self.k,
            step: self.step * factor as f64,
            values: (0..count).map(|j| self.values[j * factor]).collect(),
            slopes: (0..count).map(|j| self.slopes[j * factor]).collect(),
            boundary_slope: self.boundary_slope,
            norm_check: self.norm_check,
            tail_mass: self.tail_mass,
        }
    }

    /// Sign changes strictly inside (0, right end), ignoring samples below 10⁻⁹ of the maximum.
    pub fn interior_zeros(&self) -> usize {
        let floor = 1e-9 * self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut count = 0;
        let mut last = 0.0f64;
        for &v in &self.values[1..] {
            if v.abs() > floor {
                if last != 0.0 && v.signum() != last.signum() {
                    count += 1;
                }
                last = v;
            }
        }
        count
    }
}

/// Below this leading-order gap the eigenvalue is no longer representable next to Eₙ.
pub const GAP_FLOOR: f64 = 1e-14;

/// Quasi-momentum above which the identity-based gap replaces λ − Eₙ.
const IDENTITY_K: f64 = 1.5;

fn sturm_bracket_center(p: FiberPoint, grid: &FiberGrid, limit: f64) -> Result<f64> {
    let count = |lam: f64| half_line_count(p.k, grid.h, grid.intervals, lam);
    let (mut lo, mut hi) = (0.0, limit);
    if count(hi) < p.n {
        return Err(Error::Truncation { lambda: f64::INFINITY, limit });
    }
    check_resolution(grid.h, hi)?;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if count(mid) >= p.n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eigenvalue and normalized eigenfunction from the shooting method.
pub fn eigenpair(p: FiberPoint, cfg: &SolverConfig) -> Result<(BandPoint, EigenfunctionSample)> {
    let (point, sample) = solve(p, cfg)?;
    if !(point.lambda > landau_level(p.n)) {
        return Err(Error::PrecisionFloor(format!(
            "lambda_{}({}) - E_n = {:e} is not resolvable in double precision",
            p.n, p.k, point.gap
        )));
    }
    Ok((point, sample))
}

/// Like [`eigenpair`], but still succeeds once λₙ(k) rounds to Eₙ; the gap, the
/// eigenfunction and the band velocity stay accurate in relative terms.
fn solve(p: FiberPoint, cfg: &SolverConfig) -> Result<(BandPoint, EigenfunctionSample)> {
    match solve_bracketed(p, cfg, true) {
        Err(Error::Bracket(_)) => solve_bracketed(p, cfg, false),
        other => other,
    }
}

fn solve_bracketed(p: FiberPoint, cfg: &SolverConfig, near_level: bool) -> Result<(BandPoint, EigenfunctionSample)> {
    cfg.validate()?;
    p.validate()?;
    let grid = FiberGrid::new(p.k, cfg)?;
    let energy = landau_level(p.n);
    let limit = cfg.truncation_limit();
    let residual = |lam: f64| integrate_inward(&grid, lam, cfg, false).map(|s| s.boundary);

    let mut bracket = None;
    let lead = if near_level && p.k >= 2.5 { asymptotics::leading_gap(p.n, p.k) } else { f64::INFINITY };
    if lead <= 0.125 {
        let slack = 1e-11 * energy;
        let lo = energy - slack;
        let hi = energy + 4.0 * lead + slack;
        let (flo, fhi) = (residual(lo)?, residual(hi)?);
        if flo.signum() != fhi.signum() {
            bracket = Some((lo, hi, flo, fhi));
        }
    }
    if bracket.is_none() {
        let center = sturm_bracket_center(p, &grid, limit)?;
        let mut w = 1e-7 * (1.0 + center * center);
        for _ in 0..24 {
            let (lo, hi) = (center - w, center + w);
            let (flo, fhi) = (residual(lo)?, residual(hi)?);
            if flo.signum() != fhi.signum() {
                bracket = Some((lo, hi, flo, fhi));
                break;
            }
            w *= 4.0;
        }
    }
    let (lo, hi, flo, fhi) = bracket.ok_or_else(|| {
        Error::Bracket(format!("no sign change of the shooting residual near band {} at k = {}", p.n, p.k))
    })?;
    let root = brent(residual, lo, hi, flo, fhi, cfg.lambda_tol, 300)?;

    // Combine the two bracketing solutions so that the Dirichlet value vanishes exactly;
    // this removes the growing component that either endpoint carries near x = 0.
    let a = integrate_inward(&grid, root.best, cfg, true)?;
    let (mut values, mut slopes, lambda_root) = if root.f_best == 0.0 || root.best == root.other {
        (a.values, a.slopes, root.best)
    } else {
        let b = integrate_inward(&grid, root.other, cfg, true)?;
        let (fa, fb) = (a.boundary, b.boundary);
        let denom = fb - fa;
        let vals: Vec<f64> = a.values.iter().zip(&b.values).map(|(va, vb)| (fb * va - fa * vb) / denom).collect();
        let slps: Vec<f64> = a.slopes.iter().zip(&b.slopes).map(|(sa, sb)| (fb * sa - fa * sb) / denom).collect();
        (vals, slps, root.interpolated())
    };
    values[0] = 0.0;
    if lambda_root > limit {
        return Err(Error::Truncation { lambda: lambda_root, limit });
    }

    let norm2 = simpson(&values.iter().map(|v| v * v).collect::<Vec<_>>(), grid.h);
    ensure_finite(norm2, "eigenfunction norm")?;
    if !(norm2 > 0.0) {
        return Err(Error::Quadrature("eigenfunction has vanishing norm".into()));
    }
    let kappa = ((grid.right_end() - p.k).powi(2) - lambda_root).sqrt();
    let tail_mass = values[grid.intervals].powi(2) / (2.0 * kappa) / norm2;
    if tail_mass > 1e-12 {
        return Err(Error::Quadrature(format!("tail mass {tail_mass:e} beyond the truncated domain")));
    }
    let mut scale = 1.0 / norm2.sqrt();
    if slopes[0] < 0.0 {
        scale = -scale;
    }
    for v in values.iter_mut() {
        *v *= scale;
    }
    for s in slopes.iter_mut() {
        *s *= scale;
    }
    let boundary_slope = slopes[0];
    if !(boundary_slope > 0.0) {
        return Err(Error::NonFinite(format!("boundary slope {boundary_slope} is not positive")));
    }
    let sample = EigenfunctionSample {
        n: p.n,
        k: p.k,
        step: grid.h,
        norm_check: trapezoid(&values.iter().map(|v| v * v).collect::<Vec<_>>(), grid.h),
        values,
        slopes,
        boundary_slope,
        tail_mass,
    };
    let zeros = sample.interior_zeros();
    if zeros != p.n - 1 {
        return Err(Error::Bracket(format!(
            "converged to a state with {zeros} interior zeros, expected {} (band {} at k = {})",
            p.n - 1,
            p.n,
            p.k
        )));
    }

    let gap = if p.k >= IDENTITY_K {
        identity_gap(&sample, p.n).unwrap_or(lambda_root - energy)
    } else {
        lambda_root - energy
    };
    let lambda = if p.k >= IDENTITY_K { energy + gap } else { lambda_root };
    if !(gap > 0.0) {
        return Err(Error::PrecisionFloor(format!(
            "lambda_{}({}) - E_n = {gap:e} is not resolvable in double precision",
            p.n, p.k
        )));
    }

    let mut err_est = root.width();
    if cfg.crosscheck {
        let oracle = fd_oracle(p, cfg)?;
        let diff = (lambda - oracle.lambda).abs();
        if diff > cfg.disagreement_tol {
            return Err(Error::Disagreement { shooting: lambda, oracle: oracle.lambda });
        }
        err_est = err_est.max(diff);
    }
    let point = BandPoint {
        n: p.n,
        k: p.k,
        lambda,
        dlambda: -boundary_slope * boundary_slope,
        err_est,
        method: Method::Shooting,
        gap,
    };
    Ok((point, sample))
}

/// λ − Eₙ = uₙ'(0) Ψₙ(−k) / ∫₀^∞ uₙ(x) Ψₙ(x − k) dx, obtained by pairing the two
/// equations and integrating by parts; every factor is computed to relative accuracy.
fn identity_gap(u: &EigenfunctionSample, n: usize) -> Option<f64> {
    let k = u.k;
    let overlap = simpson_by(u.len(), u.step, |i| u.values[i] * psi_pair(n, u.x(i) - k).0);
    if overlap.abs() < 0.5 {
        return None;
    }
    Some(u.boundary_slope * psi_pair(n, -k).0 / overlap)
}

/// λₙ(k) from shooting, checked against the finite-difference oracle when enabled.
pub fn eigenvalue(p: FiberPoint, cfg: &SolverConfig) -> Result<BandPoint> {
    eigenpair(p, cfg).map(|(b, _)| b)
}

/// Normalized eigenfunction uₙ(·,k) with uₙ'(0,k) > 0.
pub fn eigenfunction(p: FiberPoint, cfg: &SolverConfig) -> Result<EigenfunctionSample> {
    solve(p, cfg).map(|(_, u)| u)
}

/// Band point whose `gap` and `dlambda` are meaningful even where `lambda` rounds to Eₙ.
pub fn band_velocity_point(p: FiberPoint, cfg: &SolverConfig) -> Result<(BandPoint, EigenfunctionSample)> {
    solve(p, cfg)
}

/// Band velocity λₙ'(k) = −uₙ'(0,k)².
pub fn hadamard_derivative(p: FiberPoint, cfg: &SolverConfig) -> Result<f64> {
    eigenfunction(p, cfg).map(|u| -u.boundary_slope * u.boundary_slope)
}

/// Central difference (gap(k + h) − gap(k − h))/(2h) of the relative-accurate gap.
pub fn central_difference(p: FiberPoint, h: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("difference step must be positive, got {h}")));
    }
    let (plus, _) = solve(FiberPoint::new(p.n, p.k + h), cfg)?;
    let (minus, _) = solve(FiberPoint::new(p.n, p.k - h), cfg)?;
    ensure_finite((plus.gap - minus.gap) / (2.0 * h), "central difference")
}

/// Order-preserving parallel sweep over quasi-momenta; each point fails independently.
pub fn band_sweep(n: usize, k_values: &[f64], cfg: &SolverConfig) -> Vec<Result<BandPoint>> {
    k_values
        .par_iter()
        .map(|&k| eigenvalue(FiberPoint::new(n, k), cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_eval;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.domain_margin = 6.0;
        assert!(c.validate().is_err());
        c = cfg();
        c.step = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sturm_counts_at_zero_momentum() {
        assert_eq!(sturm_count(0.0, 4.0, &cfg()).unwrap(), 1);
        assert_eq!(sturm_count(0.0, 0.5, &cfg()).unwrap(), 0);
        assert_eq!(sturm_count(0.0, 8.0, &cfg()).unwrap(), 2);
        let mut coarse = cfg();
        coarse.step = 0.1;
        assert!(sturm_count(0.0, 8.0, &coarse).is_err());
    }

    #[test]
    fn oracle_anchors() {
        let a = fd_oracle(FiberPoint::new(1, 0.0), &cfg()).unwrap();
        assert!((a.lambda - 3.0).abs() < 1e-8, "{}", a.lambda);
        let b = fd_oracle(FiberPoint::new(2, 0.0), &cfg()).unwrap();
        assert!((b.lambda - 7.0).abs() < 1e-8, "{}", b.lambda);
        let c = iwatsuka_crosscheck(FiberPoint::new(2, 0.0), &cfg()).unwrap();
        assert!((c.lambda - 7.0).abs() < 1e-7);
        let g = full_line_eigenvalue(1, 0.0, &cfg()).unwrap();
        assert!((g - 1.0).abs() < 1e-8);
    }

    #[test]
    fn shooting_residual_brackets_eigenvalues() {
        let p = FiberPoint::new(1, 0.0);
        assert!(shoot(3.0, p, &cfg()).unwrap().abs() <= 1e-9);
        assert!(shoot(2.9, p, &cfg()).unwrap() * shoot(3.1, p, &cfg()).unwrap() < 0.0);
        let q = FiberPoint::new(1, 3.0);
        let f1 = shoot(1.0, q, &cfg()).unwrap();
        let f2 = shoot(1.01, q, &cfg()).unwrap();
        assert!(f1 != 0.0 && f1 * f2 < 0.0);
    }

    #[test]
    fn ground_band_anchor_and_ordering() {
        let p0 = eigenvalue(FiberPoint::new(1, 0.0), &cfg()).unwrap();
        assert!((p0.lambda - 3.0).abs() < 1e-10, "{}", p0.lambda - 3.0);
        let m2 = eigenvalue(FiberPoint::new(1, -2.0), &cfg()).unwrap();
        assert!(m2.lambda >= 4.0);
        let l2 = eigenvalue(FiberPoint::new(1, 2.0), &cfg()).unwrap();
        let l3 = eigenvalue(FiberPoint::new(1, 3.0), &cfg()).unwrap();
        assert!(l2.lambda > l3.lambda && l3.lambda > 1.0);
        assert!((l3.gap / 4.18e-4 - 1.0).abs() < 0.12, "gap {}", l3.gap);
        assert!((l3.dlambda / -2.507e-3 - 1.0).abs() < 0.15, "dlambda {}", l3.dlambda);
    }

    #[test]
    fn eigenfunction_at_zero_is_restricted_oscillator_state() {
        let u = eigenfunction(FiberPoint::new(1, 0.0), &cfg()).unwrap();
        assert_eq!(u.values[0], 0.0);
        let mut worst: f64 = 0.0;
        for i in (0..u.len()).step_by(7) {
            let x = u.x(i);
            let exact = 2f64.sqrt() * hermite_eval(2, x).unwrap().0;
            worst = worst.max((u.values[i] - exact).abs());
        }
        assert!(worst < 1e-8, "worst {worst:e}");
        assert!((u.norm_check - 1.0).abs() < 1e-8);
        let u3 = eigenfunction(FiberPoint::new(3, 1.0), &cfg()).unwrap();
        assert_eq!(u3.interior_zeros(), 2);
        assert!(u3.boundary_slope > 0.0);
    }

    #[test]
    fn sample_interpolation_and_mass() {
        let u = eigenfunction(FiberPoint::new(2, 1.0), &cfg()).unwrap();
        assert!((u.mass_below(u.right_end()) - 1.0).abs() < 1e-10);
        let d = u.decimated(8);
        assert!((d.mass_below(d.right_end()) - 1.0).abs() < 1e-8);
        let x = 1.23456;
        let i = (x / u.step) as usize;
        assert!((d.value_at(x) - u.value_at(x)).abs() < 1e-8);
        assert!((u.value_at(u.x(i)) - u.values[i]).abs() < 1e-14);
        assert!(d.mass_below(1.0) < d.mass_below(2.0));
    }

    #[test]
    fn sweep_preserves_order_and_purity() {
        let ks = [0.0, 1.0, 2.0, 3.0, 1.0];
        let out = band_sweep(1, &ks, &cfg());
        let lams: Vec<f64> = out.iter().map(|r| r.as_ref().unwrap().lambda).collect();
        assert!(lams[0] > lams[1] && lams[1] > lams[2] && lams[2] > lams[3]);
        assert_eq!(out[1].as_ref().unwrap(), out[4].as_ref().unwrap());
        assert!(band_sweep(1, &[], &cfg()).is_empty());
    }

    #[test]
    fn hadamard_matches_central_difference_at_k1() {
        let c = cfg().without_crosscheck();
        let h = 1e-4;
        let d = hadamard_derivative(FiberPoint::new(1, 1.0), &c).unwrap();
        let lp = eigenvalue(FiberPoint::new(1, 1.0 + h), &c).unwrap().lambda;
        let lm = eigenvalue(FiberPoint::new(1, 1.0 - h), &c).unwrap().lambda;
        let fd = (lp - lm) / (2.0 * h);
        assert!(((d - fd) / fd).abs() < 1e-6, "{d} vs {fd}");
    }
}
