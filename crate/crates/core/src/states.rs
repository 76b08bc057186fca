//! Single-band bulk and edge states built from Fourier profiles φₙ(k), their currents,
//! strip masses and real-space fields.

use crate::asymptotics::{envelope, leading_terms, solve_level, FAR_FIELD_K};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::fiber_solver::{band_velocity_point, EigenfunctionSample, FiberPoint, SolverConfig};
use crate::hermite::{check_index, landau_level, psi_pair};
use crate::quadrature::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

const GL_POINTS: usize = 8;
const NORM_TOL: f64 = 1e-8;
const MAX_REFINEMENTS: usize = 6;
/// exp(−T²) = 10⁻¹⁶ for the squared Gaussian profile.
const GAUSSIAN_CUTOFF: f64 = 6.069_221_312_792_274;
const SAMPLE_DECIMATION: usize = 8;

/// Shape of the Fourier weight, with positions measured from kₙ(δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileFamily {
    /// Constant on [kₙ(δ) + from, kₙ(δ) + to].
    Indicator { from: f64, to: f64 },
    /// exp(−(k − kₙ(δ) − offset)²/(2 width²)).
    Gaussian { offset: f64, width: f64 },
    /// (1 + k − kₙ(δ))^{−exponent} on (kₙ(δ), ∞).
    Power { exponent: f64 },
}

impl ProfileFamily {
    pub fn label(&self) -> String {
        match *self {
            ProfileFamily::Indicator { from, to } => format!("indicator:{from},{to}"),
            ProfileFamily::Gaussian { offset, width } => format!("gaussian:{offset},{width}"),
            ProfileFamily::Power { exponent } => format!("power:{exponent}"),
        }
    }

    fn weight(&self, t: f64) -> f64 {
        match *self {
            ProfileFamily::Indicator { .. } => 1.0,
            ProfileFamily::Gaussian { offset, width } => (-(t - offset).powi(2) / (2.0 * width * width)).exp(),
            ProfileFamily::Power { exponent } => (1.0 + t).powf(-exponent),
        }
    }

    /// Checks the parameters without building anything.
    pub fn validate(&self) -> Result<()> {
        self.panels().map(|_| ())
    }

    /// Initial panels in the offset variable t = k − kₙ(δ).
    fn panels(&self) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        match *self {
            ProfileFamily::Indicator { from, to } => {
                if !(from.is_finite() && to.is_finite() && to > from) {
                    return Err(invalid(format!("indicator needs finite from < to, got ({from}, {to})")));
                }
                if from < 0.0 {
                    return Err(invalid(format!("indicator support leaks left of k_n(delta) by {}", -from)));
                }
                let m = ((to - from) / 0.25).ceil().max(1.0) as usize;
                let h = (to - from) / m as f64;
                out.extend((0..m).map(|i| (from + i as f64 * h, from + (i + 1) as f64 * h)));
            }
            ProfileFamily::Gaussian { offset, width } => {
                if !(offset.is_finite() && width.is_finite() && width > 0.0) {
                    return Err(invalid("gaussian needs a finite offset and a positive width"));
                }
                let lo = offset - GAUSSIAN_CUTOFF * width;
                if lo < 0.0 {
                    return Err(invalid(format!(
                        "gaussian support leaks left of k_n(delta): truncated support starts at offset {lo:.4}"
                    )));
                }
                let hi = offset + GAUSSIAN_CUTOFF * width;
                let m = 8;
                let h = (hi - lo) / m as f64;
                out.extend((0..m).map(|i| (lo + i as f64 * h, lo + (i + 1) as f64 * h)));
            }
            ProfileFamily::Power { exponent } => {
                if !(exponent.is_finite() && exponent > 0.5) {
                    return Err(invalid(format!("power profile needs exponent > 1/2, got {exponent}")));
                }
                let t_max = 10f64.powf(8.0 / exponent) - 1.0;
                let mut a = 0.0;
                while a < t_max {
                    let b = (2.0 * (1.0 + a) - 1.0).min(t_max);
                    out.push((a, b));
                    a = b;
                }
            }
        }
        Ok(out)
    }
}

impl FromStr for ProfileFamily {
    type Err = Error;

    /// Parses the [`ProfileFamily::label`] syntax: `indicator:a,b`, `gaussian:offset,width`, `power:p`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').ok_or_else(|| invalid(format!("profile '{s}' lacks ':' before its parameters")))?;
        let values = params
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| invalid(format!("profile parameter '{v}' is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        match (name.trim(), values.as_slice()) {
            ("indicator", &[from, to]) => Ok(ProfileFamily::Indicator { from, to }),
            ("gaussian", &[offset, width]) => Ok(ProfileFamily::Gaussian { offset, width }),
            ("power", &[exponent]) => Ok(ProfileFamily::Power { exponent }),
            ("indicator" | "gaussian", _) => Err(invalid(format!("profile {name} takes two parameters, got '{params}'"))),
            ("power", _) => Err(invalid(format!("profile power takes one parameter, got '{params}'"))),
            _ => Err(invalid(format!("unknown profile family '{name}' (indicator, gaussian, power)"))),
        }
    }
}

/// Normalized Fourier weight on (kₙ(δ), ∞) realized by Gauss–Legendre panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkProfile {
    pub n: usize,
    pub delta: f64,
    pub family: ProfileFamily,
    pub support_left: f64,
    /// Panels in absolute k.
    pub panels: Vec<(f64, f64)>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// |φₙ(node)|, scaled so that ∑ weights·values² = 1.
    pub values: Vec<f64>,
}

fn gl() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(GL_POINTS))
}

fn split(panels: &[(f64, f64)]) -> Vec<(f64, f64)> {
    panels
        .iter()
        .flat_map(|&(a, b)| {
            let m = 0.5 * (a + b);
            [(a, m), (m, b)]
        })
        .collect()
}

impl BulkProfile {
    fn assemble(n: usize, delta: f64, family: ProfileFamily, support_left: f64, panels: Vec<(f64, f64)>) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(a, b) in &panels {
            gl().push_mapped(a, b, &mut nodes, &mut weights);
        }
        let raw: Vec<f64> = nodes.iter().map(|&t| family.weight(t - support_left)).collect();
        let norm2: f64 = raw.iter().zip(&weights).map(|(v, w)| w * v * v).sum();
        ensure_finite(norm2, "profile norm")?;
        if !(norm2 > 0.0) {
            return Err(invalid("profile has zero norm"));
        }
        let scale = norm2.sqrt().recip();
        Ok(BulkProfile {
            n,
            delta,
            family,
            support_left,
            panels,
            nodes,
            weights,
            values: raw.iter().map(|v| v * scale).collect(),
        })
    }

    fn raw_norm(&self) -> f64 {
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * self.family.weight(t - self.support_left).powi(2);
        }
        s
    }

    /// Same profile with every panel halved.
    pub fn refined(&self) -> Result<Self> {
        Self::assemble(self.n, self.delta, self.family, self.support_left, split(&self.panels))
    }

    /// ∑ weights·values².
    pub fn norm(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v * v).sum()
    }
}

/// Normalized profile supported in (kₙ(δ), ∞); panels are doubled until the norm is stable to 10⁻⁸.
pub fn make_profile(n: usize, delta: f64, family: ProfileFamily, cfg: &SolverConfig) -> Result<BulkProfile> {
    check_index(n)?;
    let k0 = crate::asymptotics::k_delta(n, delta, cfg)?.k_numeric;
    make_profile_at(n, delta, k0, family)
}

/// [`make_profile`] with kₙ(δ) supplied by the caller.
pub fn make_profile_at(n: usize, delta: f64, support_left: f64, family: ProfileFamily) -> Result<BulkProfile> {
    check_index(n)?;
    let rel: Vec<(f64, f64)> = family.panels()?;
    let panels = rel
        .iter()
        .map(|&(a, b)| (support_left + a, support_left + b))
        .flat_map(|(a, b)| {
            if a < FAR_FIELD_K && FAR_FIELD_K < b {
                vec![(a, FAR_FIELD_K), (FAR_FIELD_K, b)]
            } else {
                vec![(a, b)]
            }
        })
        .collect();
    let mut p = BulkProfile::assemble(n, delta, family, support_left, panels)?;
    let mut previous = p.raw_norm();
    for _ in 0..MAX_REFINEMENTS {
        let q = p.refined()?;
        let current = q.raw_norm();
        let change = ((current - previous) / current).abs();
        p = q;
        if change < NORM_TOL {
            return Ok(p);
        }
        previous = current;
    }
    Err(Error::Quadrature(format!("profile {} did not converge under panel doubling", family.label())))
}

// ---------------------------------------------------------------------------------------
// Per-node fiber data and its cache
// ---------------------------------------------------------------------------------------

/// Eigen-data of one fiber, either solved or (beyond [`FAR_FIELD_K`]) asymptotic.
#[derive(Debug, Clone)]
pub enum FiberNode {
    Solved { dlambda: f64, total_mass: f64, sample: EigenfunctionSample },
    Far { n: usize, k: f64, dlambda: f64 },
}

impl FiberNode {
    pub fn dlambda(&self) -> f64 {
        match self {
            FiberNode::Solved { dlambda, .. } | FiberNode::Far { dlambda, .. } => *dlambda,
        }
    }

    /// ∫₀ᵃ uₙ(x,k)² dx.
    pub fn mass_below(&self, a: f64) -> f64 {
        match self {
            FiberNode::Solved { sample, .. } => sample.mass_below(a),
            FiberNode::Far { n, k, .. } => far_mass(*n, *k, a),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            FiberNode::Solved { total_mass, .. } => *total_mass,
            FiberNode::Far { n, k, .. } => far_mass(*n, *k, k + 40.0),
        }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            FiberNode::Solved { sample, .. } => sample.value_at(x),
            FiberNode::Far { n, k, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    sign * psi_pair(*n, x - k).0
                }
            }
        }
    }
}

fn far_mass(n: usize, k: f64, a: f64) -> f64 {
    let lo = (k - FAR_REACH).max(0.0);
    let hi = a.min(k + FAR_REACH);
    if hi <= lo {
        return 0.0;
    }
    let panels = (((hi - lo) / 0.5).ceil() as usize).max(1);
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|i| {
            let a = lo + i as f64 * h;
            gl().integrate(a, a + h, |x| psi_pair(n, x - k).0.powi(2))
        })
        .sum()
}

const FAR_REACH: f64 = 12.0;

type CacheKey = (usize, i64, u64, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<(f64, FiberNode)>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<(f64, FiberNode)>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Eigen-data at (n, k), cached under k rounded to 10⁻⁶; only an exact match of k is reused.
pub fn fiber_node(n: usize, k: f64, cfg: &SolverConfig) -> Result<Arc<(f64, FiberNode)>> {
    let key = ((n), (k * 1e6).round() as i64, cfg.step.to_bits(), cfg.domain_margin.to_bits());
    if let Some(hit) = cache().read().ok().and_then(|m| m.get(&key).cloned()) {
        if hit.0 == k {
            return Ok(hit);
        }
    }
    let node = if k > FAR_FIELD_K {
        FiberNode::Far { n, k, dlambda: leading_terms(n, k)?.dlambda_lead }
    } else {
        let (point, sample) = band_velocity_point(FiberPoint::new(n, k), &cfg.without_crosscheck())?;
        let total_mass = sample.mass_below(sample.right_end());
        FiberNode::Solved { dlambda: point.dlambda, total_mass, sample: sample.decimated(SAMPLE_DECIMATION) }
    };
    let entry = Arc::new((k, node));
    if let Ok(mut m) = cache().write() {
        m.insert(key, entry.clone());
    }
    Ok(entry)
}

fn nodes_for(profile: &BulkProfile, cfg: &SolverConfig) -> Result<Vec<Arc<(f64, FiberNode)>>> {
    profile.nodes.par_iter().map(|&k| fiber_node(profile.n, k, cfg)).collect()
}

// ---------------------------------------------------------------------------------------
// Currents and masses
// ---------------------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentReport {
    pub current: f64,
    /// (−max |λₙ'|, −min |λₙ'|) over the quadrature nodes.
    pub sandwich: (f64, f64),
    pub nodes: usize,
    pub converged: bool,
}

fn current_once(profile: &BulkProfile, cfg: &SolverConfig) -> Result<CurrentReport> {
    let data = nodes_for(profile, cfg)?;
    let mut j = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((w, v), d) in profile.weights.iter().zip(&profile.values).zip(&data) {
        let dl = d.1.dlambda();
        j += w * v * v * dl;
        lo = lo.min(dl);
        hi = hi.max(dl);
    }
    Ok(CurrentReport { current: j, sandwich: (lo, hi), nodes: profile.nodes.len(), converged: false })
}

/// J = ∑ weights·values²·λₙ'(node), refined until stable to 10⁻⁸ relative.
pub fn current(profile: &BulkProfile, cfg: &SolverConfig) -> Result<CurrentReport> {
    refine_until(profile, cfg, |p| current_once(p, cfg), |r| r.current, |r, c| r.converged = c)
}

fn refine_until<T>(
    profile: &BulkProfile,
    cfg: &SolverConfig,
    eval: impl Fn(&BulkProfile) -> Result<T>,
    value: impl Fn(&T) -> f64,
    mark: impl Fn(&mut T, bool),
) -> Result<T> {
    cfg.validate()?;
    let mut p = profile.clone();
    let mut last = eval(&p)?;
    for _ in 0..MAX_REFINEMENTS {
        p = p.refined()?;
        let mut next = eval(&p)?;
        let (a, b) = (value(&last), value(&next));
        if (a - b).abs() <= NORM_TOL * b.abs() {
            mark(&mut next, true);
            return Ok(next);
        }
        last = next;
    }
    mark(&mut last, false);
    Ok(last)
}

/// ∑ weights·values²·∫₀ᵃ|uₙ(x,node)|²dx.
pub fn strip_mass(profile: &BulkProfile, a: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(invalid(format!("strip width must be finite and nonnegative, got {a}")));
    }
    let once = |p: &BulkProfile| -> Result<f64> {
        let data = nodes_for(p, cfg)?;
        Ok(p.weights.iter().zip(&p.values).zip(&data).map(|((w, v), d)| w * v * v * d.1.mass_below(a)).sum())
    };
    refine_until(profile, cfg, once, |m| *m, |_, _| {})
}

/// Mass of the state over the whole half-plane; equals 1 by Parseval.
pub fn full_strip_mass(profile: &BulkProfile, cfg: &SolverConfig) -> Result<f64> {
    let data = nodes_for(profile, cfg)?;
    Ok(profile.weights.iter().zip(&profile.values).zip(&data).map(|((w, v), d)| w * v * v * d.1.total_mass()).sum())
}

/// ε^{2n−1} δ^{ε²} |log δ|^{(2n−1)(1−ε²)/2}.
pub fn localization_shape(n: usize, delta: f64, epsilon: f64) -> f64 {
    let m = (2 * n - 1) as f64;
    let l = delta.ln().abs();
    epsilon.powf(m) * delta.powf(epsilon * epsilon) * l.powf(m * (1.0 - epsilon * epsilon) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationEntry {
    pub epsilon: f64,
    /// a = (1 − ε)√|log δ|.
    pub strip_width: f64,
    pub mass: f64,
    pub shape: f64,
    /// mass / shape.
    pub ratio: f64,
    /// Cₙ·shape.
    pub bound: f64,
}

/// Mass of the state in the strip 0 < x < (1 − ε)√|log δ| and its comparison with Cₙ·shape.
pub fn localization_mass(profile: &BulkProfile, epsilon: f64, c_n: f64, cfg: &SolverConfig) -> Result<LocalizationEntry> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let a = (1.0 - epsilon) * profile.delta.ln().abs().sqrt();
    let mass = strip_mass(profile, a, cfg)?;
    let shape = localization_shape(profile.n, profile.delta, epsilon);
    Ok(LocalizationEntry { epsilon, strip_width: a, mass, shape, ratio: mass / shape, bound: c_n * shape })
}

// ---------------------------------------------------------------------------------------
// Edge currents
// ---------------------------------------------------------------------------------------

/// Lowest quasi-momentum used when inverting band functions.
pub const EDGE_K_FLOOR: f64 = -2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCurrentBounds {
    pub n: usize,
    pub interval: (f64, f64),
    /// Preimage λₙ⁻¹(I) ∩ [−2, ∞).
    pub k_range: (f64, f64),
    pub c_minus: f64,
    pub c_plus: f64,
}

/// min and max of |λₙ'| over λₙ⁻¹(I).
pub fn edge_current_bounds(n: usize, interval: (f64, f64), cfg: &SolverConfig) -> Result<EdgeCurrentBounds> {
    check_index(n)?;
    cfg.validate()?;
    let (e1, e2) = interval;
    if !(e1.is_finite() && e2.is_finite() && e1 < e2) {
        return Err(invalid(format!("interval must be bounded with lo < hi, got ({e1}, {e2})")));
    }
    let energy = landau_level(n);
    if e1 <= energy && energy <= e2 {
        return Err(Error::BulkInterval { level: energy });
    }
    if e2 < energy {
        return Err(invalid(format!("interval lies below the band minimum {energy}")));
    }
    let fast = cfg.without_crosscheck();
    let top = band_velocity_point(FiberPoint::new(n, EDGE_K_FLOOR), &fast)?.0.lambda;
    if e1 >= top {
        return Err(invalid(format!("interval lies above lambda_{n}({EDGE_K_FLOOR}) = {top}")));
    }
    let k_right = solve_level(n, e1 - energy, cfg)?;
    let k_left = if e2 >= top { EDGE_K_FLOOR } else { solve_level(n, e2 - energy, cfg)? };
    let points = 65;
    let speeds: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| {
            let k = k_left + (k_right - k_left) * i as f64 / (points - 1) as f64;
            crate::asymptotics::band_velocity(n, k, &fast).map(f64::abs)
        })
        .collect::<Result<_>>()?;
    let c_minus = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let c_plus = speeds.iter().copied().fold(0.0, f64::max);
    Ok(EdgeCurrentBounds { n, interval, k_range: (k_left, k_right), c_minus, c_plus })
}

// ---------------------------------------------------------------------------------------
// Diagnostics and field rescaling
// ---------------------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub n: usize,
    pub profile: String,
    pub field_strength: f64,
    pub delta: f64,
    /// (Eₙ, Eₙ + δ) in units of the field.
    pub energy_window: (f64, f64),
    pub support_left: f64,
    pub norm: f64,
    pub full_mass: f64,
    pub current: f64,
    pub current_sandwich: (f64, f64),
    pub current_converged: bool,
    pub nodes: usize,
    pub mu: f64,
    pub current_bound: f64,
    pub localization: Vec<LocalizationEntry>,
}

/// Norm, current against its envelope bound, and strip masses of one profile.
pub fn diagnose(profile: &BulkProfile, epsilons: &[f64], mu: f64, c_n: f64, cfg: &SolverConfig) -> Result<StateDiagnostics> {
    let cur = current(profile, cfg)?;
    let localization = epsilons
        .iter()
        .map(|&e| localization_mass(profile, e, c_n, cfg))
        .collect::<Result<Vec<_>>>()?;
    let energy = landau_level(profile.n);
    Ok(StateDiagnostics {
        n: profile.n,
        profile: profile.family.label(),
        field_strength: 1.0,
        delta: profile.delta,
        energy_window: (energy, energy + profile.delta),
        support_left: profile.support_left,
        norm: profile.norm(),
        full_mass: full_strip_mass(profile, cfg)?,
        current: cur.current,
        current_sandwich: cur.sandwich,
        current_converged: cur.converged,
        nodes: cur.nodes,
        mu,
        current_bound: envelope(profile.delta, mu),
        localization,
    })
}

/// Diagnostics in field strength b: energies ×b, current ×√b, lengths ×b^{−1/2}, masses unchanged.
pub fn rescale_field(diag: &StateDiagnostics, b: f64) -> Result<StateDiagnostics> {
    if !(b.is_finite() && b > 0.0) {
        return Err(invalid(format!("field strength must be positive, got {b}")));
    }
    let root = b.sqrt();
    let mut out = diag.clone();
    out.field_strength *= b;
    out.delta *= b;
    out.energy_window = (diag.energy_window.0 * b, diag.energy_window.1 * b);
    out.support_left *= root;
    out.current *= root;
    out.current_sandwich = (diag.current_sandwich.0 * root, diag.current_sandwich.1 * root);
    out.current_bound *= root;
    for e in &mut out.localization {
        e.strip_width /= root;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// Real-space synthesis
// ---------------------------------------------------------------------------------------

/// φ(x, y) = (2π)^{−1/2} ∑ weights·e^{iy·node}·values·uₙ(x, node); rows follow `x_grid`.
pub fn synthesize_state(profile: &BulkProfile, x_grid: &[f64], y_grid: &[f64], cfg: &SolverConfig) -> Result<Vec<Vec<Complex64>>> {
    let phases = vec![Complex64::new(1.0, 0.0); profile.nodes.len()];
    synthesize_with_phases(profile, &phases, x_grid, y_grid, cfg)
}

/// [`synthesize_state`] with each Fourier value multiplied by the given phase.
pub fn synthesize_with_phases(
    profile: &BulkProfile,
    phases: &[Complex64],
    x_grid: &[f64],
    y_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<Vec<Complex64>>> {
    if phases.len() != profile.nodes.len() {
        return Err(invalid("one phase per quadrature node is required"));
    }
    if x_grid.iter().chain(y_grid).any(|v| !v.is_finite()) {
        return Err(invalid("synthesis grids must be finite"));
    }
    let data = nodes_for(profile, cfg)?;
    let scale = (2.0 * PI).sqrt().recip();
    let coeff: Vec<Complex64> = (0..profile.nodes.len())
        .map(|j| phases[j] * (scale * profile.weights[j] * profile.values[j]))
        .collect();
    Ok(x_grid
        .par_iter()
        .map(|&x| {
            let u: Vec<f64> = data.iter().map(|d| d.1.value_at(x)).collect();
            y_grid
                .iter()
                .map(|&y| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, &k) in profile.nodes.iter().enumerate() {
                        if u[j] != 0.0 {
                            acc += coeff[j] * Complex64::from_polar(u[j], y * k);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect())
}

/// Trapezoid-rule ∑|φ|² dx dy over a uniform grid.
pub fn box_norm(field: &[Vec<Complex64>], dx: f64, dy: f64) -> f64 {
    let rows = field.len();
    let mut total = 0.0;
    for (i, row) in field.iter().enumerate() {
        let wx = if i == 0 || i + 1 == rows { 0.5 } else { 1.0 };
        let cols = row.len();
        for (j, v) in row.iter().enumerate() {
            let wy = if j == 0 || j + 1 == cols { 0.5 } else { 1.0 };
            total += wx * wy * v.norm_sqr();
        }
    }
    total * dx * dy
}
