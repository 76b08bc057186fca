use super::config::{CommandKind, RunConfig};
use super::table::{Cell, Table};
use crate::asymptotics::{convergence_report, default_mu, k_delta, leading_terms};
use crate::error::Result;
use crate::fiber_solver::{band_sweep, band_velocity_point, central_difference, FiberPoint};
use crate::quasimode::{eigen_comparison, report, CutoffSpec};
use crate::states::{diagnose, edge_current_bounds, localization_mass, make_profile, rescale_field, synthesize_state};
use rayon::prelude::*;

/// Step of the central difference compared against the boundary-slope velocity.
pub const FD_STEP: f64 = 1e-4;

type Columns = &'static [(&'static str, &'static str)];

const BANDS: Columns = &[
    ("n", "band index"),
    ("k", "quasi-momentum"),
    ("lambda", "eigenvalue lambda_n(k)"),
    ("dlambda", "band velocity -u_n'(0,k)^2"),
    ("err_est", "estimated absolute error of lambda"),
    ("method", "solver that produced lambda"),
];

const DERIVATIVE: Columns = &[
    ("n", "band index"),
    ("k", "quasi-momentum"),
    ("hadamard", "band velocity -u_n'(0,k)^2"),
    ("central_difference", "(lambda(k+h) - lambda(k-h))/(2h) with h = 1e-4"),
    ("relative_difference", "|hadamard - central_difference| / |central_difference|"),
    ("dlambda_lead", "leading-order velocity (empty for k <= 0)"),
];

const KDELTA: Columns = &[
    ("n", "band index"),
    ("delta", "energy offset above E_n = 2n-1"),
    ("k_numeric", "root of lambda_n(k) = E_n + delta"),
    ("k_expansion", "two-term large-k expansion of the same root"),
    ("residual", "lambda_n(k_numeric) - E_n - delta"),
];

const QUASIMODE: Columns = &[
    ("n", "band index"),
    ("k", "quasi-momentum"),
    ("eta", "quasi-mode energy <h f, f>"),
    ("eta_shift", "eta - E_n"),
    ("epsilon", "residual norm ||(h - eta) f||"),
    ("gap", "lambda_n(k) - E_n from the solver"),
    ("enclosure_lo", "lower end of the Kato-Temple enclosure (empty if invalid)"),
    ("enclosure_hi", "upper end of the Kato-Temple enclosure (empty if invalid)"),
    ("valid", "enclosure hypotheses hold with gap (E_n - 1, E_n + 1)"),
    ("contains", "solver eigenvalue lies in the enclosure"),
    ("sup_diff", "sup |f_n - u_n| over the grid"),
    ("wronskian_error", "Wronskian drift of the second solution"),
];

const VERIFY: Columns = &[
    ("check", "anchor | rho | rho_slope | rho_prime | rho_prime_slope | kato_temple | hadamard_fd | quasimode_decay"),
    ("n", "band index"),
    ("k", "quasi-momentum (empty for fitted slopes and decay ratios)"),
    ("computed", "solver value: lambda(0), gap, velocity, slope, or sup|f-u| ratio"),
    ("reference", "value it is compared with: 4n-1, leading term, -2, eta - E_n, central difference, or 50"),
    ("deviation", "anchor: difference; rho rows: ratio - 1; slopes: slope + 2; kato_temple: gap - eta_shift; hadamard_fd: relative difference; decay: ratio/50"),
    ("tolerance", "acceptance threshold (empty when the row is informational)"),
    ("pass", "whether the row meets its threshold (empty when informational)"),
];

const BULK: Columns = &[
    ("n", "band index"),
    ("delta", "energy window above E_n, scaled by b"),
    ("profile", "Fourier profile family and parameters"),
    ("b", "magnetic field strength"),
    ("support_left", "k_n(delta), scaled by sqrt(b)"),
    ("norm", "sum of weights * values^2"),
    ("full_mass", "half-line mass of the state (Parseval)"),
    ("current", "J = sum weights * dlambda * values^2, scaled by sqrt(b)"),
    ("sandwich_lo", "most negative band velocity on the support"),
    ("sandwich_hi", "least negative band velocity on the support"),
    ("current_bound", "2 delta sqrt|log delta| + mu delta log|log delta| / sqrt|log delta|"),
    ("mu", "constant used in current_bound"),
    ("converged", "current stable under panel doubling to 1e-8"),
    ("nodes", "quadrature nodes after refinement"),
];

const EDGE: Columns = &[
    ("n", "band index"),
    ("b", "magnetic field strength"),
    ("e_lo", "lower end of the energy interval"),
    ("e_hi", "upper end of the energy interval"),
    ("k_lo", "left end of the momentum preimage"),
    ("k_hi", "right end of the momentum preimage"),
    ("c_minus", "minimum of |lambda_n'| over the preimage"),
    ("c_plus", "maximum of |lambda_n'| over the preimage"),
];

const LOCALIZE: Columns = &[
    ("n", "band index"),
    ("delta", "energy window above E_n"),
    ("profile", "Fourier profile family and parameters"),
    ("b", "magnetic field strength"),
    ("epsilon", "strip parameter"),
    ("strip_width", "(1 - epsilon) sqrt|log delta|, scaled by 1/sqrt(b)"),
    ("mass", "mass of the state in the strip 0 < x < strip_width"),
    ("shape", "epsilon^(2n-1) delta^(epsilon^2) |log delta|^((2n-1)(1-epsilon^2)/2)"),
    ("ratio", "mass / shape"),
    ("bound", "c * shape"),
];

const SYNTHESIZE: Columns = &[
    ("x", "distance from the edge"),
    ("y", "coordinate along the edge"),
    ("re", "real part of the state"),
    ("im", "imaginary part of the state"),
    ("modulus", "absolute value of the state"),
];

pub fn columns(kind: CommandKind) -> Columns {
    match kind {
        CommandKind::Bands => BANDS,
        CommandKind::Derivative => DERIVATIVE,
        CommandKind::Kdelta => KDELTA,
        CommandKind::Quasimode => QUASIMODE,
        CommandKind::Verify => VERIFY,
        CommandKind::Bulk => BULK,
        CommandKind::Edge => EDGE,
        CommandKind::Localize => LOCALIZE,
        CommandKind::Synthesize => SYNTHESIZE,
    }
}

/// Column documentation appended to each subcommand's help.
pub fn columns_help(kind: CommandKind) -> String {
    let cols = columns(kind);
    let width = cols.iter().map(|(c, _)| c.len()).max().unwrap_or(0);
    let mut s = String::from("Output columns:\n");
    for (c, d) in cols {
        s.push_str(&format!("  {c:<width$}  {d}\n"));
    }
    s
}

pub fn execute(cfg: &RunConfig) -> Result<Table> {
    let mut table = Table::new(columns(cfg.command));
    match cfg.command {
        CommandKind::Bands => bands(cfg, &mut table)?,
        CommandKind::Derivative => derivative(cfg, &mut table)?,
        CommandKind::Kdelta => kdelta(cfg, &mut table)?,
        CommandKind::Quasimode => quasimode(cfg, &mut table)?,
        CommandKind::Verify => verify(cfg, &mut table)?,
        CommandKind::Bulk => bulk(cfg, &mut table)?,
        CommandKind::Edge => edge(cfg, &mut table)?,
        CommandKind::Localize => localize(cfg, &mut table)?,
        CommandKind::Synthesize => synthesize(cfg, &mut table)?,
    }
    Ok(table)
}

fn k_values(cfg: &RunConfig) -> Vec<f64> {
    cfg.k.map(|r| r.values()).unwrap_or_default()
}

fn bands(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    for p in band_sweep(cfg.n, &k_values(cfg), &cfg.solver) {
        let p = p?;
        t.push(vec![p.n.into(), p.k.into(), p.lambda.into(), p.dlambda.into(), p.err_est.into(), p.method.as_str().into()]);
    }
    Ok(())
}

struct DerivativeRow {
    k: f64,
    hadamard: f64,
    fd: f64,
}

impl DerivativeRow {
    fn relative(&self) -> f64 {
        ((self.hadamard - self.fd) / self.fd).abs()
    }
}

fn derivative_rows(n: usize, ks: &[f64], cfg: &RunConfig) -> Result<Vec<DerivativeRow>> {
    ks.par_iter()
        .map(|&k| {
            let p = FiberPoint::new(n, k);
            let (bp, _) = band_velocity_point(p, &cfg.solver)?;
            let fd = central_difference(p, FD_STEP, &cfg.solver)?;
            Ok(DerivativeRow { k, hadamard: bp.dlambda, fd })
        })
        .collect()
}

fn derivative(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    for r in derivative_rows(cfg.n, &k_values(cfg), cfg)? {
        let lead = leading_terms(cfg.n, r.k).ok().map(|a| a.dlambda_lead);
        t.push(vec![cfg.n.into(), r.k.into(), r.hadamard.into(), r.fd.into(), r.relative().into(), lead.into()]);
    }
    Ok(())
}

fn kdelta(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    for &d in &cfg.delta {
        let m = k_delta(cfg.n, d, &cfg.solver)?;
        t.push(vec![m.n.into(), m.delta.into(), m.k_numeric.into(), m.k_expansion.into(), m.residual.into()]);
    }
    Ok(())
}

fn quasimode(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    let rows = k_values(cfg)
        .par_iter()
        .map(|&k| {
            let r = report(cfg.n, k, CutoffSpec::default(), &cfg.solver)?;
            let (bp, _) = band_velocity_point(FiberPoint::new(cfg.n, k), &cfg.solver)?;
            let cmp = eigen_comparison(cfg.n, k, &cfg.solver)?;
            Ok((r, bp.gap, cmp.sup_diff))
        })
        .collect::<Result<Vec<_>>>()?;
    for (r, gap, sup) in rows {
        let bounds = r.enclosure.absolute_bounds();
        t.push(vec![
            r.n.into(),
            r.k.into(),
            r.eta.into(),
            r.eta_shift.into(),
            r.epsilon.into(),
            gap.into(),
            bounds.map(|b| b.0).into(),
            bounds.map(|b| b.1).into(),
            r.enclosure.valid.into(),
            r.enclosure.contains_offset(gap).into(),
            sup.into(),
            r.wronskian_error.into(),
        ]);
    }
    Ok(())
}

/// Grid of the ρ-table in `verify`.
pub const VERIFY_RHO_GRID: [f64; 6] = [2.5, 3.0, 3.5, 4.0, 4.5, 5.0];
/// Quasi-momenta of the Kato–Temple checks in `verify`.
pub const VERIFY_KT_GRID: [f64; 4] = [3.0, 3.5, 4.0, 4.5];
/// Quasi-momenta of the velocity cross-check in `verify`.
pub const VERIFY_FD_GRID: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

fn verify_row(check: &str, n: usize, k: Option<f64>, computed: f64, reference: f64, deviation: f64, tol: Option<f64>, pass: Option<bool>) -> Vec<Cell> {
    vec![
        check.into(),
        n.into(),
        k.into(),
        computed.into(),
        reference.into(),
        deviation.into(),
        tol.into(),
        pass.map_or(Cell::Null, Cell::from),
    ]
}

fn verify(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    let n = cfg.n;
    let s = &cfg.solver;

    let (p0, _) = band_velocity_point(FiberPoint::new(n, 0.0), s)?;
    let anchor = (4 * n - 1) as f64;
    let diff = p0.lambda - anchor;
    t.push(verify_row("anchor", n, Some(0.0), p0.lambda, anchor, diff, Some(1e-8), Some(diff.abs() <= 1e-8)));

    let conv = convergence_report(n, &VERIFY_RHO_GRID, s)?;
    for (name, slope, derivative) in [("rho", conv.slope_rho, false), ("rho_prime", conv.slope_rho_prime, true)] {
        for r in &conv.rows {
            let (computed, reference, ratio) =
                if derivative { (r.dlambda, r.dlambda_lead, r.rho_prime) } else { (r.gap, r.gap_lead, r.rho) };
            let checked = r.k == 4.5;
            let dev = ratio - 1.0;
            t.push(verify_row(name, n, Some(r.k), computed, reference, dev, checked.then_some(0.2), checked.then_some(dev.abs() <= 0.2)));
        }
        let pass = (-3.0..=-1.0).contains(&slope);
        t.push(verify_row(&format!("{name}_slope"), n, None, slope, -2.0, slope + 2.0, Some(1.0), Some(pass)));
    }

    let kt = VERIFY_KT_GRID
        .par_iter()
        .map(|&k| {
            let r = report(n, k, CutoffSpec::default(), s)?;
            let (bp, _) = band_velocity_point(FiberPoint::new(n, k), s)?;
            Ok((k, r, bp.gap))
        })
        .collect::<Result<Vec<_>>>()?;
    for (k, r, gap) in kt {
        let radius = match (r.enclosure.lower, r.enclosure.upper) {
            (Some(lo), Some(hi)) => Some((r.eta_shift - lo).abs().max((hi - r.eta_shift).abs())),
            _ => None,
        };
        let pass = r.enclosure.valid && r.enclosure.contains_offset(gap);
        t.push(verify_row("kato_temple", n, Some(k), gap, r.eta_shift, gap - r.eta_shift, radius, Some(pass)));
    }

    for r in derivative_rows(n, &VERIFY_FD_GRID, cfg)? {
        let rel = r.relative();
        t.push(verify_row("hadamard_fd", n, Some(r.k), r.hadamard, r.fd, rel, Some(1e-6), Some(rel <= 1e-6)));
    }

    let sup3 = eigen_comparison(n, 3.0, s)?.sup_diff;
    let sup4 = eigen_comparison(n, 4.0, s)?.sup_diff;
    let ratio = sup3 / sup4;
    t.push(verify_row("quasimode_decay", n, None, ratio, 50.0, ratio / 50.0, Some(50.0), Some(ratio >= 50.0)));

    Ok(())
}

fn bulk(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    let family = cfg.profile.expect("bulk always carries a profile");
    let mu = cfg.mu.unwrap_or_else(|| default_mu(cfg.n));
    for &d in &cfg.delta {
        let profile = make_profile(cfg.n, d, family, &cfg.solver)?;
        let diag = rescale_field(&diagnose(&profile, &[], mu, cfg.c, &cfg.solver)?, cfg.b)?;
        t.push(vec![
            diag.n.into(),
            diag.delta.into(),
            diag.profile.clone().into(),
            diag.field_strength.into(),
            diag.support_left.into(),
            diag.norm.into(),
            diag.full_mass.into(),
            diag.current.into(),
            diag.current_sandwich.0.into(),
            diag.current_sandwich.1.into(),
            diag.current_bound.into(),
            diag.mu.into(),
            diag.current_converged.into(),
            diag.nodes.into(),
        ]);
    }
    Ok(())
}

fn edge(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    let (lo, hi) = cfg.interval.expect("edge always carries an interval");
    let root = cfg.b.sqrt();
    let e = edge_current_bounds(cfg.n, (lo / cfg.b, hi / cfg.b), &cfg.solver)?;
    t.push(vec![
        e.n.into(),
        cfg.b.into(),
        lo.into(),
        hi.into(),
        (e.k_range.0 * root).into(),
        (e.k_range.1 * root).into(),
        (e.c_minus * root).into(),
        (e.c_plus * root).into(),
    ]);
    Ok(())
}

fn localize(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    let family = cfg.profile.expect("localize always carries a profile");
    let root = cfg.b.sqrt();
    for &d in &cfg.delta {
        let profile = make_profile(cfg.n, d, family, &cfg.solver)?;
        for &eps in &cfg.epsilon {
            let l = localization_mass(&profile, eps, cfg.c, &cfg.solver)?;
            t.push(vec![
                cfg.n.into(),
                d.into(),
                family.label().into(),
                cfg.b.into(),
                l.epsilon.into(),
                (l.strip_width / root).into(),
                l.mass.into(),
                l.shape.into(),
                l.ratio.into(),
                l.bound.into(),
            ]);
        }
    }
    Ok(())
}

fn synthesize(cfg: &RunConfig, t: &mut Table) -> Result<()> {
    let family = cfg.profile.expect("synthesize always carries a profile");
    let profile = make_profile(cfg.n, cfg.delta[0], family, &cfg.solver)?;
    let xs = cfg.x.map(|r| r.values()).unwrap_or_default();
    let ys = cfg.y.map(|r| r.values()).unwrap_or_default();
    let field = synthesize_state(&profile, &xs, &ys, &cfg.solver)?;
    for (row, &x) in field.iter().zip(&xs) {
        for (z, &y) in row.iter().zip(&ys) {
            t.push(vec![x.into(), y.into(), z.re.into(), z.im.into(), z.norm().into()]);
        }
    }
    Ok(())
}
