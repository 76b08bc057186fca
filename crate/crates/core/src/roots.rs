//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Outcome of a bracketed search: `best` is the iterate with the smallest residual seen
/// last, `other` the opposite end of the final sign-change bracket.
#[derive(Debug, Clone, Copy)]
pub struct Bracketed {
    pub best: f64,
    pub f_best: f64,
    pub other: f64,
    pub f_other: f64,
}

impl Bracketed {
    pub fn width(&self) -> f64 {
        (self.best - self.other).abs()
    }

    /// Secant estimate of the root inside the final bracket.
    pub fn interpolated(&self) -> f64 {
        if self.f_best == 0.0 || self.f_best == self.f_other {
            return self.best;
        }
        self.best - self.f_best * (self.other - self.best) / (self.f_other - self.f_best)
    }
}

/// Brent's method. `fa` and `fb` must have opposite signs (or one must vanish).
pub fn brent<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64, max_iter: usize) -> Result<Bracketed>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(Bracketed { best: a, f_best: 0.0, other: a, f_other: 0.0 });
    }
    if fb == 0.0 {
        return Ok(Bracketed { best: b, f_best: 0.0, other: b, f_other: 0.0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{a}, {b}] (f = {fa:e}, {fb:e})"
        )));
    }
    let (mut a, mut b, mut c) = (a, b, b);
    let (mut fa, mut fb, mut fc) = (fa, fb, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Bracketed { best: b, f_best: fb, other: c, f_other: fc });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::Bracket(format!("Brent iteration did not converge on [{a}, {b}]")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root_of_two() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = brent(f, 0.0, 2.0, -2.0, 6.0, 1e-14, 200).unwrap();
        assert!((r.best - 2f64.cbrt()).abs() < 1e-13);
        assert!(r.f_best == 0.0 || r.width() < 1e-13, "{r:?}");
    }

    #[test]
    fn rejects_missing_sign_change() {
        let f = |x: f64| Ok(x * x + 1.0);
        assert!(matches!(brent(f, -1.0, 1.0, 2.0, 2.0, 1e-12, 50), Err(Error::Bracket(_))));
    }

    #[test]
    fn handles_steep_saturating_function() {
        // tanh with a very narrow linear window, similar to a normalized shooting residual
        let scale = 1e7;
        let root = 0.123456789;
        let f = move |x: f64| Ok(((x - root) * scale).tanh());
        let r = brent(f, 0.0, 1.0, f(0.0).unwrap(), f(1.0).unwrap(), 1e-15, 400).unwrap();
        assert!((r.interpolated() - root).abs() < 1e-14);
    }
}
