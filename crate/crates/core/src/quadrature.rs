//! Quadrature rules on uniform samples and Gauss–Legendre panels.

use std::f64::consts::PI;

/// Composite Simpson rule for samples `values[i] = g(x0 + i*h)`.
///
/// An odd number of intervals is closed with a Simpson 3/8 panel at the right end.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    simpson_by(values.len(), h, |i| values[i])
}

/// Simpson rule over `len` samples produced lazily by `g(i)`.
pub fn simpson_by(len: usize, h: f64, g: impl Fn(usize) -> f64) -> f64 {
    match len {
        0 | 1 => 0.0,
        2 => 0.5 * h * (g(0) + g(1)),
        3 => h / 3.0 * (g(0) + 4.0 * g(1) + g(2)),
        4 => 3.0 * h / 8.0 * (g(0) + 3.0 * g(1) + 3.0 * g(2) + g(3)),
        _ => {
            let intervals = len - 1;
            let (simpson_end, tail) = if intervals % 2 == 0 {
                (len - 1, false)
            } else {
                (len - 4, true)
            };
            let mut odd = 0.0;
            let mut even = 0.0;
            for i in 1..simpson_end {
                if i % 2 == 1 {
                    odd += g(i);
                } else {
                    even += g(i);
                }
            }
            let mut total = h / 3.0 * (g(0) + 4.0 * odd + 2.0 * even + g(simpson_end));
            if tail {
                let j = simpson_end;
                total += 3.0 * h / 8.0 * (g(j) + 3.0 * g(j + 1) + 3.0 * g(j + 2) + g(j + 3));
            }
            total
        }
    }
}

/// Composite trapezoid rule; used as an independent check on Simpson results.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        len => {
            let inner: f64 = values[1..len - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[len - 1]))
        }
    }
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre recurrence, started from the Chebyshev-like guess.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped onto [a, b], appended to the given buffers.
    pub fn push_mapped(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(mid + half * t);
            weights.push(w * half);
        }
    }
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        for len in [3usize, 4, 5, 6, 7, 10, 11] {
            let xs: Vec<f64> = (0..len).map(|i| i as f64 * h).collect();
            let vals: Vec<f64> = xs.iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
            let b = xs[len - 1];
            let exact = b.powi(4) / 4.0 - b * b + b;
            assert!((simpson(&vals, h) - exact).abs() < 1e-13, "len {len}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the exactness limit of the 8-point rule
        let approx = gl.integrate(0.0, 2.0, |x| x.powi(15));
        let exact = 2f64.powi(16) / 16.0;
        assert!(((approx - exact) / exact).abs() < 1e-14);
        let sum: f64 = gl.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_matches_transcendental_integral() {
        let gl = GaussLegendre::new(12);
        let approx = gl.integrate(0.0, 1.0, f64::exp);
        assert!((approx - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
