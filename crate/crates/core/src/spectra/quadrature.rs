//! Gauss-Legendre rules and the collapsed (Duffy) product rule on the
//! reference triangle.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Points `(s, t)` and weights on the reference triangle (area 1/2).
#[derive(Debug, Clone)]
pub(crate) struct TriangleRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Product rule with `n` Gauss points per direction; exact for
    /// polynomials of total degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let u = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let v = 0.5 * (x[j] + 1.0);
                points.push((u, v * (1.0 - u)));
                weights.push(0.25 * w[i] * w[j] * (1.0 - u));
            }
        }
        Self { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn triangle_monomials() {
        // int s^a t^b over the reference triangle = a! b! / (a + b + 2)!
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        let r = TriangleRule::collapsed(7);
        for a in 0..7 {
            for b in 0..(13 - a) {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(&(s, t), w)| w * s.powi(a as i32) * t.powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "a={a} b={b}");
            }
        }
    }
}
