//! Piecewise cubic Hermite interpolation with the Fritsch-Carlson slope
//! limiter, so monotone data give monotone interpolants.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Slopes estimated from the data (three-point formula inside, one-sided
    /// at the ends), then limited.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two nodes");
        let n = xs.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            slopes[i] = (h1 * secant[i - 1] + h0 * secant[i]) / (h0 + h1);
        }
        Self::with_slopes(xs, ys, slopes)
    }

    /// Uses the given nodal derivatives, limited where they would break
    /// monotonicity.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "nodes must be increasing");
        for i in 0..n - 1 {
            let d = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            if d == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            if slopes[i].signum() != d.signum() {
                slopes[i] = 0.0;
            }
            if slopes[i + 1].signum() != d.signum() {
                slopes[i + 1] = 0.0;
            }
            let a = slopes[i] / d;
            let b = slopes[i + 1] / d;
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * a * d;
                slopes[i + 1] = tau * b * d;
            }
        }
        Self { xs, ys, slopes }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    /// Value at `x`; outside the node range the end segments are extended.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).1
    }

    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1;
        (v, d / h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes_and_cubics() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x + x).collect();
        let ds: Vec<f64> = xs.iter().map(|x| 3.0 * x * x + 1.0).collect();
        let c = MonotoneCubic::with_slopes(xs.clone(), ys.clone(), ds);
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(c.eval(*x), *y);
        }
        for x in [0.1, 0.77, 2.3, 3.4] {
            assert!((c.eval(x) - (x * x * x + x)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_data_stays_flat() {
        let c = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 2.0]);
        for k in 0..=20 {
            let x = 1.0 + k as f64 * 0.05;
            assert!((c.eval(x) - 1.0).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn monotone_data_monotone_interpolant(steps in proptest::collection::vec(0.0f64..3.0, 3..12), probe in proptest::collection::vec(0.0f64..1.0, 50)) {
            let xs: Vec<f64> = (0..=steps.len()).map(|i| i as f64).collect();
            let mut ys = vec![0.0];
            for s in &steps {
                ys.push(ys.last().unwrap() + s * s * s);
            }
            let c = MonotoneCubic::new(xs.clone(), ys);
            let mut ps: Vec<f64> = probe.iter().map(|p| p * steps.len() as f64).collect();
            ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in ps.windows(2) {
                prop_assert!(c.eval(w[1]) >= c.eval(w[0]) - 1e-12);
            }
        }
    }
}
