//! Lagrange elements of order `k` on the reference triangle
//! `{(s, t): s, t >= 0, s + t <= 1}` with equispaced nodes.

/// Local nodes `(a1, a2)` with `a1 + a2 <= k`, in the order used for the
/// element degrees of freedom. Node `(a1, a2)` sits at `(a1 / k, a2 / k)`.
pub(crate) fn local_nodes(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity((k + 1) * (k + 2) / 2);
    for a1 in 0..=k {
        for a2 in 0..=k - a1 {
            out.push((a1, a2));
        }
    }
    out
}

/// `R_a(z) = prod_{s < a} (z - s) / (s + 1)` and its derivative.
fn silvester(a: usize, z: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut dp = 0.0;
    for s in 0..a {
        let f = (z - s as f64) / (s + 1) as f64;
        let df = 1.0 / (s + 1) as f64;
        dp = dp * f + p * df;
        p *= f;
    }
    (p, dp)
}

#[derive(Debug, Clone)]
pub(crate) struct LagrangeBasis {
    pub order: usize,
    pub nodes: Vec<(usize, usize)>,
}

impl LagrangeBasis {
    pub fn new(order: usize) -> Self {
        assert!((1..=4).contains(&order), "element order must be 1..=4");
        Self {
            order,
            nodes: local_nodes(order),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Values and reference gradients `(d/ds, d/dt)` of every basis function.
    pub fn eval(&self, s: f64, t: f64, val: &mut [f64], grad: &mut [[f64; 2]]) {
        let k = self.order as f64;
        let l = [1.0 - s - t, s, t];
        for (n, &(a1, a2)) in self.nodes.iter().enumerate() {
            let a0 = self.order - a1 - a2;
            let (p0, d0) = silvester(a0, k * l[0]);
            let (p1, d1) = silvester(a1, k * l[1]);
            let (p2, d2) = silvester(a2, k * l[2]);
            val[n] = p0 * p1 * p2;
            // dl0/ds = dl0/dt = -1
            grad[n] = [k * (-d0 * p1 * p2 + p0 * d1 * p2), k * (-d0 * p1 * p2 + p0 * p1 * d2)];
        }
    }

    pub fn values(&self, s: f64, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut g = vec![[0.0; 2]; self.len()];
        self.eval(s, t, &mut v, &mut g);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_at_nodes() {
        for k in 1..=4 {
            let b = LagrangeBasis::new(k);
            for (i, &(a1, a2)) in b.nodes.iter().enumerate() {
                let v = b.values(a1 as f64 / k as f64, a2 as f64 / k as f64);
                for (j, x) in v.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((x - want).abs() < 1e-13, "k={k} i={i} j={j} {x}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradients() {
        let b = LagrangeBasis::new(3);
        let mut v = vec![0.0; b.len()];
        let mut g = vec![[0.0; 2]; b.len()];
        let (s, t) = (0.21, 0.37);
        b.eval(s, t, &mut v, &mut g);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let gs: f64 = g.iter().map(|d| d[0]).sum();
        assert!(gs.abs() < 1e-13);
        // reproduces s^2 t exactly
        let f = |s: f64, t: f64| s * s * t;
        let interp: f64 = b.nodes.iter().zip(&v).map(|(&(a1, a2), w)| w * f(a1 as f64 / 3.0, a2 as f64 / 3.0)).sum();
        assert!((interp - f(s, t)).abs() < 1e-14);
        let ds: f64 = b.nodes.iter().zip(&g).map(|(&(a1, a2), d)| d[0] * f(a1 as f64 / 3.0, a2 as f64 / 3.0)).sum();
        assert!((ds - 2.0 * s * t).abs() < 1e-13);
    }
}
