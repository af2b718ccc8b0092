//! Structured Lagrange mesh of a triangle with one vertex at the origin.
//!
//! The triangle `O P Q` is split into `n^2` congruent elements by lines
//! parallel to its sides. Nodes live on the fine barycentric lattice of
//! `N = n k` divisions, node `(i, j)` at `(i P + j Q) / N`, so elements share
//! nodes without a connectivity search.

use serde::{Deserialize, Serialize};

use super::basis::LagrangeBasis;

/// Boundary pieces of the reduced domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// `O P`, on the mirror line `x = 0`.
    Mirror,
    /// `O Q`, on the mirror line through the vertex B.
    Diagonal,
    /// `P Q`, the truncation.
    Cut,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub p: [f64; 2],
    pub q: [f64; 2],
    /// Elements per side.
    pub n: usize,
    /// Polynomial order.
    pub order: usize,
}

/// One element: its corner anchor, orientation and global node ids in the
/// local node order of [`LagrangeBasis`].
#[derive(Debug, Clone)]
pub(crate) struct Element {
    pub origin: [f64; 2],
    /// Columns of the affine map from reference coordinates.
    pub jac: [[f64; 2]; 2],
    pub nodes: Vec<usize>,
}

impl TriangleMesh {
    pub fn new(p: [f64; 2], q: [f64; 2], n: usize, order: usize) -> Self {
        assert!(n >= 1 && order >= 1);
        Self { p, q, n, order }
    }

    pub fn divisions(&self) -> usize {
        self.n * self.order
    }

    pub fn node_count(&self) -> usize {
        let m = self.divisions();
        (m + 1) * (m + 2) / 2
    }

    pub fn element_count(&self) -> usize {
        self.n * self.n
    }

    /// Largest distance between neighbouring lattice nodes.
    pub fn spacing(&self) -> f64 {
        let m = self.divisions() as f64;
        let d = [self.q[0] - self.p[0], self.q[1] - self.p[1]];
        norm(self.p).max(norm(self.q)).max(norm(d)) / m
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.p[0] * self.q[1] - self.p[1] * self.q[0]).abs()
    }

    #[inline]
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        let m = self.divisions();
        // rows i' < i hold m + 1 - i' nodes each
        i * (m + 1) - i * i.saturating_sub(1) / 2 + j
    }

    pub fn node_ij(&self, id: usize) -> (usize, usize) {
        let m = self.divisions();
        let mut i = 0;
        let mut start = 0;
        while start + (m + 1 - i) <= id {
            start += m + 1 - i;
            i += 1;
        }
        (i, id - start)
    }

    #[inline]
    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        let m = self.divisions() as f64;
        let (a, b) = (i as f64 / m, j as f64 / m);
        [a * self.p[0] + b * self.q[0], a * self.p[1] + b * self.q[1]]
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        let m = self.divisions();
        let mut out = Vec::with_capacity(self.node_count());
        for i in 0..=m {
            for j in 0..=m - i {
                out.push(self.node_position(i, j));
            }
        }
        out
    }

    /// Boundary pieces a lattice node lies on.
    pub fn node_edges(&self, i: usize, j: usize) -> [bool; 3] {
        [j == 0, i == 0, i + j == self.divisions()]
    }

    pub(crate) fn elements(&self, basis: &LagrangeBasis) -> Vec<Element> {
        let (n, k) = (self.n, self.order);
        let scale = 1.0 / n as f64;
        let up_jac = [[self.p[0] * scale, self.q[0] * scale], [self.p[1] * scale, self.q[1] * scale]];
        let down_jac = [[-up_jac[0][0], -up_jac[0][1]], [-up_jac[1][0], -up_jac[1][1]]];
        let mut out = Vec::with_capacity(n * n);
        for ei in 0..n {
            for ej in 0..n - ei {
                let nodes = basis.nodes.iter().map(|&(a1, a2)| self.node_id(k * ei + a1, k * ej + a2)).collect();
                out.push(Element {
                    origin: self.node_position(k * ei, k * ej),
                    jac: up_jac,
                    nodes,
                });
                if ei + ej + 2 <= n {
                    let nodes = basis
                        .nodes
                        .iter()
                        .map(|&(a1, a2)| self.node_id(k * (ei + 1) - a1, k * (ej + 1) - a2))
                        .collect();
                    out.push(Element {
                        origin: self.node_position(k * (ei + 1), k * (ej + 1)),
                        jac: down_jac,
                        nodes,
                    });
                }
            }
        }
        out
    }

    /// Lattice coordinates `(a, b)` with `x = a P + b Q`.
    pub fn barycentric(&self, x: [f64; 2]) -> (f64, f64) {
        let det = self.p[0] * self.q[1] - self.p[1] * self.q[0];
        let a = (x[0] * self.q[1] - x[1] * self.q[0]) / det;
        let b = (self.p[0] * x[1] - self.p[1] * x[0]) / det;
        (a, b)
    }

    pub fn contains(&self, x: [f64; 2], slack: f64) -> bool {
        let (a, b) = self.barycentric(x);
        a >= -slack && b >= -slack && a + b <= 1.0 + slack
    }

    /// Element holding `x` (clamped onto the triangle) with the reference
    /// coordinates of `x` in it. Element indices follow [`Self::elements`].
    pub(crate) fn locate(&self, x: [f64; 2]) -> (usize, f64, f64) {
        let n = self.n as f64;
        let (a, b) = self.barycentric(x);
        let (mut a, mut b) = (a.max(0.0) * n, b.max(0.0) * n);
        if a + b > n {
            let s = n / (a + b);
            a *= s;
            b *= s;
        }
        let ei = (a.floor() as usize).min(self.n - 1);
        let ej = (b.floor() as usize).min(self.n - 1 - ei);
        let (fa, fb) = (a - ei as f64, b - ej as f64);
        let index = self.element_index(ei, ej);
        if fa + fb <= 1.0 || ei + ej + 2 > self.n {
            (index, fa, fb)
        } else {
            (index + 1, 1.0 - fa, 1.0 - fb)
        }
    }

    /// Position of the up element `(ei, ej)` in [`Self::elements`]; its down
    /// partner, when present, follows directly.
    fn element_index(&self, ei: usize, ej: usize) -> usize {
        let n = self.n;
        // row ei' holds (n - ei') up and (n - ei' - 1) down elements
        let before: usize = (0..ei).map(|r| 2 * (n - r) - 1).sum();
        before + 2 * ej
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}
