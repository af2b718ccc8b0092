//! Brute-force reference spectrum: sinc discrete variable representation on
//! a square grid over the whole (unreduced) domain, Dirichlet outside a
//! polygon, dense diagonalization. Levels are classified afterwards by
//! their behaviour under the mirror `x -> -x` (exact on the grid) and the
//! rotation by 2pi/3 (through sinc interpolation).

use std::f64::consts::PI;

use faer::{Mat, Side};
use scarlab::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    A1,
    A2,
    E,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub energy: f64,
    /// `<psi| psi(-x, y)>`.
    pub parity: f64,
    /// `<psi| psi(R^-1 r)>`.
    pub rotation: f64,
    pub class: Class,
}

pub struct Grid {
    pub h: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `(ix, iy)` of the interior points.
    pub points: Vec<(usize, usize)>,
}

fn inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                c = !c;
            }
        }
    }
    c
}

/// Grid of spacing `h`, symmetric under `x -> -x`, keeping the points
/// strictly inside `poly`.
pub fn grid(poly: &[[f64; 2]], h: f64) -> Grid {
    let xmax = poly.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    let (ymin, ymax) = poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[1]), b.max(p[1])));
    let m = (xmax / h).ceil() as i64;
    let xs: Vec<f64> = (-m..=m).map(|i| i as f64 * h).collect();
    let ny = ((ymax - ymin) / h).ceil() as usize + 1;
    let ys: Vec<f64> = (0..ny).map(|j| ymin + j as f64 * h).collect();
    let mut points = Vec::new();
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            if inside(poly, [x, y]) {
                points.push((ix, iy));
            }
        }
    }
    Grid { h, xs, ys, points }
}

fn kinetic_1d(d: i64, h: f64) -> f64 {
    // -d^2/dx^2 in the sinc basis
    if d == 0 {
        PI * PI / (3.0 * h * h)
    } else {
        let s = if d % 2 == 0 { 1.0 } else { -1.0 };
        2.0 * s / ((d * d) as f64 * h * h)
    }
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-12 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

/// The lowest `count` levels of `-c eta^2 Laplacian + v` on the grid.
pub fn solve(model: PotentialModel, eta: f64, g: &Grid, count: usize) -> Vec<Level> {
    let n = g.points.len();
    let kappa = model.kinetic_prefactor() * eta * eta;
    let mut h = Mat::<f64>::zeros(n, n);
    for (a, &(ia, ja)) in g.points.iter().enumerate() {
        for (b, &(ib, jb)) in g.points.iter().enumerate().take(a + 1) {
            let mut t = 0.0;
            if ja == jb {
                t += kinetic_1d(ia as i64 - ib as i64, g.h);
            }
            if ia == ib {
                t += kinetic_1d(ja as i64 - jb as i64, g.h);
            }
            if t != 0.0 {
                h[(a, b)] = kappa * t;
            }
        }
        h[(a, a)] += model.value(g.xs[ia], g.ys[ja]).expect("grid point outside the potential's domain");
    }
    let eig = h.self_adjoint_eigen(Side::Lower).expect("dense eigensolver failed");
    let (u, s) = (eig.U(), eig.S());
    let mut index = std::collections::HashMap::new();
    for (k, &p) in g.points.iter().enumerate() {
        index.insert(p, k);
    }
    let mid = (g.xs.len() - 1) / 2;
    let (c, sn) = ((2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).sin());
    let mut out = Vec::with_capacity(count);
    for k in 0..count.min(n) {
        let psi: Vec<f64> = (0..n).map(|a| u[(a, k)]).collect();
        let mut parity = 0.0;
        let mut rotation = 0.0;
        for (a, &(ix, iy)) in g.points.iter().enumerate() {
            if let Some(&b) = index.get(&(2 * mid - ix, iy)) {
                parity += psi[a] * psi[b];
            }
            // psi at R^-1 r by sinc interpolation
            let (x, y) = (g.xs[ix], g.ys[iy]);
            let (px, py) = (c * x + sn * y, -sn * x + c * y);
            let wx: Vec<f64> = g.xs.iter().map(|&xj| sinc((px - xj) / g.h)).collect();
            let wy: Vec<f64> = g.ys.iter().map(|&yj| sinc((py - yj) / g.h)).collect();
            let mut val = 0.0;
            for (b, &(jx, jy)) in g.points.iter().enumerate() {
                val += psi[b] * wx[jx] * wy[jy];
            }
            rotation += psi[a] * val;
        }
        let class = if rotation < -0.25 {
            Class::E
        } else if parity > 0.0 {
            Class::A1
        } else {
            Class::A2
        };
        out.push(Level {
            energy: s[k],
            parity,
            rotation,
            class,
        });
    }
    out
}

/// Corners of the unfolded reduced triangle `O L' B'`: the three rotations
/// of `L'` and of `B'`, ordered by angle.
pub fn unfolded_polygon(l: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let rot = |p: [f64; 2], k: i32| {
        let a = 2.0 * PI / 3.0 * k as f64;
        [a.cos() * p[0] - a.sin() * p[1], a.sin() * p[0] + a.cos() * p[1]]
    };
    let mut pts: Vec<[f64; 2]> = (0..3).flat_map(|k| [rot(l, k), rot(b, k)]).collect();
    pts.sort_by(|p, q| p[1].atan2(p[0]).partial_cmp(&q[1].atan2(q[0])).unwrap());
    pts
}
