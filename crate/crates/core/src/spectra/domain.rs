//! The reduced quantum domain and the assembled eigenvalue pencil.
//!
//! The domain is the triangle `O L' B'`: the mirror segment from `O` towards
//! `L`, the mirror ray from `O` towards `B`, and a cut segment `L' B'` placed
//! in the classically forbidden region. The cut is the horizontal line
//! `y = cut_level`; for Henon-Heiles it is clipped at the saddle on `OB`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::LagrangeBasis;
use super::mesh::{Element, TriangleMesh};
use super::quadrature::TriangleRule;
use super::sparse::{Pattern, SymMatrix};
use super::IrrepLabel;
use crate::error::{Error, Result};
use crate::hamiltonians::PotentialModel;

/// Direction of the mirror ray `OB`, at -30 degrees.
pub(crate) const DIAGONAL: [f64; 2] = [0.866_025_403_784_438_6, -0.5];

/// Smallest admissible number of mesh points per minimal wavelength.
pub const MIN_RESOLUTION: f64 = 8.0;

/// Fewest elements along an edge. Low windows would otherwise get meshes
/// too coarse for the structure near the origin (E sector in particular).
const MIN_ELEMENTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainOptions {
    /// Mesh points per shortest de Broglie wavelength in the window.
    pub resolution: f64,
    /// Lagrange element order.
    pub order: usize,
    /// Smallest distance in `y` between the lowest turning point and the cut.
    pub cut_margin: f64,
    /// Gauss points per direction of the element quadrature.
    pub quadrature: usize,
    /// Refuse meshes with more nodes than this.
    pub max_nodes: usize,
}

impl Default for DomainOptions {
    fn default() -> Self {
        Self {
            resolution: 10.0,
            order: 3,
            cut_margin: 0.15,
            quadrature: 7,
            max_nodes: 3_000_000,
        }
    }
}

/// Sentinel for a node without a degree of freedom (Dirichlet).
pub(crate) const FIXED: u32 = u32::MAX;

/// A discretized irrep sector: mesh, boundary conditions and the pencil
/// `K u = eps M u`.
pub struct DiscretizedDomain {
    pub model: PotentialModel,
    pub irrep: IrrepLabel,
    pub eta: f64,
    pub window: (f64, f64),
    pub cut_level: f64,
    /// Achieved points per minimal wavelength.
    pub resolution: f64,
    pub options: DomainOptions,
    pub mesh: TriangleMesh,
    pub(crate) basis: LagrangeBasis,
    pub(crate) rule: TriangleRule,
    /// `dofs[field][node]`, or [`FIXED`].
    pub(crate) dofs: Vec<Vec<u32>>,
    pub(crate) pattern: Pattern,
    pub(crate) stiffness: SymMatrix,
    pub(crate) mass: SymMatrix,
}

impl std::fmt::Debug for DiscretizedDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscretizedDomain")
            .field("model", &self.model)
            .field("irrep", &self.irrep)
            .field("eta", &self.eta)
            .field("window", &self.window)
            .field("cut_level", &self.cut_level)
            .field("mesh", &self.describe_mesh())
            .field("dofs", &self.dim())
            .finish()
    }
}

/// Radius along the ray at angle `theta` where `v` first reaches `energy`,
/// capped by the bottom edge `y = -l` of the reference triangle.
pub(crate) fn turning_radius(model: PotentialModel, energy: f64, theta: f64) -> f64 {
    let (l, _) = model.reference_triangle();
    let (c, s) = (theta.cos(), theta.sin());
    let r_max = if s < -1e-12 { l / -s } else { f64::INFINITY };
    let above = |r: f64| model.value(r * c, r * s).is_none_or(|v| v >= energy);
    let steps = 400;
    let r_scan = r_max.min(10.0);
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=steps {
        let r = r_scan * k as f64 / steps as f64;
        if above(r) {
            hi = Some(r);
            break;
        }
        lo = r;
    }
    let Some(mut hi) = hi else {
        return r_scan;
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest `y` of the classically allowed region inside the reduced sector.
pub fn lowest_turning_point(model: PotentialModel, energy: f64) -> f64 {
    let samples = 720;
    (0..=samples)
        .map(|k| {
            let theta = -0.5 * PI + (PI / 3.0) * k as f64 / samples as f64;
            turning_radius(model, energy, theta) * theta.sin()
        })
        .fold(0.0, f64::min)
}

/// Corners `L'` and `B'` of the truncated reduced triangle for a cut at
/// `cut_level < 0`.
pub fn truncated_triangle(model: PotentialModel, cut_level: f64) -> ([f64; 2], [f64; 2]) {
    let (_, b) = model.reference_triangle();
    let r_q = match model {
        PotentialModel::Ring => 2.0 * cut_level.abs(),
        PotentialModel::HenonHeiles => (2.0 * cut_level.abs()).min(b),
    };
    ([0.0, cut_level], [r_q * DIAGONAL[0], r_q * DIAGONAL[1]])
}

/// WKB decay exponent `int kappa dy` the default cut must reach below the
/// turning point, so that states at the window top are negligible there.
const CUT_EXPONENT: f64 = 12.0;

/// Depth below the turning point `y0` on the axis `x = 0` at which the
/// WKB exponent at energy `e_top` reaches [`CUT_EXPONENT`].
fn tunnelling_depth(model: PotentialModel, eta: f64, e_top: f64, y0: f64) -> f64 {
    let dy = 1e-3;
    let mut exponent = 0.0;
    let mut depth = 0.0;
    while exponent < CUT_EXPONENT && depth < 10.0 {
        let Some(v) = model.value(0.0, y0 - depth - 0.5 * dy) else {
            break;
        };
        exponent += ((v - e_top).max(0.0) / model.kinetic_prefactor()).sqrt() / eta * dy;
        depth += dy;
    }
    depth
}

/// Default cut level for a window whose top is `e_top`: at least `margin`
/// below the lowest turning point, and deeper when `eta` is large enough for
/// the states to tunnel that far.
pub fn default_cut_level(model: PotentialModel, eta: f64, e_top: f64, margin: f64) -> f64 {
    let (l, _) = model.reference_triangle();
    let y0 = lowest_turning_point(model, e_top);
    let y = y0 - margin.max(tunnelling_depth(model, eta, e_top, y0));
    match model {
        // stay clear of the walls, where v diverges
        PotentialModel::Ring => y.max(-0.98 * l),
        PotentialModel::HenonHeiles => y,
    }
}

/// Shortest de Broglie wavelength `2 pi eta / p_max` at energy `e_top`.
pub fn minimal_wavelength(model: PotentialModel, eta: f64, e_top: f64) -> f64 {
    2.0 * PI * eta / (e_top / model.kinetic_prefactor()).sqrt()
}

/// Which boundary pieces (mirror `OL`, mirror `OB`, cut) carry a Dirichlet
/// condition, per field.
pub(crate) fn dirichlet(irrep: IrrepLabel) -> Vec<[bool; 3]> {
    match irrep {
        IrrepLabel::A1 => vec![[false, false, true]],
        IrrepLabel::A2 => vec![[true, true, true]],
        // u1 odd, u2 even under both mirrors
        IrrepLabel::E => vec![[true, true, true], [false, false, true]],
    }
}

pub fn build_domain(
    irrep: IrrepLabel,
    eta: f64,
    window: (f64, f64),
    model: PotentialModel,
    options: &DomainOptions,
) -> Result<DiscretizedDomain> {
    let cut = default_cut_level(model, eta, window.1, options.cut_margin);
    build_domain_with_cut(irrep, eta, window, model, cut, options)
}

/// Like [`build_domain`] with an explicit cut level.
pub fn build_domain_with_cut(
    irrep: IrrepLabel,
    eta: f64,
    window: (f64, f64),
    model: PotentialModel,
    cut_level: f64,
    options: &DomainOptions,
) -> Result<DiscretizedDomain> {
    let (lo, hi) = window;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad energy window [{lo}, {hi}]")));
    }
    if !(1..=4).contains(&options.order) || options.quadrature < options.order + 2 {
        return Err(Error::InvalidParameter("element order must be 1..=4 with enough quadrature points".into()));
    }
    if !(cut_level < 0.0) {
        return Err(Error::Geometry(format!("cut level {cut_level} must lie below the origin")));
    }
    let (p, q) = truncated_triangle(model, cut_level);
    check_cut(model, p, q, hi)?;

    let wavelength = minimal_wavelength(model, eta, hi);
    let longest = p[1].abs().max(q[0].hypot(q[1])).max((q[0] - p[0]).hypot(q[1] - p[1]));
    let divisions = (options.resolution * longest / wavelength).ceil().max(1.0) as usize;
    let n = divisions.div_ceil(options.order).max(MIN_ELEMENTS);
    let mesh = TriangleMesh::new(p, q, n, options.order);
    if options.resolution < MIN_RESOLUTION || mesh.node_count() > options.max_nodes {
        let spacing = if options.resolution < MIN_RESOLUTION {
            wavelength / options.resolution
        } else {
            // finest spacing the node budget allows
            longest / (2.0 * options.max_nodes as f64).sqrt()
        };
        return Err(Error::Resolution { spacing, wavelength });
    }
    let resolution = wavelength / mesh.spacing();

    let basis = LagrangeBasis::new(options.order);
    let rule = TriangleRule::collapsed(options.quadrature);
    let bcs = dirichlet(irrep);
    let m = mesh.divisions();
    let mut dofs = vec![vec![FIXED; mesh.node_count()]; bcs.len()];
    let mut next = 0u32;
    for (field, bc) in bcs.iter().enumerate() {
        for i in 0..=m {
            for j in 0..=m - i {
                let on = mesh.node_edges(i, j);
                if !(0..3).any(|e| on[e] && bc[e]) {
                    dofs[field][mesh.node_id(i, j)] = next;
                    next += 1;
                }
            }
        }
    }
    let elements = mesh.elements(&basis);
    let pattern = sparsity(&elements, &dofs, next as usize);
    let mut domain = DiscretizedDomain {
        model,
        irrep,
        eta,
        window,
        cut_level,
        resolution,
        options: *options,
        mesh,
        basis,
        rule,
        dofs,
        stiffness: SymMatrix::zeros(&pattern),
        mass: SymMatrix::zeros(&pattern),
        pattern,
    };
    domain.assemble(&elements)?;
    Ok(domain)
}

fn check_cut(model: PotentialModel, p: [f64; 2], q: [f64; 2], e_top: f64) -> Result<()> {
    let samples = 2000;
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let (x, y) = (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]));
        if let Some(v) = model.value(x, y) {
            if v <= e_top {
                return Err(Error::Geometry(format!(
                    "cut line from ({:.4}, {:.4}) to ({:.4}, {:.4}) enters the allowed region at ({x:.4}, {y:.4}), v = {v:.6} <= {e_top}",
                    p[0], p[1], q[0], q[1]
                )));
            }
        }
    }
    Ok(())
}

fn sparsity(elements: &[Element], dofs: &[Vec<u32>], n: usize) -> Pattern {
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in elements {
        for &a in &e.nodes {
            for fa in dofs {
                let r = fa[a];
                if r == FIXED {
                    continue;
                }
                for &b in &e.nodes {
                    for fb in dofs {
                        let c = fb[b];
                        if c != FIXED && r >= c {
                            cols[c as usize].push(r as usize);
                        }
                    }
                }
            }
        }
    }
    for c in cols.iter_mut() {
        c.sort_unstable();
        c.dedup();
    }
    Pattern::from_columns(cols)
}

/// Element matrices, row-major `nb x nb`.
struct Local {
    k: Vec<f64>,
    m: Vec<f64>,
    /// Antisymmetric coupling of the E sector; empty otherwise.
    t: Vec<f64>,
}

impl DiscretizedDomain {
    /// Number of degrees of freedom.
    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn fields(&self) -> usize {
        self.dofs.len()
    }

    /// Kinetic coefficient `c eta^2` of `-c eta^2 Laplacian`.
    pub fn kappa(&self) -> f64 {
        self.model.kinetic_prefactor() * self.eta * self.eta
    }

    pub fn describe_mesh(&self) -> String {
        format!(
            "P{} structured n={} nodes={} dofs={} L'=({:.6},{:.6}) B'=({:.6},{:.6}) points_per_wavelength={:.2}",
            self.mesh.order,
            self.mesh.n,
            self.mesh.node_count(),
            self.dim(),
            self.mesh.p[0],
            self.mesh.p[1],
            self.mesh.q[0],
            self.mesh.q[1],
            self.resolution
        )
    }

    /// Scatters a solution vector onto the mesh nodes, one array per field.
    pub fn expand(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.dofs
            .iter()
            .map(|d| d.iter().map(|&k| if k == FIXED { 0.0 } else { x[k as usize] }).collect())
            .collect()
    }

    /// `y = K x`.
    pub fn apply_stiffness(&self, x: &[f64], y: &mut [f64]) {
        self.stiffness.mul(&self.pattern, x, y);
    }

    /// `y = M x`.
    pub fn apply_mass(&self, x: &[f64], y: &mut [f64]) {
        self.mass.mul(&self.pattern, x, y);
    }

    /// Values of `K - shift M` in the shared pattern.
    pub(crate) fn shifted(&self, shift: f64) -> Vec<f64> {
        self.stiffness.values.iter().zip(&self.mass.values).map(|(k, m)| k - shift * m).collect()
    }

    fn local(&self, e: &Element) -> Result<Local> {
        let nb = self.basis.len();
        let kappa = self.kappa();
        let is_e = self.irrep == IrrepLabel::E;
        let j = e.jac;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // inverse transpose
        let it = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
        let mut out = Local {
            k: vec![0.0; nb * nb],
            m: vec![0.0; nb * nb],
            t: if is_e { vec![0.0; nb * nb] } else { Vec::new() },
        };
        let mut val = vec![0.0; nb];
        let mut rg = vec![[0.0; 2]; nb];
        let mut g = vec![[0.0; 2]; nb];
        for (&(s, t), &wq) in self.rule.points.iter().zip(&self.rule.weights) {
            self.basis.eval(s, t, &mut val, &mut rg);
            for a in 0..nb {
                g[a] = [it[0][0] * rg[a][0] + it[0][1] * rg[a][1], it[1][0] * rg[a][0] + it[1][1] * rg[a][1]];
            }
            let x = e.origin[0] + j[0][0] * s + j[0][1] * t;
            let y = e.origin[1] + j[1][0] * s + j[1][1] * t;
            let v = self.model.value(x, y).ok_or(Error::Domain { x, y })?;
            let w = wq * det.abs();
            if !is_e {
                for a in 0..nb {
                    for b in 0..nb {
                        let nn = val[a] * val[b];
                        out.k[a * nb + b] += w * (kappa * (g[a][0] * g[b][0] + g[a][1] * g[b][1]) + v * nn);
                        out.m[a * nb + b] += w * nn;
                    }
                }
            } else {
                let r2 = x * x + y * y;
                for a in 0..nb {
                    let ra = x * g[a][0] + y * g[a][1];
                    let la = x * g[a][1] - y * g[a][0];
                    for b in 0..nb {
                        let nn = val[a] * val[b];
                        let rb = x * g[b][0] + y * g[b][1];
                        let lb = x * g[b][1] - y * g[b][0];
                        let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                        out.k[a * nb + b] +=
                            w * (kappa * (2.0 * nn + r2 * gg + val[a] * rb + val[b] * ra) + v * r2 * nn);
                        out.t[a * nb + b] += w * kappa * (val[a] * lb - val[b] * la);
                        out.m[a * nb + b] += w * r2 * nn;
                    }
                }
            }
        }
        Ok(out)
    }

    fn assemble(&mut self, elements: &[Element]) -> Result<()> {
        let nb = self.basis.len();
        for chunk in elements.chunks(2048) {
            let locals: Vec<Local> = chunk.par_iter().map(|e| self.local(e)).collect::<Result<_>>()?;
            for (e, loc) in chunk.iter().zip(&locals) {
                for (a, &na) in e.nodes.iter().enumerate() {
                    for (b, &nb_) in e.nodes.iter().enumerate() {
                        let idx = a * nb + b;
                        for f in 0..self.dofs.len() {
                            let (r, c) = (self.dofs[f][na], self.dofs[f][nb_]);
                            if r != FIXED && c != FIXED && r >= c {
                                self.stiffness.add(&self.pattern, r as usize, c as usize, loc.k[idx]);
                                self.mass.add(&self.pattern, r as usize, c as usize, loc.m[idx]);
                            }
                        }
                        if !loc.t.is_empty() {
                            // row u2 of node a, column u1 of node b
                            let (r, c) = (self.dofs[1][na], self.dofs[0][nb_]);
                            if r != FIXED && c != FIXED {
                                self.stiffness.add(&self.pattern, r as usize, c as usize, loc.t[idx]);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
