//! Periodic orbits of the planar flow: Newton refinement on the section
//! return map, family identification, continuation in energy and the
//! derived period, action and stability data.
//!
//! Three families exist at every energy below escape:
//! * `A`: straight-line librations along the mirror lines through the origin,
//! * `B`: librations symmetric about a mirror line and crossing it at a
//!   right angle (unstable),
//! * `C`: rotations around the origin.

mod family;
mod interp;

use std::io::Write;

use nalgebra::{Matrix2, Matrix4, Vector2};
use serde::{Deserialize, Serialize};

pub use family::{continue_family, continue_family_partial, write_family_csv, Continuation, FamilyCurve};
pub use interp::MonotoneCubic;

use crate::dynamics::{
    action_rhs, flow_rhs, next_crossing, next_crossing_with_tangent, section_state, IntegratorOptions, Stepper,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::hamiltonians::{PhaseState, PotentialModel, SymmetryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "C" | "c" => Ok(Family::C),
            other => Err(Error::InvalidParameter(format!("unknown orbit family '{other}'"))),
        }
    }
}

/// A converged periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub family: Family,
    pub model: PotentialModel,
    pub energy: f64,
    /// A point on the orbit; on the section for refined orbits, anywhere for
    /// symmetry images.
    pub initial: PhaseState,
    pub period: f64,
    /// `integral p . dq` over one period.
    pub action: f64,
    pub monodromy: [[f64; 4]; 4],
    /// Trace of the transverse 2x2 block, `tr(M) - 2`.
    pub trace_reduced: f64,
    pub lyapunov: f64,
    /// `|Phi_T(initial) - initial|`.
    pub residual: f64,
}

impl OrbitRecord {
    pub fn is_unstable(&self) -> bool {
        self.trace_reduced.abs() > 2.0
    }

    /// Eigenvalues from the palindromic characteristic polynomial of a
    /// symplectic matrix, `z = mu + 1/mu` solving `z^2 - a z + b - 2 = 0`.
    /// A general eigensolver splits the unit Jordan pair by the square root
    /// of the rounding error; this form keeps it at the level of `b`.
    pub fn monodromy_eigenvalues(&self) -> Vec<(f64, f64)> {
        let m = &self.monodromy;
        let a: f64 = (0..4).map(|i| m[i][i]).sum();
        let mut b = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                b += m[i][i] * m[j][j] - m[i][j] * m[j][i];
            }
        }
        let mut out = Vec::with_capacity(4);
        for z in quadratic_roots(1.0, -a, b - 2.0) {
            // mu^2 - z mu + 1 = 0
            let (zr, zi) = z;
            let (dr, di) = csqrt(zr * zr - zi * zi - 4.0, 2.0 * zr * zi);
            let plus = (0.5 * (zr + dr), 0.5 * (zi + di));
            let minus = (0.5 * (zr - dr), 0.5 * (zi - di));
            // the smaller root is the reciprocal of the larger, without cancellation
            let big = if plus.0.hypot(plus.1) >= minus.0.hypot(minus.1) { plus } else { minus };
            let n2 = big.0 * big.0 + big.1 * big.1;
            out.push(big);
            out.push((big.0 / n2, -big.1 / n2));
        }
        out
    }

    /// Number of monodromy eigenvalues within `tol` of 1.
    pub fn unit_eigenvalue_count(&self, tol: f64) -> usize {
        self.monodromy_eigenvalues()
            .iter()
            .filter(|(re, im)| (re - 1.0).hypot(*im) < tol)
            .count()
    }

    pub fn monodromy_determinant(&self) -> f64 {
        Matrix4::from_fn(|i, j| self.monodromy[i][j]).determinant()
    }
}

fn csqrt(re: f64, im: f64) -> (f64, f64) {
    let r = re.hypot(im);
    let sr = (0.5 * (r + re)).max(0.0).sqrt();
    let si = (0.5 * (r - re)).max(0.0).sqrt();
    (sr, if im < 0.0 { -si } else { si })
}

/// Roots of `p x^2 + q x + r` as complex pairs.
fn quadratic_roots(p: f64, q: f64, r: f64) -> [(f64, f64); 2] {
    let disc = q * q - 4.0 * p * r;
    if disc >= 0.0 {
        let s = -0.5 * (q + q.signum() * disc.sqrt());
        if s == 0.0 {
            return [(0.0, 0.0), (0.0, 0.0)];
        }
        [(s / p, 0.0), (r / s, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt() / p;
        [(-0.5 * q / p, im), (-0.5 * q / p, -im)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub max_iterations: usize,
    /// Newton stops once the section residual is below this.
    pub tolerance: f64,
    /// Section crossings per primitive period.
    pub crossings: usize,
    /// Longest time searched for the return.
    pub t_max: f64,
    pub integrator: IntegratorOptions,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-11,
            crossings: 1,
            t_max: 500.0,
            integrator: IntegratorOptions {
                rtol: 1e-14,
                atol: 1e-14,
                ..IntegratorOptions::default()
            },
        }
    }
}

/// Jacobian of the section return map `(y, py) -> (y', py')` at fixed energy,
/// built from the monodromy of the flow up to the return.
fn return_map_jacobian(model: PotentialModel, start: &PhaseState, end: &PhaseState, m: &[[f64; 4]; 4]) -> Matrix2<f64> {
    let c2 = 2.0 * model.kinetic_prefactor();
    let g0 = model.gradient(start.x, start.y).unwrap_or([0.0; 2]);
    // px is eliminated by the energy constraint c (px^2 + py^2) + v = E
    let dpx_dy = -g0[1] / (c2 * start.px);
    let dpx_dpy = -start.py / start.px;
    let jin = [[0.0, 0.0], [1.0, 0.0], [dpx_dy, dpx_dpy], [0.0, 1.0]];
    let mut a = [[0.0; 2]; 4];
    for i in 0..4 {
        for k in 0..2 {
            a[i][k] = (0..4).map(|j| m[i][j] * jin[j][k]).sum();
        }
    }
    let f_end = flow_rhs(model)(&end.to_array()).unwrap_or([0.0; 4]);
    // the return time adjusts so that x stays on the section
    let dtau = [-a[0][0] / f_end[0], -a[0][1] / f_end[0]];
    let row = |i: usize| [a[i][0] + f_end[i] * dtau[0], a[i][1] + f_end[i] * dtau[1]];
    let (ry, rpy) = (row(1), row(3));
    Matrix2::new(ry[0], ry[1], rpy[0], rpy[1])
}

/// Newton iteration on the return map. Returns the section point and the
/// number of iterations used.
fn newton_on_section(
    y: f64,
    py: f64,
    energy: f64,
    model: PotentialModel,
    opts: &RefineOptions,
) -> Result<(PhaseState, usize)> {
    let mut z = Vector2::new(y, py);
    let mut best = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let s0 = section_state(model, energy, z[0], z[1])?;
        let (hit, m) = next_crossing_with_tangent(&s0, model, opts.crossings, opts.t_max, &opts.integrator)?;
        let f = Vector2::new(hit.state.y - z[0], hit.state.py - z[1]);
        let res = f.norm();
        best = best.min(res);
        if res < opts.tolerance {
            return Ok((s0, it));
        }
        let j = return_map_jacobian(model, &s0, &hit.state, &m) - Matrix2::identity();
        let Some(delta) = j.lu().solve(&(-f)) else {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        };
        // keep steps modest so the iterate stays on the energy shell
        let cap = 0.1 * (energy / model.kinetic_prefactor()).sqrt().max(0.1);
        let scale = (cap / delta.norm()).min(1.0);
        z += delta * scale;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: best,
    })
}

/// Family signature of a periodic orbit through the section point `s0`.
/// Librations retrace themselves, so their first downward crossing of
/// `x = 0` is the starting point with reversed momentum; A librations also
/// pass through the origin.
pub fn classify(s0: &PhaseState, model: PotentialModel, t_max: f64, opts: &IntegratorOptions) -> Result<Family> {
    // the downward crossing of the trajectory is the upward crossing of its
    // mirror image under x -> -x
    let mirrored = PhaseState::new(-s0.x, s0.y, -s0.px, s0.py);
    let hit = next_crossing(&mirrored, model, t_max, opts)?;
    let down = PhaseState::new(0.0, hit.state.y, -hit.state.px, hit.state.py);
    let p = s0.px.hypot(s0.py);
    let retrace = (down.y - s0.y).abs() < 1e-6 * p.max(1.0)
        && (down.px + s0.px).abs() < 1e-6 * p
        && (down.py + s0.py).abs() < 1e-6 * p;
    Ok(if !retrace {
        Family::C
    } else if s0.y.abs() < 1e-6 {
        Family::A
    } else {
        Family::B
    })
}

/// Refines `guess` (its `(y, py)` on the section) to a periodic orbit at
/// `energy`. With `requested` set, an orbit of another family is an error.
pub fn refine_periodic_orbit(
    guess: &PhaseState,
    energy: f64,
    model: PotentialModel,
    requested: Option<Family>,
    opts: &RefineOptions,
) -> Result<OrbitRecord> {
    if !(energy > 0.0 && energy < model.escape_energy()) {
        return Err(Error::InvalidParameter(format!(
            "energy {energy} outside (0, {}) for model {model}",
            model.escape_energy()
        )));
    }
    let (s0, _) = newton_on_section(guess.y, guess.py, energy, model, opts)?;
    let family = classify(&s0, model, opts.t_max, &opts.integrator)?;
    if let Some(req) = requested {
        if req != family {
            return Err(Error::WrongFamily {
                requested: req,
                found: family,
            });
        }
    }
    finish_record(s0, family, energy, model, opts)
}

fn finish_record(
    s0: PhaseState,
    family: Family,
    energy: f64,
    model: PotentialModel,
    opts: &RefineOptions,
) -> Result<OrbitRecord> {
    let (hit, m) = next_crossing_with_tangent(&s0, model, opts.crossings, opts.t_max, &opts.integrator)?;
    let period = hit.t;
    let residual = hit.state.distance(&s0);
    let mut rec = OrbitRecord {
        family,
        model,
        energy,
        initial: s0,
        period,
        action: 0.0,
        monodromy: m,
        trace_reduced: (0..4).map(|i| m[i][i]).sum::<f64>() - 2.0,
        lyapunov: 0.0,
        residual,
    };
    let mu_max = rec
        .monodromy_eigenvalues()
        .iter()
        .map(|(re, im)| re.hypot(*im))
        .fold(0.0, f64::max);
    rec.lyapunov = (mu_max.ln() / period).max(0.0);
    rec.action = orbit_action(&rec, &opts.integrator)?;
    Ok(rec)
}

/// Points of the section `x = 0`, `py = 0` that lie inside the energy shell.
fn section_line(energy: f64, model: PotentialModel) -> (f64, f64) {
    let inside = |y: f64| model.value(0.0, y).is_some_and(|v| v < energy);
    let bisect = |mut a: f64, mut b: f64| {
        // a inside, b outside
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if inside(m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let (l, b) = model.reference_triangle();
    let lo = bisect(0.0, -l);
    let hi = bisect(0.0, match model {
        PotentialModel::Ring => b,
        PotentialModel::HenonHeiles => 1.0,
    });
    (lo, hi)
}

/// Locates a member of `family` at `energy` without a prior guess. A uses
/// the mirror line through the origin; B and C are found by scanning the
/// reversibility line `py = 0` of the section for orbits that meet it again
/// on their first downward crossing.
pub fn find_orbit(family: Family, energy: f64, model: PotentialModel, opts: &RefineOptions) -> Result<OrbitRecord> {
    if family == Family::A {
        let p0 = (energy / model.kinetic_prefactor()).sqrt();
        let guess = PhaseState::new(0.0, 0.0, p0 * 3f64.sqrt() / 2.0, p0 / 2.0);
        return refine_periodic_orbit(&guess, energy, model, Some(Family::A), opts);
    }
    let (lo, hi) = section_line(energy, model);
    let n = 80;
    let g = |y: f64| -> Option<f64> {
        let s0 = section_state(model, energy, y, 0.0).ok()?;
        let mirrored = PhaseState::new(0.0, y, -s0.px, 0.0);
        next_crossing(&mirrored, model, opts.t_max, &opts.integrator)
            .ok()
            .map(|h| h.state.py)
    };
    let ys: Vec<f64> = (1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let gs: Vec<Option<f64>> = {
        use rayon::prelude::*;
        ys.par_iter().map(|&y| g(y)).collect()
    };
    let mut found: Vec<OrbitRecord> = Vec::new();
    for i in 0..ys.len() - 1 {
        let (Some(ga), Some(gb)) = (gs[i], gs[i + 1]) else {
            continue;
        };
        if ga.signum() == gb.signum() {
            continue;
        }
        let (mut a, mut b, mut fa) = (ys[i], ys[i + 1], ga);
        for _ in 0..30 {
            let m = 0.5 * (a + b);
            let Some(fm) = g(m) else { break };
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let y0 = 0.5 * (a + b);
        // a genuine root has a small residual; a jump in the crossing
        // sequence does not
        if g(y0).is_none_or(|v| v.abs() > 1e-3 * (energy / model.kinetic_prefactor()).sqrt()) {
            continue;
        }
        let guess = PhaseState::new(0.0, y0, 0.0, 0.0);
        match refine_periodic_orbit(&guess, energy, model, None, opts) {
            Ok(rec) if rec.family == family => found.push(rec),
            Ok(_) => {}
            Err(e) => log::debug!("candidate at y = {y0} rejected: {e}"),
        }
    }
    found
        .into_iter()
        .max_by(|a, b| a.initial.y.partial_cmp(&b.initial.y).unwrap())
        .ok_or(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        })
}

/// `integral (px dx + py dy)` over one period, accumulated alongside the
/// flow.
pub fn orbit_action(record: &OrbitRecord, opts: &IntegratorOptions) -> Result<f64> {
    let s = record.initial;
    let y0 = [s.x, s.y, s.px, s.py, 0.0];
    let mut stepper = Stepper::new(action_rhs(record.model), y0, opts.tolerances()).ok_or(Error::Domain { x: s.x, y: s.y })?;
    while stepper.t < record.period {
        stepper.step(record.period)?;
    }
    Ok(stepper.y[4])
}

/// Samples one period of the orbit at `n` equal time steps (`n + 1` points).
pub fn orbit_path(record: &OrbitRecord, n: usize, opts: &IntegratorOptions) -> Result<Trajectory> {
    let mut o = *opts;
    o.sample_interval = Some(record.period / n as f64);
    let mut tr = crate::dynamics::integrate(&record.initial, record.model, record.period, &o)?;
    tr.times.truncate(n + 1);
    tr.states.truncate(n + 1);
    Ok(tr)
}

/// Returns the orbit and its images under the rotations by 2pi/3 and 4pi/3.
pub fn symmetry_images(record: &OrbitRecord) -> [OrbitRecord; 3] {
    let rotate = |k: u8| {
        let g = SymmetryOp {
            rotation: k,
            reflect: false,
        };
        let mut rec = record.clone();
        rec.initial = record.initial.transformed(g);
        let [c0, s0] = g.apply([1.0, 0.0]);
        let r = nalgebra::Matrix2::new(c0, -s0, s0, c0);
        let mut big = Matrix4::zeros();
        big.fixed_view_mut::<2, 2>(0, 0).copy_from(&r);
        big.fixed_view_mut::<2, 2>(2, 2).copy_from(&r);
        let m = Matrix4::from_fn(|i, j| record.monodromy[i][j]);
        let mr = big * m * big.transpose();
        for i in 0..4 {
            for j in 0..4 {
                rec.monodromy[i][j] = mr[(i, j)];
            }
        }
        rec
    };
    [record.clone(), rotate(1), rotate(2)]
}

/// Residual `|Phi_T(initial) - initial|` recomputed by direct integration.
pub fn periodicity_residual(record: &OrbitRecord, opts: &IntegratorOptions) -> Result<f64> {
    let tr = crate::dynamics::integrate(&record.initial, record.model, record.period, opts)?;
    Ok(tr.last().unwrap().distance(&record.initial))
}

/// Writes one period of the orbit as CSV `t,x,y,px,py`.
pub fn write_path_csv<W: Write>(w: &mut W, path: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "t,x,y,px,py")?;
    for (t, s) in path.times.iter().zip(&path.states) {
        writeln!(w, "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}", t, s.x, s.y, s.px, s.py)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_parsing() {
        assert_eq!("B".parse::<Family>().unwrap(), Family::B);
        assert!("D".parse::<Family>().is_err());
        assert_eq!(Family::C.to_string(), "C");
    }

    #[test]
    fn a_orbit_is_straight_line() {
        let rec = find_orbit(Family::A, 0.1, PotentialModel::HenonHeiles, &RefineOptions::default()).unwrap();
        assert!(rec.residual < 1e-9);
        let path = orbit_path(&rec, 64, &IntegratorOptions::default()).unwrap();
        // every point stays on the 30 degree line through the origin
        for s in &path.states {
            assert!((s.y - s.x / 3f64.sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn action_matches_trapezoid_on_path() {
        let rec = find_orbit(Family::B, 0.12, PotentialModel::HenonHeiles, &RefineOptions::default()).unwrap();
        let path = orbit_path(&rec, 4000, &IntegratorOptions::default()).unwrap();
        // p . dq/dt = 2c |p|^2; periodic trapezoid rule is spectrally accurate
        let c2 = 2.0 * rec.model.kinetic_prefactor();
        let dt = rec.period / 4000.0;
        let s: f64 = path.states[..4000].iter().map(|s| c2 * (s.px * s.px + s.py * s.py) * dt).sum();
        assert!((s - rec.action).abs() / rec.action < 1e-8, "{s} vs {}", rec.action);
    }

    #[test]
    fn wrong_family_reported() {
        let p0 = (0.1f64 / 0.5).sqrt();
        let guess = PhaseState::new(0.0, 0.0, p0 * 3f64.sqrt() / 2.0, p0 / 2.0);
        let err = refine_periodic_orbit(&guess, 0.1, PotentialModel::HenonHeiles, Some(Family::B), &RefineOptions::default())
            .unwrap_err();
        assert!(matches!(
            err,
            Error::WrongFamily {
                requested: Family::B,
                found: Family::A
            }
        ));
    }

    #[test]
    fn images_share_invariants() {
        let rec = find_orbit(Family::B, 0.12, PotentialModel::HenonHeiles, &RefineOptions::default()).unwrap();
        let imgs = symmetry_images(&rec);
        for im in &imgs {
            assert_eq!(im.period, rec.period);
            assert_eq!(im.action, rec.action);
            assert!(periodicity_residual(im, &IntegratorOptions::default()).unwrap() < 1e-9);
            assert!((im.trace_reduced - rec.trace_reduced).abs() < 1e-9 * rec.trace_reduced.abs().max(1.0));
        }
    }
}
