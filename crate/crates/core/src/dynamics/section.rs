use std::io::Write;

use rayon::prelude::*;

use super::integrator::{Rhs, Stepper};
use super::{flow_rhs, integrate_with_tangent, tangent_initial, tangent_rhs, tangent_split, IntegratorOptions};
use crate::error::{Error, Result};
use crate::hamiltonians::{PhaseState, PotentialModel};

/// Crossings are refined until `|x|` drops below this.
const SECTION_TOL: f64 = 1e-12;
/// Hard acceptance limit for a refined crossing.
const SECTION_ACCEPT: f64 = 1e-10;

/// Longest time allowed between two consecutive section crossings.
const MAX_GAP: f64 = 1e4;

/// A state on the section `x = 0` reached after time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionHit {
    pub t: f64,
    pub state: PhaseState,
}

/// Section crossings of one seed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SosRecord {
    pub energy: f64,
    pub seed: PhaseState,
    /// `(y, py)` at successive crossings with `px >= 0`.
    pub crossings: Vec<(f64, f64)>,
    /// Number of crossings requested.
    pub n_crossings: usize,
    /// Set when the trajectory stopped before `n_crossings` (escape or step
    /// failure).
    pub stopped: Option<String>,
}

/// Completes `(y, py)` on the section to a phase-space point with energy
/// `energy` and `px >= 0`.
pub fn section_state(model: PotentialModel, energy: f64, y: f64, py: f64) -> Result<PhaseState> {
    let seed_err = Error::Seed { y, py, energy };
    let v = model.value(0.0, y).ok_or(seed_err)?;
    let px2 = (energy - v) / model.kinetic_prefactor() - py * py;
    if !(px2 >= 0.0) {
        return Err(Error::Seed { y, py, energy });
    }
    Ok(PhaseState::new(0.0, y, px2.sqrt(), py))
}

pub(crate) struct CrossingRun<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

/// Steps the system from `y0` and calls `visit` at every upward crossing of
/// `x = 0` until it returns `false`. The first four components of the state
/// must be `(x, y, px, py)`.
pub(crate) fn for_each_crossing<const N: usize, F: Rhs<N>>(
    f: F,
    y0: [f64; N],
    model: PotentialModel,
    opts: &IntegratorOptions,
    max_gap: f64,
    mut visit: impl FnMut(CrossingRun<N>) -> bool,
) -> Result<()> {
    let mut stepper = Stepper::new(f, y0, opts.tolerances()).ok_or(Error::Domain { x: y0[0], y: y0[1] })?;
    let mut last_hit = 0.0;
    loop {
        let (t0, ya, da) = (stepper.t, stepper.y, stepper.dy);
        stepper.step(f64::INFINITY)?;
        opts.check_escape(model, stepper.t, stepper.y[0], stepper.y[1])?;
        if ya[0] < 0.0 && stepper.y[0] >= 0.0 {
            let (tau, y) = refine_crossing(&stepper, &ya, &da, stepper.t - t0, stepper.dy[0])?;
            last_hit = t0 + tau;
            if !visit(CrossingRun { t: t0 + tau, y }) {
                return Ok(());
            }
        } else if stepper.t - last_hit > max_gap {
            return Err(Error::NoCrossing { t_max: stepper.t });
        }
    }
}

/// Runs until `count` crossings have been collected and returns them.
pub(crate) fn run_to_crossing<const N: usize, F: Rhs<N>>(
    f: F,
    y0: [f64; N],
    model: PotentialModel,
    count: usize,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<CrossingRun<N>>> {
    let mut hits = Vec::with_capacity(count);
    if count == 0 {
        return Ok(hits);
    }
    for_each_crossing(f, y0, model, opts, t_max, |run| {
        hits.push(run);
        hits.len() < count
    })?;
    if hits.last().is_some_and(|h| h.t > t_max) {
        return Err(Error::NoCrossing { t_max });
    }
    Ok(hits)
}

/// Locates `x = 0` inside the step of length `h` starting at `(y0, dy0)`.
/// The cubic Hermite interpolant gives the starting guess, then Newton on
/// re-taken single steps (safeguarded by bisection) drives `|x|` down.
fn refine_crossing<const N: usize, F: Rhs<N>>(
    stepper: &Stepper<N, F>,
    y0: &[f64; N],
    dy0: &[f64; N],
    h: f64,
    xdot1: f64,
) -> Result<(f64, [f64; N])> {
    let (x0, x1) = (y0[0], stepper.y[0]);
    let (v0, v1) = (dy0[0] * h, xdot1 * h);
    let hermite = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * x0 + (s3 - 2.0 * s2 + s) * v0 + (-2.0 * s3 + 3.0 * s2) * x1 + (s3 - s2) * v1
    };
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..50 {
        let m = 0.5 * (a + b);
        if hermite(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let (mut lo, mut hi) = (0.0, h);
    let mut tau = 0.5 * (a + b) * h;
    let mut best = (f64::INFINITY, tau, *y0);
    for _ in 0..60 {
        let y = stepper
            .jump_from(y0, dy0, tau)
            .ok_or(Error::StepFailure { t: stepper.t, h: tau })?;
        let x = y[0];
        if x.abs() < best.0 {
            best = (x.abs(), tau, y);
        }
        if x.abs() < SECTION_TOL {
            break;
        }
        if x < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let d = stepper.rhs(&y).map_or(0.0, |dy| dy[0]);
        let mut next = if d > 0.0 { tau - x / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 4.0 * f64::EPSILON * h.abs().max(1e-300) {
            break;
        }
        tau = next;
    }
    if best.0 < SECTION_ACCEPT {
        Ok((best.1, best.2))
    } else {
        Err(Error::NoConvergence {
            iterations: 60,
            residual: best.0,
        })
    }
}

/// The next upward crossing of `x = 0` (after `t = 0`).
pub fn next_crossing(state: &PhaseState, model: PotentialModel, t_max: f64, opts: &IntegratorOptions) -> Result<SectionHit> {
    let hits = run_to_crossing(flow_rhs(model), state.to_array(), model, 1, t_max, opts)?;
    let h = &hits[0];
    Ok(SectionHit {
        t: h.t,
        state: PhaseState::from_array(h.y),
    })
}

/// The `count`-th upward crossing together with the variational matrix of the
/// flow over the elapsed time.
pub fn next_crossing_with_tangent(
    state: &PhaseState,
    model: PotentialModel,
    count: usize,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<(SectionHit, [[f64; 4]; 4])> {
    let hits = run_to_crossing(tangent_rhs(model), tangent_initial(state), model, count.max(1), t_max, opts)?;
    let last = hits.last().expect("at least one crossing");
    let (s, m) = tangent_split(&last.y);
    Ok((SectionHit { t: last.t, state: s }, m))
}

/// Collects `n_crossings` section points for every seed `(y, py)`.
/// Trajectories run in parallel; one that escapes or fails keeps the points
/// gathered so far and records why it stopped.
pub fn poincare_section(
    energy: f64,
    seeds: &[(f64, f64)],
    n_crossings: usize,
    model: PotentialModel,
    opts: &IntegratorOptions,
) -> Result<Vec<SosRecord>> {
    let states = seeds
        .iter()
        .map(|&(y, py)| section_state(model, energy, y, py))
        .collect::<Result<Vec<_>>>()?;
    Ok(states
        .par_iter()
        .map(|seed| {
            let mut crossings = Vec::with_capacity(n_crossings);
            let res = if n_crossings == 0 {
                Ok(())
            } else {
                for_each_crossing(flow_rhs(model), seed.to_array(), model, opts, MAX_GAP, |run| {
                    crossings.push((run.y[1], run.y[3]));
                    crossings.len() < n_crossings
                })
            };
            SosRecord {
                energy,
                seed: *seed,
                crossings,
                n_crossings,
                stopped: res.err().map(|e| e.to_string()),
            }
        })
        .collect())
}

/// Writes records as CSV with columns `energy,seed_index,crossing_index,y,py`.
pub fn write_sos_csv<W: Write>(w: &mut W, records: &[SosRecord]) -> std::io::Result<()> {
    writeln!(w, "energy,seed_index,crossing_index,y,py")?;
    for (i, r) in records.iter().enumerate() {
        for (k, (y, py)) in r.crossings.iter().enumerate() {
            writeln!(w, "{},{},{},{:.15e},{:.15e}", r.energy, i, k, y, py)?;
        }
    }
    Ok(())
}

/// Finite-time estimate of the largest Lyapunov exponent: growth rate of a
/// tangent vector renormalised every `chunk` time units.
pub fn finite_time_lyapunov(state: &PhaseState, model: PotentialModel, t_total: f64, opts: &IntegratorOptions) -> Result<f64> {
    let chunk = 1.0_f64;
    let mut s = *state;
    let mut v = [0.5; 4];
    let mut sum = 0.0;
    let mut t = 0.0;
    while t < t_total {
        let dt = chunk.min(t_total - t);
        let ts = integrate_with_tangent(&s, model, dt, opts)?;
        let mut w = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                w[i] += ts.variational[i][j] * v[j];
            }
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        sum += norm.ln();
        for i in 0..4 {
            v[i] = w[i] / norm;
        }
        s = ts.state;
        t += dt;
    }
    Ok(sum / t_total)
}
