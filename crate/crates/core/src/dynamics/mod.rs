//! Hamiltonian flow of the planar models, its variational (tangent) flow and
//! Poincare surfaces of section at `x = 0`, `px >= 0`.

mod integrator;
mod section;
mod tableau;

pub use section::{
    finite_time_lyapunov, next_crossing, next_crossing_with_tangent, poincare_section,
    section_state, write_sos_csv, SectionHit, SosRecord,
};

pub(crate) use integrator::{Stepper, Tolerances};

use crate::error::{Error, Result};
use crate::hamiltonians::{PhaseState, PotentialModel};

/// Controls for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
    pub max_steps: usize,
    /// Henon-Heiles trajectories farther than this from the origin are
    /// reported as escaped.
    pub escape_radius: f64,
    /// If set, trajectories are sampled on this uniform time grid instead of
    /// at the accepted steps.
    pub sample_interval: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 200_000_000,
            escape_radius: 3.0,
            sample_interval: None,
        }
    }
}

impl IntegratorOptions {
    pub(crate) fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.h_max,
            max_steps: self.max_steps,
        }
    }

    pub(crate) fn check_escape(&self, model: PotentialModel, t: f64, x: f64, y: f64) -> Result<()> {
        if model == PotentialModel::HenonHeiles && x * x + y * y > self.escape_radius.powi(2) {
            return Err(Error::Escape { t });
        }
        Ok(())
    }
}

/// Sampled solution of the equations of motion.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&PhaseState> {
        self.states.last()
    }

    /// Largest deviation of the energy from its initial value.
    pub fn max_energy_drift(&self, model: PotentialModel) -> f64 {
        let Some(e0) = self.states.first().and_then(|s| model.energy(s)) else {
            return 0.0;
        };
        self.states
            .iter()
            .map(|s| model.energy(s).map_or(f64::INFINITY, |e| (e - e0).abs()))
            .fold(0.0, f64::max)
    }
}

/// Phase-space point together with the linearised flow map
/// `d(state(t)) / d(state(0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentState {
    pub state: PhaseState,
    pub variational: [[f64; 4]; 4],
    pub t: f64,
}

impl TangentState {
    pub fn determinant(&self) -> f64 {
        nalgebra::Matrix4::from_fn(|i, j| self.variational[i][j]).determinant()
    }

    /// Max-norm of `M^T J M - J`.
    pub fn symplectic_defect(&self) -> f64 {
        symplectic_defect(&self.variational)
    }
}

pub(crate) fn symplectic_defect(m: &[[f64; 4]; 4]) -> f64 {
    let m = nalgebra::Matrix4::from_fn(|i, j| m[i][j]);
    let j = symplectic_form();
    (m.transpose() * j * m - j).amax()
}

pub(crate) fn symplectic_form() -> nalgebra::Matrix4<f64> {
    let mut j = nalgebra::Matrix4::zeros();
    j[(0, 2)] = 1.0;
    j[(1, 3)] = 1.0;
    j[(2, 0)] = -1.0;
    j[(3, 1)] = -1.0;
    j
}

/// Hamilton's equations `x' = 2c p`, `p' = -grad v`.
pub(crate) fn flow_rhs(model: PotentialModel) -> impl Fn(&[f64; 4]) -> Option<[f64; 4]> + Copy {
    let c2 = 2.0 * model.kinetic_prefactor();
    move |s: &[f64; 4]| {
        let g = model.gradient(s[0], s[1])?;
        Some([c2 * s[2], c2 * s[3], -g[0], -g[1]])
    }
}

/// Flow plus the accumulated action `integral p . dq`.
pub(crate) fn action_rhs(model: PotentialModel) -> impl Fn(&[f64; 5]) -> Option<[f64; 5]> + Copy {
    let c2 = 2.0 * model.kinetic_prefactor();
    move |s: &[f64; 5]| {
        let g = model.gradient(s[0], s[1])?;
        Some([c2 * s[2], c2 * s[3], -g[0], -g[1], c2 * (s[2] * s[2] + s[3] * s[3])])
    }
}

/// Flow plus the variational matrix stored row-major in slots 4..20.
pub(crate) fn tangent_rhs(model: PotentialModel) -> impl Fn(&[f64; 20]) -> Option<[f64; 20]> + Copy {
    let c2 = 2.0 * model.kinetic_prefactor();
    move |s: &[f64; 20]| {
        let (g, h) = model.gradient_hessian(s[0], s[1])?;
        let mut out = [0.0; 20];
        out[0] = c2 * s[2];
        out[1] = c2 * s[3];
        out[2] = -g[0];
        out[3] = -g[1];
        let m = |i: usize, j: usize| s[4 + 4 * i + j];
        for j in 0..4 {
            out[4 + j] = c2 * m(2, j);
            out[8 + j] = c2 * m(3, j);
            out[12 + j] = -h[0][0] * m(0, j) - h[0][1] * m(1, j);
            out[16 + j] = -h[1][0] * m(0, j) - h[1][1] * m(1, j);
        }
        Some(out)
    }
}

pub(crate) fn tangent_initial(state: &PhaseState) -> [f64; 20] {
    let mut y = [0.0; 20];
    y[..4].copy_from_slice(&state.to_array());
    for i in 0..4 {
        y[4 + 5 * i] = 1.0;
    }
    y
}

pub(crate) fn tangent_split(y: &[f64; 20]) -> (PhaseState, [[f64; 4]; 4]) {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row.copy_from_slice(&y[4 + 4 * i..8 + 4 * i]);
    }
    (PhaseState::new(y[0], y[1], y[2], y[3]), m)
}

fn check_start(model: PotentialModel, state: &PhaseState) -> Result<()> {
    if !model.contains(state.x, state.y) || model.value(state.x, state.y).is_none() {
        return Err(Error::Domain {
            x: state.x,
            y: state.y,
        });
    }
    Ok(())
}

/// Integrates Hamilton's equations from `state` over `[0, t_final]`.
pub fn integrate(
    state: &PhaseState,
    model: PotentialModel,
    t_final: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    check_start(model, state)?;
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    let mut stepper = Stepper::new(flow_rhs(model), state.to_array(), opts.tolerances())
        .ok_or(Error::Domain { x: state.x, y: state.y })?;
    let mut out = Trajectory {
        times: vec![0.0],
        states: vec![*state],
    };
    let mut next_sample = opts.sample_interval.map(|dt| (1usize, dt));
    while stepper.t < t_final {
        let (t0, y0, dy0) = (stepper.t, stepper.y, stepper.dy);
        stepper.step(t_final)?;
        opts.check_escape(model, stepper.t, stepper.y[0], stepper.y[1])?;
        match &mut next_sample {
            None => {
                out.times.push(stepper.t);
                out.states.push(PhaseState::from_array(stepper.y));
            }
            Some((k, dt)) => {
                while (*k as f64) * *dt <= stepper.t * (1.0 + 1e-14) {
                    let ts = (*k as f64) * *dt;
                    let y = stepper
                        .jump_from(&y0, &dy0, ts - t0)
                        .ok_or(Error::StepFailure { t: ts, h: ts - t0 })?;
                    out.times.push(ts);
                    out.states.push(PhaseState::from_array(y));
                    *k += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Integrates the flow together with its variational matrix.
pub fn integrate_with_tangent(
    state: &PhaseState,
    model: PotentialModel,
    t_final: f64,
    opts: &IntegratorOptions,
) -> Result<TangentState> {
    check_start(model, state)?;
    if t_final == 0.0 {
        let (s, m) = tangent_split(&tangent_initial(state));
        return Ok(TangentState {
            state: s,
            variational: m,
            t: 0.0,
        });
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be non-negative, got {t_final}")));
    }
    let mut stepper = Stepper::new(tangent_rhs(model), tangent_initial(state), opts.tolerances())
        .ok_or(Error::Domain { x: state.x, y: state.y })?;
    while stepper.t < t_final {
        stepper.step(t_final)?;
        opts.check_escape(model, stepper.t, stepper.y[0], stepper.y[1])?;
    }
    let (s, m) = tangent_split(&stepper.y);
    Ok(TangentState {
        state: s,
        variational: m,
        t: stepper.t,
    })
}
