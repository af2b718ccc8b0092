//! Adaptive explicit Runge-Kutta 8(5,3) with the usual embedded error
//! estimate. States are fixed-size arrays so the same stepper drives the
//! plain flow (4 components), the flow plus action (5) and the flow plus
//! variational matrix (20).

use super::tableau::{A, B, E3, E5, STAGES};
use crate::error::{Error, Result};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// Right-hand side; `None` signals that a stage left the domain, which makes
/// the controller shrink the step instead of failing.
pub(crate) trait Rhs<const N: usize> {
    fn eval(&self, y: &[f64; N]) -> Option<[f64; N]>;
}

impl<const N: usize, F: Fn(&[f64; N]) -> Option<[f64; N]>> Rhs<N> for F {
    fn eval(&self, y: &[f64; N]) -> Option<[f64; N]> {
        self(y)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

pub(crate) struct Stepper<const N: usize, F> {
    f: F,
    tol: Tolerances,
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
    h: f64,
    steps: usize,
}

impl<const N: usize, F: Rhs<N>> Stepper<N, F> {
    pub fn new(f: F, y0: [f64; N], tol: Tolerances) -> Option<Self> {
        let dy = f.eval(&y0)?;
        let mut s = Self {
            f,
            tol,
            t: 0.0,
            y: y0,
            dy,
            h: 0.0,
            steps: 0,
        };
        s.h = s.initial_step();
        Some(s)
    }

    fn initial_step(&self) -> f64 {
        let scale = |v: f64| self.tol.atol + v.abs() * self.tol.rtol;
        let rms = |v: &[f64; N], w: &[f64; N]| {
            (v.iter().zip(w).map(|(a, b)| (a / scale(*b)).powi(2)).sum::<f64>() / N as f64).sqrt()
        };
        let d0 = rms(&self.y, &self.y);
        let d1 = rms(&self.dy, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = self.y;
        for i in 0..N {
            y1[i] += h0 * self.dy[i];
        }
        let Some(f1) = self.f.eval(&y1) else {
            return h0 * 0.1;
        };
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - self.dy[i];
        }
        let d2 = rms(&diff, &self.y) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.tol.h_max)
    }

    /// One Runge-Kutta step of size `h` from `(y, dy)`. Returns the new
    /// state, its derivative and the scaled error norm.
    fn attempt(&self, y: &[f64; N], dy: &[f64; N], h: f64) -> Option<([f64; N], [f64; N], f64)> {
        let mut k = [[0.0; N]; STAGES + 1];
        k[0] = *dy;
        for s in 1..STAGES {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = self.f.eval(&ys)?;
        }
        let mut y_new = *y;
        for (j, kj) in k.iter().enumerate().take(STAGES) {
            if B[j] != 0.0 {
                for i in 0..N {
                    y_new[i] += h * B[j] * kj[i];
                }
            }
        }
        let f_new = self.f.eval(&y_new)?;
        k[STAGES] = f_new;

        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for i in 0..N {
            let scale = self.tol.atol + y[i].abs().max(y_new[i].abs()) * self.tol.rtol;
            let mut s5 = 0.0;
            let mut s3 = 0.0;
            for j in 0..=STAGES {
                s5 += k[j][i] * E5[j];
                s3 += k[j][i] * E3[j];
            }
            e5 += (s5 / scale).powi(2);
            e3 += (s3 / scale).powi(2);
        }
        let denom = e5 + 0.01 * e3;
        let err = if denom == 0.0 {
            0.0
        } else {
            h.abs() * e5 / (denom * N as f64).sqrt()
        };
        if !err.is_finite() {
            return None;
        }
        Some((y_new, f_new, err))
    }

    /// A single step of prescribed size from `(y, dy)` with no error control.
    /// Used to land exactly on section crossings and sample times inside an
    /// already accepted step.
    pub fn jump_from(&self, y: &[f64; N], dy: &[f64; N], h: f64) -> Option<[f64; N]> {
        if h == 0.0 {
            return Some(*y);
        }
        self.attempt(y, dy, h).map(|(y, _, _)| y)
    }

    pub fn rhs(&self, y: &[f64; N]) -> Option<[f64; N]> {
        self.f.eval(y)
    }

    /// Advances by one accepted step, never past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<()> {
        self.steps += 1;
        if self.steps > self.tol.max_steps {
            return Err(Error::StepFailure {
                t: self.t,
                h: self.h,
            });
        }
        let mut h = self.h.min(self.tol.h_max);
        let mut rejected = false;
        loop {
            let remaining = t_end - self.t;
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepFailure { t: self.t, h });
            }
            match self.attempt(&self.y, &self.dy, h) {
                Some((y_new, f_new, err)) if err < 1.0 => {
                    let mut factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                    };
                    if rejected {
                        factor = factor.min(1.0);
                    }
                    self.t = if clipped { t_end } else { self.t + h };
                    self.y = y_new;
                    self.dy = f_new;
                    // a step clipped to hit t_end says little about the
                    // natural step size, keep the old one in that case
                    self.h = if clipped { self.h.max(h * factor) } else { h * factor };
                    return Ok(());
                }
                Some((_, _, err)) => {
                    h *= (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
                    rejected = true;
                }
                None => {
                    h *= 0.5;
                    rejected = true;
                }
            }
        }
    }
}
