use std::io::Write;

use serde::{Deserialize, Serialize};

use super::interp::MonotoneCubic;
use super::{classify, finish_record, newton_on_section, Family, OrbitRecord, RefineOptions};
use crate::error::{Error, Result};
use crate::hamiltonians::{PhaseState, PotentialModel};

/// A family continued over an energy grid, with interpolants for the period,
/// action and Lyapunov exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyCurve {
    pub family: Family,
    pub model: PotentialModel,
    /// Converged orbits sorted by energy.
    pub records: Vec<OrbitRecord>,
    period: MonotoneCubic,
    action: MonotoneCubic,
    lyapunov: MonotoneCubic,
}

impl FamilyCurve {
    pub fn from_records(mut records: Vec<OrbitRecord>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InvalidParameter("a family curve needs at least two orbits".into()));
        }
        records.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
        let es: Vec<f64> = records.iter().map(|r| r.energy).collect();
        let ts: Vec<f64> = records.iter().map(|r| r.period).collect();
        let ss: Vec<f64> = records.iter().map(|r| r.action).collect();
        let ls: Vec<f64> = records.iter().map(|r| r.lyapunov).collect();
        Ok(Self {
            family: records[0].family,
            model: records[0].model,
            period: MonotoneCubic::new(es.clone(), ts.clone()),
            // dS/dE = T gives exact nodal slopes for the action
            action: MonotoneCubic::with_slopes(es.clone(), ss, ts),
            lyapunov: MonotoneCubic::new(es, ls),
            records,
        })
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn span(&self) -> (f64, f64) {
        self.period.range()
    }

    fn check(&self, energy: f64) -> Result<()> {
        let (lo, hi) = self.span();
        let slack = 1e-12 * hi.abs().max(1.0);
        if energy < lo - slack || energy > hi + slack || !energy.is_finite() {
            return Err(Error::Range { energy, lo, hi });
        }
        Ok(())
    }

    pub fn period_at(&self, energy: f64) -> Result<f64> {
        self.check(energy)?;
        Ok(self.period.eval(energy))
    }

    pub fn action_at(&self, energy: f64) -> Result<f64> {
        self.check(energy)?;
        Ok(self.action.eval(energy))
    }

    pub fn lyapunov_at(&self, energy: f64) -> Result<f64> {
        self.check(energy)?;
        Ok(self.lyapunov.eval(energy))
    }

    /// The product `lambda T`, the stability exponent per period.
    pub fn stability_exponent_at(&self, energy: f64) -> Result<f64> {
        Ok(self.lyapunov_at(energy)? * self.period_at(energy)?)
    }

    pub fn action_interpolant(&self) -> &MonotoneCubic {
        &self.action
    }

    /// The tabulated orbit closest in energy.
    pub fn nearest(&self, energy: f64) -> &OrbitRecord {
        self.records
            .iter()
            .min_by(|a, b| (a.energy - energy).abs().partial_cmp(&(b.energy - energy).abs()).unwrap())
            .unwrap()
    }

    /// Refines the family member at an arbitrary energy inside the span,
    /// starting from the nearest tabulated orbit.
    pub fn orbit_at(&self, energy: f64, opts: &RefineOptions) -> Result<OrbitRecord> {
        self.check(energy)?;
        let near = self.nearest(energy);
        if near.energy == energy {
            return Ok(near.clone());
        }
        let mut c = continue_family_partial(near, &[energy], opts);
        match c.failure.take() {
            Some(e) => Err(e),
            None => c.records.pop().ok_or(Error::NoConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            }),
        }
    }
}

/// Outcome of a continuation that may have stopped early.
#[derive(Debug)]
pub struct Continuation {
    /// Orbits at the grid energies reached, sorted by energy.
    pub records: Vec<OrbitRecord>,
    pub failure: Option<Error>,
}

/// Predictor-corrector continuation of `seed` across `energy_grid`. Fails
/// with the last good energy if any grid point cannot be reached.
pub fn continue_family(seed: &OrbitRecord, energy_grid: &[f64], opts: &RefineOptions) -> Result<FamilyCurve> {
    let c = continue_family_partial(seed, energy_grid, opts);
    if let Some(e) = c.failure {
        return Err(e);
    }
    FamilyCurve::from_records(c.records)
}

/// Like [`continue_family`] but keeps whatever was computed before a break.
/// The grid is walked outward from the seed energy in both directions; a
/// step that fails is retried with smaller energy increments.
pub fn continue_family_partial(seed: &OrbitRecord, energy_grid: &[f64], opts: &RefineOptions) -> Continuation {
    let mut grid: Vec<f64> = energy_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let up: Vec<f64> = grid.iter().copied().filter(|&e| e >= seed.energy).collect();
    let down: Vec<f64> = grid.iter().rev().copied().filter(|&e| e < seed.energy).collect();

    let mut records = Vec::new();
    let mut failure = None;
    for branch in [up, down] {
        let mut history: Vec<OrbitRecord> = vec![seed.clone()];
        for &target in &branch {
            if target == seed.energy {
                records.push(seed.clone());
                continue;
            }
            match advance(&history, target, opts, 0) {
                Ok(rec) => {
                    history.push(rec.clone());
                    records.push(rec);
                }
                Err(e) => {
                    failure = Some(Error::ContinuationBreak {
                        last_good: history.last().unwrap().energy,
                        failed: target,
                        reason: e.to_string(),
                    });
                    break;
                }
            }
        }
        if failure.is_some() {
            break;
        }
    }
    records.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    Continuation { records, failure }
}

const MAX_BISECTIONS: usize = 6;

fn advance(history: &[OrbitRecord], target: f64, opts: &RefineOptions, depth: usize) -> Result<OrbitRecord> {
    let prev = history.last().unwrap();
    let mut guess = prev.initial;
    if let [.., a, b] = history {
        // linear predictor in energy
        let w = (target - b.energy) / (b.energy - a.energy);
        guess.y = b.initial.y + w * (b.initial.y - a.initial.y);
        guess.py = b.initial.py + w * (b.initial.py - a.initial.py);
    }
    match correct(&guess, prev, target, opts) {
        Ok(rec) => Ok(rec),
        Err(e) if depth >= MAX_BISECTIONS => Err(e),
        Err(_) => {
            let mid = 0.5 * (prev.energy + target);
            let rec_mid = advance(history, mid, opts, depth + 1)?;
            let mut extended = history.to_vec();
            extended.push(rec_mid);
            advance(&extended, target, opts, depth + 1)
        }
    }
}

fn correct(guess: &PhaseState, prev: &OrbitRecord, energy: f64, opts: &RefineOptions) -> Result<OrbitRecord> {
    let (s0, _) = newton_on_section(guess.y, guess.py, energy, prev.model, opts)?;
    let family = classify(&s0, prev.model, opts.t_max, &opts.integrator)?;
    if family != prev.family {
        return Err(Error::WrongFamily {
            requested: prev.family,
            found: family,
        });
    }
    let rec = finish_record(s0, family, energy, prev.model, opts)?;
    if rec.residual >= 1e-9 {
        return Err(Error::NoConvergence {
            iterations: opts.max_iterations,
            residual: rec.residual,
        });
    }
    // a jump to a different orbit of the same family shows up as a jump in
    // the period
    let jump = (rec.period - prev.period).abs() / prev.period;
    if jump > 0.5 {
        return Err(Error::Geometry(format!(
            "period jumped from {} to {} between energies {} and {energy}",
            prev.period, rec.period, prev.energy
        )));
    }
    Ok(rec)
}

/// Writes the family table as CSV
/// `family,energy,period,action,lyapunov,trace_reduced,residual`.
pub fn write_family_csv<W: Write>(w: &mut W, records: &[OrbitRecord]) -> std::io::Result<()> {
    writeln!(w, "family,energy,period,action,lyapunov,trace_reduced,residual")?;
    for r in records {
        writeln!(
            w,
            "{},{},{:.15e},{:.15e},{:.15e},{:.15e},{:.3e}",
            r.family, r.energy, r.period, r.action, r.lyapunov, r.trace_reduced, r.residual
        )?;
    }
    Ok(())
}
