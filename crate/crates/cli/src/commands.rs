use std::collections::BTreeMap;
use std::io::Write;

use scarlab::dynamics::{poincare_section, write_sos_csv, IntegratorOptions};
use scarlab::orbits::{
    continue_family, continue_family_partial, find_orbit, orbit_path, write_family_csv, write_path_csv, Family, FamilyCurve,
    RefineOptions,
};
use scarlab::semiclassics::{
    match_scarred_states, mean_level_spacing, resonance_curve, write_delta_n_csv, write_peaks_csv, TraceResonanceCurve,
};
use scarlab::spectra::{
    build_domain, solve_eigenpairs_with, unfold_density, weyl_count, write_eigenpair_csv, DiscretizedDomain, EigenPair,
    IrrepLabel, ScarScore, ScarScorer, ScarTube, SolverOptions,
};
use scarlab::PotentialModel;

use crate::config::{SeedSpec, Settings};
use crate::output::{recorded_hash, Context};
use crate::CliError;

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round().max(0.0) as usize;
    if n == 0 {
        return vec![lo];
    }
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

pub fn orbits(s: &Settings, ctx: &Context, paths: bool) -> Result<(), CliError> {
    let (emin, emax) = match (s.emin, s.emax) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Config("orbits needs emin and emax".into())),
    };
    let de = s.de.unwrap_or((emax - emin) / 40.0).max(f64::MIN_POSITIVE);
    let energies = grid(emin, emax, de);
    let seed_energy = s.seed_energy.unwrap_or(energies[energies.len() / 2]);
    let opts = RefineOptions::default();
    let seed = find_orbit(s.family, seed_energy, s.model, &opts).map_err(|e| {
        log::error!("no {} orbit converged at the seed energy {seed_energy}; no energy reached", s.family);
        CliError::Numerical(e)
    })?;
    let cont = continue_family_partial(&seed, &energies, &opts);
    let header = ctx.header(s, &format!("family={}", s.family));
    ctx.create(&format!("family_{}_{}.csv", s.model, s.family), &header)?
        .body(|w| write_family_csv(w, &cont.records))?;
    if paths {
        for (i, rec) in cont.records.iter().enumerate() {
            let path = orbit_path(rec, 1000, &opts.integrator).map_err(CliError::Numerical)?;
            let h = ctx.header(s, &format!("family={} energy={} period={:.12}", s.family, rec.energy, rec.period));
            ctx.create(&format!("orbit_{}_{}_{i:03}.csv", s.model, s.family), &h)?
                .body(|w| write_path_csv(w, &path))?;
        }
    }
    if let Some(e) = cont.failure {
        log::error!("{e}");
        return Err(CliError::Numerical(e));
    }
    Ok(())
}

/// Allowed `y` interval on the line `x = 0` at `energy`, bounded part only.
fn section_interval(model: PotentialModel, energy: f64) -> (f64, f64) {
    let allowed = |y: f64| model.value(0.0, y).is_some_and(|v| v < energy);
    let edge = |dir: f64| {
        let step = 1e-3;
        let mut y = 0.0;
        while allowed(y + dir * step) {
            y += dir * step;
        }
        let (mut a, mut b) = (y, y + dir * step);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if allowed(m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    (edge(-1.0), edge(1.0))
}

pub fn sos(s: &Settings, ctx: &Context) -> Result<(), CliError> {
    let energy = s.energy.ok_or_else(|| CliError::Config("sos needs an energy".into()))?;
    let seeds: Vec<(f64, f64)> = match &s.seeds {
        SeedSpec::List(v) => v.clone(),
        SeedSpec::Grid { ny, npy } => {
            let (lo, hi) = section_interval(s.model, energy);
            let c = s.model.kinetic_prefactor();
            let mut v = Vec::with_capacity(ny * npy);
            for i in 0..*ny {
                let y = lo + (hi - lo) * (i as f64 + 0.5) / *ny as f64;
                let pmax = ((energy - s.model.value(0.0, y).unwrap()) / c).sqrt();
                for j in 0..*npy {
                    v.push((y, 0.999 * pmax * (-1.0 + 2.0 * (j as f64 + 0.5) / *npy as f64)));
                }
            }
            v
        }
    };
    let records = poincare_section(energy, &seeds, s.crossings, s.model, &IntegratorOptions::default()).map_err(|e| match e {
        scarlab::Error::Seed { .. } => CliError::Config(e.to_string()),
        e => CliError::Numerical(e),
    })?;
    for (i, r) in records.iter().enumerate() {
        if let Some(why) = &r.stopped {
            log::warn!("seed {i} stopped after {} crossings: {why}", r.crossings.len());
        }
    }
    let header = ctx.header(s, &format!("energy={energy} seeds={} crossings={}", seeds.len(), s.crossings));
    ctx.create(&format!("sos_{}_{energy}.csv", s.model), &header)?
        .body(|w| write_sos_csv(w, &records))?;
    Ok(())
}

fn solver_options(s: &Settings) -> SolverOptions {
    SolverOptions {
        check_doubled: s.check_doubled,
        ..Default::default()
    }
}

fn domain(s: &Settings, irrep: IrrepLabel) -> Result<DiscretizedDomain, CliError> {
    let d = build_domain(irrep, s.require_eta()?, s.require_window()?, s.model, &s.domain).map_err(|e| match e {
        scarlab::Error::Resolution { .. } | scarlab::Error::Geometry(_) | scarlab::Error::InvalidParameter(_) => {
            CliError::Config(e.to_string())
        }
        e => CliError::Numerical(e),
    })?;
    log::info!("{irrep}: {}", d.describe_mesh());
    Ok(d)
}

pub fn spectrum(s: &Settings, ctx: &Context, levels_only: bool) -> Result<(), CliError> {
    let eta = s.require_eta()?;
    let window = s.require_window()?;
    for &irrep in &s.irreps {
        let d = domain(s, irrep)?;
        let mut levels: Vec<(usize, f64, f64)> = Vec::new();
        let mut io_err = None;
        let head = ctx.header(s, &format!("irrep={irrep}"));
        solve_eigenpairs_with(&d, window, &solver_options(s), |p| {
            levels.push((p.index, p.energy, p.residual));
            if !levels_only && io_err.is_none() {
                let r = ctx
                    .create(&format!("states_{}_{irrep}/state_{:05}.csv", s.model, p.index), &head)
                    .and_then(|f| f.body(|w| write_eigenpair_csv(w, &d, &p)));
                io_err = r.err();
            }
            Ok(())
        })
        .map_err(CliError::Numerical)?;
        if let Some(e) = io_err {
            return Err(e);
        }
        let header = ctx.header(s, &format!("irrep={irrep} window={}:{} {}", window.0, window.1, d.describe_mesh()));
        ctx.create(&format!("levels_{}_{irrep}.csv", s.model), &header)?.body(|w| {
            writeln!(w, "irrep,index,energy,residual,weyl_count")?;
            for (i, e, r) in &levels {
                writeln!(w, "{irrep},{i},{e:.15e},{r:.3e},{:.6}", weyl_count(*e, irrep, s.model, eta))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// B family over `window`, padded a little so the ends can be interpolated.
fn family_curve(s: &Settings, window: (f64, f64)) -> Result<FamilyCurve, CliError> {
    let pad = 0.05 * (window.1 - window.0);
    let hi = (window.1 + pad).min(0.999 * s.model.escape_energy());
    let lo = (window.0 - pad).max(0.5 * window.0);
    let energies = grid(lo, hi, (hi - lo) / 24.0);
    let opts = RefineOptions::default();
    let seed = find_orbit(Family::B, energies[12], s.model, &opts).map_err(CliError::Numerical)?;
    continue_family(&seed, &energies, &opts).map_err(CliError::Numerical)
}

fn tube(s: &Settings, curve: &FamilyCurve, window: (f64, f64)) -> Result<ScarTube, CliError> {
    let opts = RefineOptions::default();
    let orbit = curve.orbit_at(0.5 * (window.0 + window.1), &opts).map_err(CliError::Numerical)?;
    ScarTube::around_orbit(&orbit, s.tube_radius, s.tube_samples, &opts.integrator).map_err(CliError::Numerical)
}

const SCORE_COLUMNS: &str = "irrep,index,energy,score,tube_radius";

fn scores_name(s: &Settings, irrep: IrrepLabel) -> String {
    format!("scores_{}_{irrep}.csv", s.model)
}

/// Scores every state of the window and writes the scores together with
/// density rasters of the top-decile states.
fn score_irrep(s: &Settings, ctx: &Context, irrep: IrrepLabel, tube: &ScarTube) -> Result<Vec<ScarScore>, CliError> {
    let eta = s.require_eta()?;
    let window = s.require_window()?;
    let d = domain(s, irrep)?;
    let scorer = ScarScorer::new(&d, tube);
    // keep enough of the best states to cover the top decile
    let expected = (weyl_count(window.1, irrep, s.model, eta) - weyl_count(window.0, irrep, s.model, eta)) / irrep.degeneracy() as f64;
    let keep = (expected / 10.0).ceil() as usize + 3;
    let mut best: BTreeMap<(u64, usize), EigenPair> = BTreeMap::new();
    let mut scores = Vec::new();
    solve_eigenpairs_with(&d, window, &solver_options(s), |p| {
        let sc = scorer.score(&p);
        best.insert((sc.score.to_bits(), p.index), p);
        if best.len() > keep {
            best.pop_first();
        }
        scores.push(sc);
        Ok(())
    })
    .map_err(CliError::Numerical)?;

    let header = ctx.header(s, &format!("irrep={irrep} window={}:{} tube_radius={}", window.0, window.1, s.tube_radius));
    ctx.create(&scores_name(s, irrep), &header)?.body(|w| {
        writeln!(w, "{SCORE_COLUMNS}")?;
        for sc in &scores {
            writeln!(w, "{irrep},{},{:.15e},{:.10},{}", sc.index, sc.energy, sc.score, sc.tube_radius)?;
        }
        Ok(())
    })?;
    if let Some(th) = scarlab::semiclassics::top_decile_threshold(&scores) {
        for ((bits, index), pair) in &best {
            if f64::from_bits(*bits) < th {
                continue;
            }
            let raster = unfold_density(&d, pair).raster_default(s.raster, s.raster);
            let h = ctx.header(s, &format!("irrep={irrep} index={index} energy={:.15e} score={:.6}", pair.energy, f64::from_bits(*bits)));
            ctx.create(&format!("density_{}_{irrep}_{index:05}.csv", s.model), &h)?
                .body(|w| raster.write_csv(w))?;
        }
    }
    Ok(scores)
}

fn read_scores(path: &std::path::Path) -> Option<Vec<ScarScore>> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next()? != SCORE_COLUMNS {
        return None;
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some(ScarScore {
                irrep: f.first()?.parse().ok()?,
                index: f.get(1)?.parse().ok()?,
                energy: f.get(2)?.parse().ok()?,
                score: f.get(3)?.parse().ok()?,
                tube_radius: f.get(4)?.parse().ok()?,
            })
        })
        .collect()
}

pub fn scar(s: &Settings, ctx: &Context) -> Result<(), CliError> {
    let window = s.require_window()?;
    s.require_eta()?;
    let curve = family_curve(s, window)?;
    let tube = tube(s, &curve, window)?;
    for &irrep in &s.irreps {
        score_irrep(s, ctx, irrep, &tube)?;
    }
    Ok(())
}

fn trace_curves(s: &Settings, curve: &FamilyCurve) -> Result<Vec<TraceResonanceCurve>, CliError> {
    let eta = s.require_eta()?;
    let window = s.require_window()?;
    s.irreps
        .iter()
        .map(|&irrep| resonance_curve(curve, irrep, eta, window, s.trace_points, 0.0).map_err(CliError::Numerical))
        .collect()
}

fn write_trace(s: &Settings, ctx: &Context, curves: &[TraceResonanceCurve]) -> Result<(), CliError> {
    let header = ctx.header(s, "");
    ctx.create(&format!("delta_n_{}.csv", s.model), &header)?
        .body(|w| write_delta_n_csv(w, curves))?;
    ctx.create(&format!("peaks_{}.csv", s.model), &header)?
        .body(|w| write_peaks_csv(w, curves))?;
    Ok(())
}

pub fn trace(s: &Settings, ctx: &Context) -> Result<(), CliError> {
    let curve = family_curve(s, s.require_window()?)?;
    let curves = trace_curves(s, &curve)?;
    write_trace(s, ctx, &curves)
}

pub fn report(s: &Settings, ctx: &Context) -> Result<(), CliError> {
    let eta = s.require_eta()?;
    let window = s.require_window()?;
    let curve = family_curve(s, window)?;
    let curves = trace_curves(s, &curve)?;
    write_trace(s, ctx, &curves)?;
    let mut tube_cache = None;
    for (&irrep, tc) in s.irreps.iter().zip(&curves) {
        let path = ctx.out_dir.join(scores_name(s, irrep));
        let reused = match recorded_hash(&path) {
            Some(h) if h == ctx.hash => read_scores(&path),
            _ => None,
        };
        let scores = match reused {
            Some(v) => {
                log::info!("{irrep}: reusing scores from {}", path.display());
                v
            }
            None => {
                if tube_cache.is_none() {
                    tube_cache = Some(tube(s, &curve, window)?);
                }
                score_irrep(s, ctx, irrep, tube_cache.as_ref().unwrap())?
            }
        };
        let rep = match_scarred_states(&tc.peak_energies(), &scores, None, |e| mean_level_spacing(e, irrep, s.model, eta))
            .map_err(CliError::Numerical)?;
        log::info!("{irrep}: {} scarred states, largest offset {:.3} mean spacings", rep.matches.len(), rep.max_offset());
        let header = ctx.header(s, &format!("irrep={irrep} window={}:{}", window.0, window.1));
        ctx.create(&format!("match_{}_{irrep}.txt", s.model), &header)?
            .body(|w| rep.write_text(w))?;
    }
    Ok(())
}
