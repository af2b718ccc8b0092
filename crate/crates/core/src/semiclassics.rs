//! Contribution of the B orbit to the symmetry-projected level density,
//! its resonance maxima, and the matching of those maxima to scarred
//! states.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::PotentialModel;
use crate::orbits::FamilyCurve;
use crate::spectra::{weyl_density, IrrepLabel, ScarScore};

/// Per-irrep orbit parameters entering the resonance sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceParams {
    pub period: f64,
    pub action: f64,
    /// Stability exponent `alpha`.
    pub alpha: f64,
    /// Resonances sit at `action / eta = 2 pi (k + k_shift + 1/2)`.
    pub k_shift: f64,
}

impl TraceParams {
    /// Maps the full-orbit period, action and `lambda T` onto `irrep`.
    pub fn for_irrep(irrep: IrrepLabel, period: f64, action: f64, lambda_t: f64) -> Self {
        match irrep {
            IrrepLabel::A1 => Self {
                period: period / 2.0,
                action: action / 2.0,
                alpha: lambda_t / 2.0,
                k_shift: 0.0,
            },
            IrrepLabel::A2 => Self {
                period: period / 2.0,
                action: action / 2.0,
                alpha: lambda_t / 2.0,
                k_shift: -0.5,
            },
            IrrepLabel::E => Self {
                period: 2.0 * period,
                action,
                alpha: lambda_t,
                k_shift: 0.5,
            },
        }
    }

    /// Same orbit with the resonance comb moved by `shift` in `k`.
    pub fn with_phase_shift(self, shift: f64) -> Self {
        Self {
            k_shift: self.k_shift + shift,
            ..self
        }
    }

    /// Phase `action / eta - 2 pi (k_shift + 1/2)`; resonance `k` sits where
    /// it equals `2 pi k`.
    fn phase(&self, eta: f64) -> f64 {
        self.action / eta - 2.0 * PI * (self.k_shift + 0.5)
    }

    /// `sum_k 1 / ([S/eta - 2 pi (k + k_shift + 1/2)]^2 + (alpha/2)^2)`, with
    /// the sum cut once new terms fall below `1e-12` of the running total.
    pub fn resonance_sum(&self, eta: f64) -> f64 {
        let x = self.phase(eta);
        let b2 = 0.25 * self.alpha * self.alpha;
        let term = |k: f64| {
            let d = x - 2.0 * PI * k;
            1.0 / (d * d + b2)
        };
        let k0 = (x / (2.0 * PI)).round();
        let mut total = term(k0);
        let mut j = 1.0;
        loop {
            let t = term(k0 + j) + term(k0 - j);
            total += t;
            if t < 1e-12 * total {
                break;
            }
            j += 1.0;
        }
        total
    }

    /// The same sum in closed form, `sinh b / (2 b (cosh b - cos x))` with
    /// `b = alpha / 2`.
    pub fn resonance_sum_closed(&self, eta: f64) -> f64 {
        let x = self.phase(eta);
        let b = 0.5 * self.alpha;
        b.sinh() / (2.0 * b * (b.cosh() - x.cos()))
    }

    /// `Delta n = (T / (2 pi eta)) (alpha * sum - 1)`.
    pub fn delta_n(&self, eta: f64) -> f64 {
        delta_n_from_sum(self.period, self.alpha, eta, self.resonance_sum(eta))
    }

    /// Resonance index of the comb tooth nearest to this action.
    pub fn nearest_k(&self, eta: f64) -> i64 {
        (self.phase(eta) / (2.0 * PI)).round() as i64
    }
}

pub fn delta_n_from_sum(period: f64, alpha: f64, eta: f64, sum: f64) -> f64 {
    period / (2.0 * PI * eta) * (alpha * sum - 1.0)
}

/// Irrep parameters of the B family at `energy`.
pub fn trace_params(energy: f64, irrep: IrrepLabel, curve: &FamilyCurve) -> Result<TraceParams> {
    Ok(TraceParams::for_irrep(
        irrep,
        curve.period_at(energy)?,
        curve.action_at(energy)?,
        curve.stability_exponent_at(energy)?,
    ))
}

pub fn trace_contribution(energy: f64, irrep: IrrepLabel, curve: &FamilyCurve, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    Ok(trace_params(energy, irrep, curve)?.delta_n(eta))
}

/// `Delta n` sampled over an energy grid, with its maxima.
#[derive(Debug, Clone, Serialize)]
pub struct TraceResonanceCurve {
    pub irrep: IrrepLabel,
    pub eta: f64,
    pub energies: Vec<f64>,
    pub delta_n: Vec<f64>,
    pub params: Vec<TraceParams>,
    /// `(peak energy, k)`.
    pub maxima: Vec<(f64, i64)>,
}

impl TraceResonanceCurve {
    pub fn peak_energies(&self) -> Vec<f64> {
        self.maxima.iter().map(|m| m.0).collect()
    }
}

/// Samples `Delta n` on `points` equally spaced energies of `window` and
/// locates its maxima. `phase_shift` moves the resonance comb (zero for the
/// physical curve).
pub fn resonance_curve(
    curve: &FamilyCurve,
    irrep: IrrepLabel,
    eta: f64,
    window: (f64, f64),
    points: usize,
    phase_shift: f64,
) -> Result<TraceResonanceCurve> {
    if points < 3 || !(window.1 > window.0) {
        return Err(Error::InvalidParameter(format!("need at least 3 points over a nonempty window, got {points} on {window:?}")));
    }
    let energies: Vec<f64> = (0..points)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (points - 1) as f64)
        .collect();
    let params = energies
        .iter()
        .map(|&e| Ok(trace_params(e, irrep, curve)?.with_phase_shift(phase_shift)))
        .collect::<Result<Vec<_>>>()?;
    let delta_n: Vec<f64> = params.iter().map(|p| p.delta_n(eta)).collect();
    let samples: Vec<(f64, f64)> = energies.iter().copied().zip(delta_n.iter().copied()).collect();
    let maxima = resonance_peaks(&samples)
        .into_iter()
        .map(|e| {
            let p = trace_params(e, irrep, curve).map(|p| p.with_phase_shift(phase_shift));
            p.map(|p| (e, p.nearest_k(eta)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceResonanceCurve {
        irrep,
        eta,
        energies,
        delta_n,
        params,
        maxima,
    })
}

/// Interior local maxima of `(x, y)` samples, refined by a parabola through
/// the three samples around each, keeping those whose prominence reaches 10%
/// of the largest prominence.
pub fn resonance_peaks(samples: &[(f64, f64)]) -> Vec<f64> {
    let n = samples.len();
    if n < 3 {
        return Vec::new();
    }
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let mut found = Vec::new();
    for i in 1..n - 1 {
        // plateaus count once, at their left end
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            found.push((i, prominence(&y, i)));
        }
    }
    let best = found.iter().map(|f| f.1).fold(0.0, f64::max);
    found
        .into_iter()
        .filter(|f| f.1 >= 0.1 * best)
        .map(|(i, _)| parabolic_vertex(samples[i - 1], samples[i], samples[i + 1]))
        .collect()
}

/// Height of peak `i` above the higher of the two lowest points separating
/// it from higher ground (or the ends) on either side.
fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left = h;
    for &v in y[..i].iter().rev() {
        if v > h {
            break;
        }
        left = left.min(v);
    }
    let mut right = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    h - left.max(right)
}

fn parabolic_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curv = (d1 - d0) / (x2 - x0);
    if curv >= 0.0 {
        return x1;
    }
    let x = 0.5 * (x0 + x1) - d0 / (2.0 * curv);
    x.clamp(x0, x2)
}

/// Energies in `window` where the irrep action meets the comb,
/// `S_rho(eps) = 2 pi eta (k + k_shift + 1/2)`, by bisection on the action
/// interpolant. Returns `(energy, k)`.
pub fn resonance_energies(
    curve: &FamilyCurve,
    irrep: IrrepLabel,
    eta: f64,
    window: (f64, f64),
    phase_shift: f64,
) -> Result<Vec<(f64, i64)>> {
    let at = |e: f64| trace_params(e, irrep, curve).map(|p| p.with_phase_shift(phase_shift));
    let (lo, hi) = (at(window.0)?, at(window.1)?);
    // the action increases with energy (dS/dE = T > 0)
    let x_lo = lo.phase(eta) / (2.0 * PI);
    let x_hi = hi.phase(eta) / (2.0 * PI);
    let mut out = Vec::new();
    for k in x_lo.ceil() as i64..=x_hi.floor() as i64 {
        let f = |e: f64| at(e).map(|p| p.phase(eta) / (2.0 * PI) - k as f64);
        let (mut a, mut b) = window;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m)? < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        out.push((0.5 * (a + b), k));
    }
    Ok(out)
}

/// Mean spacing of distinct `irrep` levels at `energy` (E pairs counted
/// once) from the leading Weyl density.
pub fn mean_level_spacing(energy: f64, irrep: IrrepLabel, model: PotentialModel, eta: f64) -> f64 {
    irrep.degeneracy() as f64 / weyl_density(energy, irrep, model, eta)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScarMatch {
    pub energy: f64,
    pub index: usize,
    pub score: f64,
    pub peak: f64,
    /// `(energy - peak) / mean spacing`.
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub irrep: IrrepLabel,
    pub threshold: f64,
    pub matches: Vec<ScarMatch>,
    /// Index steps between consecutive scarred states.
    pub delta_nu: Vec<i64>,
}

impl MatchReport {
    pub fn max_offset(&self) -> f64 {
        self.matches.iter().map(|m| m.offset.abs()).fold(0.0, f64::max)
    }

    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "irrep {} threshold {:.6}", self.irrep, self.threshold)?;
        writeln!(w, "energy,index,score,peak,offset")?;
        for m in &self.matches {
            writeln!(w, "{:.10},{},{:.6},{:.10},{:+.4}", m.energy, m.index, m.score, m.peak, m.offset)?;
        }
        let steps: Vec<String> = self.delta_nu.iter().map(|d| d.to_string()).collect();
        writeln!(w, "delta_nu {}", steps.join(" "))
    }
}

/// Score at the top-decile boundary: the `ceil(n / 10)` best states reach it.
pub fn top_decile_threshold(scores: &[ScarScore]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut s: Vec<f64> = scores.iter().map(|s| s.score).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Some(s[scores.len().div_ceil(10) - 1])
}

/// Matches the states scoring at least `threshold` (top decile when `None`)
/// to their nearest peak. `spacing` gives the mean level spacing at an
/// energy.
pub fn match_scarred_states(
    peaks: &[f64],
    scores: &[ScarScore],
    threshold: Option<f64>,
    spacing: impl Fn(f64) -> f64,
) -> Result<MatchReport> {
    let empty = || Error::EmptyWindow {
        lo: scores.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min),
        hi: scores.iter().map(|s| s.energy).fold(f64::NEG_INFINITY, f64::max),
    };
    let threshold = match threshold {
        Some(t) => t,
        None => top_decile_threshold(scores).ok_or_else(empty)?,
    };
    if peaks.is_empty() {
        return Err(empty());
    }
    let irrep = scores.first().ok_or_else(empty)?.irrep;
    let mut scarred: Vec<&ScarScore> = scores.iter().filter(|s| s.score >= threshold).collect();
    if scarred.is_empty() {
        return Err(empty());
    }
    scarred.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    let matches: Vec<ScarMatch> = scarred
        .iter()
        .map(|s| {
            let peak = peaks
                .iter()
                .copied()
                .min_by(|a, b| (a - s.energy).abs().partial_cmp(&(b - s.energy).abs()).unwrap())
                .unwrap();
            ScarMatch {
                energy: s.energy,
                index: s.index,
                score: s.score,
                peak,
                offset: (s.energy - peak) / spacing(s.energy),
            }
        })
        .collect();
    let delta_nu = matches.windows(2).map(|w| w[1].index as i64 - w[0].index as i64).collect();
    Ok(MatchReport {
        irrep,
        threshold,
        matches,
        delta_nu,
    })
}

/// CSV `irrep,energy,delta_n`.
pub fn write_delta_n_csv<W: Write>(w: &mut W, curves: &[TraceResonanceCurve]) -> std::io::Result<()> {
    writeln!(w, "irrep,energy,delta_n")?;
    for c in curves {
        for (e, d) in c.energies.iter().zip(&c.delta_n) {
            writeln!(w, "{},{:.12e},{:.12e}", c.irrep, e, d)?;
        }
    }
    Ok(())
}

/// CSV `irrep,peak_energy,k`.
pub fn write_peaks_csv<W: Write>(w: &mut W, curves: &[TraceResonanceCurve]) -> std::io::Result<()> {
    writeln!(w, "irrep,peak_energy,k")?;
    for c in curves {
        for (e, k) in &c.maxima {
            writeln!(w, "{},{:.12e},{}", c.irrep, e, k)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let (t, s, lt) = (3.0, 5.0, 0.8);
        let a1 = TraceParams::for_irrep(IrrepLabel::A1, t, s, lt);
        let a2 = TraceParams::for_irrep(IrrepLabel::A2, t, s, lt);
        let e = TraceParams::for_irrep(IrrepLabel::E, t, s, lt);
        assert_eq!((a1.period, a1.action, a1.alpha, a1.k_shift), (1.5, 2.5, 0.4, 0.0));
        assert_eq!((a2.period, a2.action, a2.alpha, a2.k_shift), (1.5, 2.5, 0.4, -0.5));
        assert_eq!((e.period, e.action, e.alpha, e.k_shift), (6.0, 5.0, 0.8, 0.5));
    }

    #[test]
    fn truncated_sum_matches_closed_form() {
        for &(s, alpha) in &[(1.234, 0.44), (7.77, 1.4), (0.5, 0.05), (3.0, 3.0)] {
            let p = TraceParams {
                period: 1.0,
                action: s,
                alpha,
                k_shift: 0.0,
            };
            for eta in [0.01, 0.0016] {
                let (a, b) = (p.resonance_sum(eta), p.resonance_sum_closed(eta));
                assert!((a / b - 1.0).abs() < 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn baseline_far_from_resonance() {
        let p = TraceParams {
            period: 2.5,
            action: 0.3 + 2.0 * PI * 0.01 * 40.0,
            alpha: 1e-12,
            k_shift: 0.0,
        };
        let eta = 0.01;
        let base = -p.period / (2.0 * PI * eta);
        assert!(((p.delta_n(eta) - base) / base).abs() < 1e-8);
        assert_eq!(delta_n_from_sum(2.5, 0.4, eta, 0.0), base);
    }

    #[test]
    fn peaks_of_a_sampled_comb() {
        let xs: Vec<(f64, f64)> = (0..2001)
            .map(|i| {
                let x = i as f64 / 2000.0 * 10.0;
                (x, (2.0 * PI * x / 2.5).cos() + 0.002 * (40.0 * x).sin().powi(2))
            })
            .collect();
        let peaks = resonance_peaks(&xs);
        assert_eq!(peaks.len(), 3, "{peaks:?}");
        for (p, want) in peaks.iter().zip([2.5, 5.0, 7.5]) {
            assert!((p - want).abs() < 3e-2);
        }
    }

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let f = |x: f64| -3.0 * (x - 0.37).powi(2) + 1.0;
        let v = parabolic_vertex((0.3, f(0.3)), (0.35, f(0.35)), (0.4, f(0.4)));
        assert!((v - 0.37).abs() < 1e-12);
    }

    #[test]
    fn top_decile_and_matching() {
        let scores: Vec<ScarScore> = (0..20)
            .map(|i| ScarScore {
                energy: 1.0 + 0.1 * i as f64,
                index: 100 + i,
                irrep: IrrepLabel::A1,
                tube_radius: 0.1,
                score: if i == 4 || i == 14 { 3.0 } else { 1.0 },
            })
            .collect();
        assert_eq!(top_decile_threshold(&scores), Some(3.0));
        let r = match_scarred_states(&[1.42, 2.35], &scores, None, |_| 0.1).unwrap();
        assert_eq!(r.matches.len(), 2);
        assert!((r.matches[0].offset + 0.2).abs() < 1e-9);
        assert!((r.matches[1].offset - 0.5).abs() < 1e-9);
        assert_eq!(r.delta_nu, vec![10]);
        assert!(matches!(match_scarred_states(&[1.0], &[], None, |_| 0.1), Err(Error::EmptyWindow { .. })));
    }
}
