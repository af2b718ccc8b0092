use std::f64::consts::PI;

use scarlab::orbits::{continue_family, find_orbit, Family, FamilyCurve, RefineOptions};
use scarlab::semiclassics::{resonance_curve, resonance_energies, trace_params};
use scarlab::spectra::IrrepLabel;
use scarlab::PotentialModel;

const ETA: f64 = 0.01;
const WINDOW: (f64, f64) = (6.5, 7.5);

fn ring_b() -> FamilyCurve {
    let opts = RefineOptions::default();
    let seed = find_orbit(Family::B, 7.0, PotentialModel::Ring, &opts).unwrap();
    let grid: Vec<f64> = (0..=12).map(|i| 6.25 + 0.125 * i as f64).collect();
    continue_family(&seed, &grid, &opts).unwrap()
}

#[test]
fn comb_roots_are_spaced_by_two_pi_eta_in_action() {
    let curve = ring_b();
    for irrep in IrrepLabel::ALL {
        let roots = resonance_energies(&curve, irrep, ETA, WINDOW, 0.0).unwrap();
        assert!(roots.len() > 3);
        let s: Vec<f64> = roots.iter().map(|r| trace_params(r.0, irrep, &curve).unwrap().action).collect();
        for (w, k) in s.windows(2).zip(roots.windows(2)) {
            assert_eq!(k[1].1, k[0].1 + 1);
            assert!((w[1] - w[0] - 2.0 * PI * ETA).abs() < 1e-10, "{irrep}: {}", w[1] - w[0]);
        }
        let p = trace_params(roots[0].0, irrep, &curve).unwrap();
        let want = 2.0 * PI * ETA * (roots[0].1 as f64 + p.k_shift + 0.5);
        assert!((p.action - want).abs() < 1e-10);
    }
}

#[test]
fn maxima_sit_on_the_comb() {
    let curve = ring_b();
    for irrep in IrrepLabel::ALL {
        let peaks = resonance_curve(&curve, irrep, ETA, WINDOW, 4001, 0.0).unwrap();
        let roots = resonance_energies(&curve, irrep, ETA, WINDOW, 0.0).unwrap();
        for &(e, k) in &peaks.maxima {
            let r = roots.iter().find(|r| r.1 == k).unwrap();
            assert!((e - r.0).abs() < 1e-4, "{irrep} k = {k}: {e} vs {}", r.0);
        }
        assert!(peaks.maxima.len() + 1 >= roots.len());
    }
}

#[test]
fn e_comb_is_the_union_of_a1_and_a2() {
    // E resonances at S = 2 pi eta m, A1 at odd m, A2 at even m
    let curve = ring_b();
    let roots = |irrep| resonance_energies(&curve, irrep, ETA, WINDOW, 0.0).unwrap();
    let mut a: Vec<f64> = roots(IrrepLabel::A1).into_iter().chain(roots(IrrepLabel::A2)).map(|r| r.0).collect();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let e: Vec<f64> = roots(IrrepLabel::E).into_iter().map(|r| r.0).collect();
    assert_eq!(a.len(), e.len());
    for (x, y) in a.iter().zip(&e) {
        assert!((x - y).abs() < 1e-9);
    }
    let a1 = roots(IrrepLabel::A1);
    let a2 = roots(IrrepLabel::A2);
    let lo = a1[0].0.min(a2[0].0);
    let mut merged: Vec<(f64, char)> = a1.iter().map(|r| (r.0, '1')).chain(a2.iter().map(|r| (r.0, '2'))).collect();
    merged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    assert_eq!(merged[0].0, lo);
    assert!(merged.windows(2).all(|w| w[0].1 != w[1].1), "A1 and A2 teeth alternate");
}

#[test]
fn half_shifted_comb_falls_between_the_teeth() {
    // shifting the E comb by a half period puts its roots midway between
    // the physical ones, far outside half a tooth spacing of any of them
    let curve = ring_b();
    let good = resonance_energies(&curve, IrrepLabel::E, ETA, WINDOW, 0.0).unwrap();
    let bad = resonance_energies(&curve, IrrepLabel::E, ETA, WINDOW, -0.5).unwrap();
    let tooth = good[1].0 - good[0].0;
    for (e, _) in &bad {
        let d = good.iter().map(|g| (g.0 - e).abs()).fold(f64::INFINITY, f64::min);
        assert!(d > 0.4 * tooth, "{e}: {d} vs tooth {tooth}");
    }
}
