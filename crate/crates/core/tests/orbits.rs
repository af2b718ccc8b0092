use std::f64::consts::PI;

use proptest::prelude::*;
use scarlab::dynamics::IntegratorOptions;
use scarlab::hamiltonians::SymmetryOp;
use scarlab::orbits::{continue_family, find_orbit, orbit_action, periodicity_residual, symmetry_images, Family, RefineOptions};
use scarlab::PotentialModel;

#[test]
fn rotated_images_are_periodic_with_the_same_invariants() {
    let opts = RefineOptions::default();
    let b = find_orbit(Family::B, 7.0, PotentialModel::Ring, &opts).unwrap();
    let tr = |m: &[[f64; 4]; 4]| (0..4).map(|i| m[i][i]).sum::<f64>();
    for img in symmetry_images(&b) {
        assert!(periodicity_residual(&img, &opts.integrator).unwrap() < 1e-9);
        assert!((tr(&img.monodromy) - tr(&b.monodromy)).abs() < 1e-8 * tr(&b.monodromy).abs());
        let s = orbit_action(&img, &opts.integrator).unwrap();
        assert!((s - b.action).abs() < 1e-9 * b.action);
    }
}

#[test]
fn small_orbits_approach_the_harmonic_limit() {
    // near O every orbit has T -> 2 pi / omega and S -> eps T, with
    // corrections linear in eps
    let opts = RefineOptions::default();
    for model in [PotentialModel::Ring, PotentialModel::HenonHeiles] {
        let e = if model == PotentialModel::Ring { 1e-4 } else { 1e-3 };
        let t0 = 2.0 * PI / model.origin_frequency();
        let dev = |e: f64| {
            let b = find_orbit(Family::B, e, model, &opts).unwrap();
            assert!((b.action / (e * t0) - 1.0).abs() < 0.05, "{model:?}: S = {} at {e}", b.action);
            (b.period / t0 - 1.0).abs()
        };
        let (near, far) = (dev(e), dev(10.0 * e));
        assert!(near < 0.01, "{model:?}: period off by {near}");
        assert!(near < far / 5.0, "{model:?}: {near} at {e} vs {far} at {}", 10.0 * e);
    }
}

#[test]
fn action_derivative_is_the_period() {
    let opts = RefineOptions::default();
    let seed = find_orbit(Family::B, 0.1, PotentialModel::HenonHeiles, &opts).unwrap();
    let h = 5e-4;
    let curve = continue_family(&seed, &[0.1 - h, 0.1, 0.1 + h], &opts).unwrap();
    let r = &curve.records;
    let ds = (r[2].action - r[0].action) / (2.0 * h);
    assert!((ds / r[1].period - 1.0).abs() < 1e-4, "{ds} vs {}", r[1].period);
    // the interpolant agrees with the grid records
    assert!((curve.period_at(0.1).unwrap() - r[1].period).abs() < 1e-12);
}

#[test]
fn action_integral_matches_the_record() {
    let opts = RefineOptions::default();
    for fam in [Family::A, Family::B, Family::C] {
        let rec = find_orbit(fam, 5.0, PotentialModel::Ring, &opts).unwrap();
        let s = orbit_action(&rec, &IntegratorOptions::default()).unwrap();
        assert!((s / rec.action - 1.0).abs() < 1e-9, "{fam}: {s} vs {}", rec.action);
        assert_eq!(rec.family, fam);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potentials_are_c3v_invariant(r in 0.0f64..0.5, th in 0.0f64..(2.0 * PI), k in 0u8..3, refl: bool) {
        let (x, y) = (r * th.cos(), r * th.sin());
        let g = SymmetryOp { rotation: k, reflect: refl };
        let [gx, gy] = g.apply([x, y]);
        for model in [PotentialModel::Ring, PotentialModel::HenonHeiles] {
            let (a, b) = (model.value(x, y).unwrap(), model.value(gx, gy).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
