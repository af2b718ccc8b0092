//! Leading-order (Thomas-Fermi) level counting, projected onto the irreps.

use std::f64::consts::PI;

use super::domain::turning_radius;
use super::quadrature::gauss_legendre;
use super::IrrepLabel;
use crate::hamiltonians::PotentialModel;

const ANGULAR_POINTS: usize = 64;
const RADIAL_POINTS: usize = 48;

/// `integral f(x, y, r) r dr dtheta` over the allowed part of the reduced
/// sector, times six.
fn allowed_integral(model: PotentialModel, energy: f64, f: impl Fn(f64) -> f64) -> f64 {
    if energy <= 0.0 {
        return 0.0;
    }
    if energy >= model.escape_energy() {
        log::warn!(
            "QuadratureWarning: energy {energy} reaches the saddles, the allowed region is clipped at the triangle edges"
        );
    }
    let (tx, tw) = gauss_legendre(ANGULAR_POINTS);
    let (rx, rw) = gauss_legendre(RADIAL_POINTS);
    let (t0, t1) = (-0.5 * PI, -PI / 6.0);
    let mut total = 0.0;
    for (&u, &wu) in tx.iter().zip(&tw) {
        let theta = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * u;
        let r_max = turning_radius(model, energy, theta);
        let (c, s) = (theta.cos(), theta.sin());
        let mut inner = 0.0;
        for (&x, &wx) in rx.iter().zip(&rw) {
            let r = 0.5 * r_max * (1.0 + x);
            let v = model.value(r * c, r * s).unwrap_or(f64::INFINITY);
            if v < energy {
                inner += wx * f(energy - v) * r;
            }
        }
        total += wu * 0.5 * (t1 - t0) * inner * 0.5 * r_max;
    }
    6.0 * total
}

/// Area of `{v <= energy}` inside the configuration triangle.
pub fn allowed_area(energy: f64, model: PotentialModel) -> f64 {
    allowed_integral(model, energy, |_| 1.0)
}

/// Smooth count of all states below `energy`,
/// `integral (energy - v)_+ dA / (4 pi c eta^2)`.
pub fn weyl_total(energy: f64, model: PotentialModel, eta: f64) -> f64 {
    let c = model.kinetic_prefactor();
    allowed_integral(model, energy, |d| d) / (4.0 * PI * c * eta * eta)
}

/// Smooth count of `irrep` states below `energy`, E states counted with
/// their degeneracy.
pub fn weyl_count(energy: f64, irrep: IrrepLabel, model: PotentialModel, eta: f64) -> f64 {
    irrep.weyl_fraction() * weyl_total(energy, model, eta)
}

/// `d weyl_count / d energy`.
pub fn weyl_density(energy: f64, irrep: IrrepLabel, model: PotentialModel, eta: f64) -> f64 {
    let c = model.kinetic_prefactor();
    irrep.weyl_fraction() * allowed_area(energy, model) / (4.0 * PI * c * eta * eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_limit_of_the_phase_volume() {
        // v ~ w^2 r^2 / (4 c) near O: the count tends to (eps / w)^2 / (2 eta^2)
        for model in [PotentialModel::Ring, PotentialModel::HenonHeiles] {
            let w = model.origin_frequency();
            let eta = 0.01;
            let eps = 1e-4;
            let n = weyl_total(eps, model, eta);
            let exact = (eps / w).powi(2) / (2.0 * eta * eta);
            assert!((n / exact - 1.0).abs() < 1e-2, "{model}: {n} vs {exact}");
        }
    }

    #[test]
    fn density_is_the_derivative_of_the_count() {
        let (model, eta) = (PotentialModel::HenonHeiles, 0.04f64.powi(2));
        let h = 1e-4;
        let e = 0.12;
        let fd = (weyl_count(e + h, IrrepLabel::E, model, eta) - weyl_count(e - h, IrrepLabel::E, model, eta)) / (2.0 * h);
        let d = weyl_density(e, IrrepLabel::E, model, eta);
        assert!((fd / d - 1.0).abs() < 1e-4, "{fd} vs {d}");
    }

    #[test]
    fn zero_and_monotone() {
        for model in [PotentialModel::Ring, PotentialModel::HenonHeiles] {
            assert_eq!(weyl_total(0.0, model, 0.01), 0.0);
            let top = if model == PotentialModel::Ring { 10.0 } else { 0.16 };
            let mut prev = 0.0;
            for k in 1..=40 {
                let n = weyl_total(top * k as f64 / 40.0, model, 0.01);
                assert!(n >= prev);
                prev = n;
            }
        }
    }
}
