//! One control waveform driving two spins with different field scales.
//!
//! Time-optimal controls for a pair with `χ1 ≠ χ2` obey
//! `φ''' + φ'³/2 + bφ' + a = 0`, so a pair of gates is labelled by the
//! initial data `(φ₀, φ'₀, φ''₀)`, the constants `(a, b)` and the duration.

mod grape;
mod shooting;

pub use grape::{
    fidelity_gradient, gradient_ascent, gradient_ascent_many, sweep_fmax, DiscretizedControl, GrapeOptions, GrapeResult,
};
pub use shooting::{ensemble_invert, ensemble_invert_with, ShootingOptions, ShootingReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Integrator, OdeSystem, Tolerances};
use crate::propagator::{propagate_ensemble_with, ControlWaveform, MAX_CONTROL_RATE};
use crate::su2::Su2;

/// Generalized time-optimal coordinates of a gate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCoords {
    pub phi0: f64,
    pub phidot0: f64,
    pub phiddot0: f64,
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub chi1: f64,
    pub chi2: f64,
}

impl EnsembleCoords {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.phi0,
            self.phidot0,
            self.phiddot0,
            self.a,
            self.b,
            self.t,
            self.chi1,
            self.chi2,
        ];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("ensemble coordinates must be finite"));
        }
        if self.t < 0.0 {
            return Err(Error::domain("evolution time must be non-negative"));
        }
        validate_chis(self.chi1, self.chi2)
    }

    pub fn waveform(&self) -> ControlWaveform {
        ControlWaveform::OdeDefined {
            phi0: self.phi0,
            phidot0: self.phidot0,
            phiddot0: self.phiddot0,
            a: self.a,
            b: self.b,
        }
    }

    pub fn chis(&self) -> [f64; 2] {
        [self.chi1, self.chi2]
    }
}

/// Rejects non-positive fields and `χ1 = χ2`.
pub fn validate_chis(chi1: f64, chi2: f64) -> Result<()> {
    if !(chi1 > 0.0 && chi2 > 0.0 && chi1.is_finite() && chi2.is_finite()) {
        return Err(Error::domain("field values must be positive and finite"));
    }
    if chi1 == chi2 {
        return Err(Error::EqualFields(chi1));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePair {
    pub u1: Su2,
    pub u2: Su2,
}

impl GatePair {
    pub fn new(u1: Su2, u2: Su2) -> Self {
        GatePair { u1, u2 }
    }

    pub fn identity() -> Self {
        GatePair::new(Su2::identity(), Su2::identity())
    }

    pub fn as_array(&self) -> [Su2; 2] {
        [self.u1, self.u2]
    }

    /// Larger of the two per-gate Frobenius distances `‖V - A‖_F`.
    pub fn max_frobenius_error(&self, other: &GatePair) -> f64 {
        (2.0 * self.u1.distance(&other.u1)).max(2.0 * self.u2.distance(&other.u2))
    }
}

/// `F = (1/4) Re(Tr[V1† A1] + Tr[V2† A2])`.
pub fn fidelity(pair: &GatePair, targets: &GatePair) -> f64 {
    0.25 * (targets.u1.re_trace_inner(&pair.u1) + targets.u2.re_trace_inner(&pair.u2))
}

/// `(φ, φ', φ'')` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiCurve {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub phidot: Vec<f64>,
    pub phiddot: Vec<f64>,
}

struct ControlOde {
    a: f64,
    b: f64,
}

impl OdeSystem<3> for ControlOde {
    fn rhs(&self, _t: f64, y: &[f64; 3], d: &mut [f64; 3]) {
        d[0] = y[1];
        d[1] = y[2];
        d[2] = -0.5 * y[1] * y[1] * y[1] - self.b * y[1] - self.a;
    }

    fn check(&self, t: f64, y: &[f64; 3]) -> Result<()> {
        if !(y[1].abs() <= MAX_CONTROL_RATE) {
            return Err(Error::BlowUp { t, rate: y[1] });
        }
        Ok(())
    }
}

/// Samples the control defined by `coords` at `samples >= 2` uniform times.
pub fn integrate_phi(coords: &EnsembleCoords, samples: usize) -> Result<PhiCurve> {
    integrate_phi_with(coords, samples, Tolerances::default())
}

pub fn integrate_phi_with(coords: &EnsembleCoords, samples: usize, tol: Tolerances) -> Result<PhiCurve> {
    coords.validate()?;
    if samples < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let last = samples - 1;
    let grid: Vec<f64> = (0..samples)
        .map(|k| {
            if k == last {
                coords.t
            } else {
                coords.t * k as f64 / last as f64
            }
        })
        .collect();
    let sys = ControlOde {
        a: coords.a,
        b: coords.b,
    };
    let y0 = [coords.phi0, coords.phidot0, coords.phiddot0];
    let (ys, _) = Integrator::new(tol).integrate_grid(&sys, 0.0, y0, &grid)?;
    Ok(PhiCurve {
        times: grid,
        phi: ys.iter().map(|y| y[0]).collect(),
        phidot: ys.iter().map(|y| y[1]).collect(),
        phiddot: ys.iter().map(|y| y[2]).collect(),
    })
}

/// The gate pair produced by the control of `coords`.
pub fn ensemble_forward(coords: &EnsembleCoords) -> Result<GatePair> {
    ensemble_forward_with(coords, Tolerances::default())
}

pub fn ensemble_forward_with(coords: &EnsembleCoords, tol: Tolerances) -> Result<GatePair> {
    coords.validate()?;
    let recs = propagate_ensemble_with(&coords.waveform(), &coords.chis(), coords.t, 2, tol)?;
    Ok(GatePair::new(recs[0].end(), recs[1].end()))
}

/// The control from the worked two-spin example: `χ = (1/2, 3/2)`,
/// `(φ₀, φ'₀, φ''₀, a, b) = (0, -2, 0, 2, 3)` and `t = 3`.
pub fn reference_instance() -> EnsembleCoords {
    EnsembleCoords {
        phi0: 0.0,
        phidot0: -2.0,
        phiddot0: 0.0,
        a: 2.0,
        b: 3.0,
        t: 3.0,
        chi1: 0.5,
        chi2: 1.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn coords(phidot0: f64, phiddot0: f64, a: f64, b: f64, t: f64) -> EnsembleCoords {
        EnsembleCoords {
            phi0: 0.3,
            phidot0,
            phiddot0,
            a,
            b,
            t,
            chi1: 0.5,
            chi2: 1.5,
        }
    }

    #[test]
    fn stationary_control() {
        let c = coords(0.0, 0.0, 0.0, 1.7, 2.0);
        let curve = integrate_phi(&c, 11).unwrap();
        assert!(curve.phi.iter().all(|&p| p == 0.3));

        let pair = ensemble_forward(&c).unwrap();
        let axis = [0.3f64.cos(), 0.3f64.sin(), 0.0];
        let w1 = Su2::from_axis_angle(axis, 2.0 * 0.5 * 2.0).unwrap();
        let w2 = Su2::from_axis_angle(axis, 2.0 * 1.5 * 2.0).unwrap();
        assert!(pair.u1.max_coord_error(&w1) < 1e-10);
        assert!(pair.u2.max_coord_error(&w2) < 1e-10);
    }

    #[test]
    fn zero_time_is_identity_pair() {
        let pair = ensemble_forward(&coords(1.0, 2.0, 0.5, -1.0, 0.0)).unwrap();
        assert_eq!(pair, GatePair::identity());
    }

    #[test]
    fn control_equation_residual() {
        // five-point differences of the sampled φ'' recover the third
        // derivative to O(h⁴); substituting it must satisfy the equation
        let curve = integrate_phi(&reference_instance(), 1501).unwrap();
        let h = curve.times[1] - curve.times[0];
        let (a, b) = (2.0, 3.0);
        let d5 = |f: &[f64], k: usize| (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
        for k in 2..curve.times.len() - 2 {
            let v = curve.phidot[k];
            let res = d5(&curve.phiddot, k) + 0.5 * v * v * v + b * v + a;
            assert!(res.abs() < 1e-8, "k = {k}: {res:e}");
            assert!((d5(&curve.phi, k) - v).abs() < 1e-8);
        }
    }

    #[test]
    fn equal_fields_rejected() {
        let mut c = reference_instance();
        c.chi2 = c.chi1;
        assert!(matches!(ensemble_forward(&c), Err(Error::EqualFields(_))));
        c.chi2 = -1.0;
        assert!(ensemble_forward(&c).is_err());
    }

    #[test]
    fn blow_up_reported() {
        let c = coords(0.0, 1e7, 0.0, 0.0, 1.0);
        assert!(matches!(integrate_phi(&c, 3), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn fidelity_examples() {
        let v = GatePair::new(
            Su2::from_axis_angle([1.0, 2.0, 3.0], 0.4).unwrap(),
            Su2::from_axis_angle([-1.0, 0.0, 1.0], 2.4).unwrap(),
        );
        assert!((fidelity(&v, &v) - 1.0).abs() < 1e-15);
        let neg = GatePair::new(v.u1.neg(), v.u2.neg());
        assert!((fidelity(&neg, &v) + 1.0).abs() < 1e-15);

        let kick = Su2::from_axis_angle([0.0, 0.0, 1.0], PI).unwrap();
        let a = GatePair::new(v.u1, kick.mul(&v.u2));
        let m2 = v.u2.to_matrix();
        let mk = kick.mul(&v.u2).to_matrix();
        // Re Tr[V2† A2] from the explicit matrices
        let mut tr = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                tr += (m2[j][i].conj() * mk[j][i]).re;
            }
        }
        assert!((fidelity(&a, &v) - 0.25 * (2.0 + tr)).abs() < 1e-15);

        let swapped = GatePair::new(v.u2, v.u1);
        let a_swapped = GatePair::new(a.u2, a.u1);
        assert!((fidelity(&a, &v) - fidelity(&a_swapped, &swapped)).abs() < 1e-15);
    }
}
