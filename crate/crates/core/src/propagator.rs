//! Evolution of SU(2) propagators under a planar control field.
//!
//! Spin `i` evolves under `H_i = -χ_i σ·n̂(φ) + b σz` with
//! `n̂(φ) = (cos φ, sin φ, 0)`, which in complex coordinates reads
//!
//! ```text
//!     ż1 = -i χ e^{-iφ} z2* - i b z1
//!     ż2 =  i χ e^{-iφ} z1* - i b z2
//! ```
//!
//! Smooth controls are integrated with DOP853; piecewise-constant controls
//! are applied segment by segment with the exact step propagator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Integrator, OdeSystem, Tolerances};
use crate::su2::{s2_arclength, ArcLength, S2Point, Su2, I};

/// Rate bound for ODE-defined controls; beyond it the orbit is abandoned.
pub const MAX_CONTROL_RATE: f64 = 1e3;

/// Time dependence of the control angle `φ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlWaveform {
    /// `φ(t) = φ₀ + ωt`.
    Linear { phi0: f64, omega: f64 },
    /// Constant bias field `b σz` on top of a control that is linear in the
    /// interaction picture: the lab-frame angle is `φ₀ + (ω + 2b)t`.
    LinearBias { phi0: f64, omega: f64, bias: f64 },
    /// `φ` solves `φ''' + φ'³/2 + bφ' + a = 0` from the given initial data.
    OdeDefined {
        phi0: f64,
        phidot0: f64,
        phiddot0: f64,
        a: f64,
        b: f64,
    },
    /// `φ = phis[r]` on `[r·dt, (r+1)·dt)`.
    PiecewiseConstant { dt: f64, phis: Vec<f64> },
}

impl ControlWaveform {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            ControlWaveform::Linear { phi0, omega } => finite(&[*phi0, *omega]),
            ControlWaveform::LinearBias { phi0, omega, bias } => finite(&[*phi0, *omega, *bias]),
            ControlWaveform::OdeDefined {
                phi0,
                phidot0,
                phiddot0,
                a,
                b,
            } => finite(&[*phi0, *phidot0, *phiddot0, *a, *b]),
            ControlWaveform::PiecewiseConstant { dt, phis } => {
                if !(*dt > 0.0 && dt.is_finite()) {
                    return Err(Error::domain("piecewise-constant waveform needs dt > 0"));
                }
                if phis.is_empty() {
                    return Err(Error::domain("piecewise-constant waveform needs at least one sample"));
                }
                finite(phis)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("waveform parameters must be finite"))
        }
    }

    /// Bias field strength along ẑ carried by this waveform.
    pub fn bias(&self) -> f64 {
        match self {
            ControlWaveform::LinearBias { bias, .. } => *bias,
            _ => 0.0,
        }
    }

    /// Closed-form lab-frame angle, where one exists.
    pub fn phi_at(&self, t: f64) -> Option<f64> {
        match self {
            ControlWaveform::Linear { phi0, omega } => Some(phi0 + omega * t),
            ControlWaveform::LinearBias { phi0, omega, bias } => Some(phi0 + (omega + 2.0 * bias) * t),
            ControlWaveform::PiecewiseConstant { dt, phis } => {
                let r = ((t / dt).floor().max(0.0) as usize).min(phis.len() - 1);
                Some(phis[r])
            }
            ControlWaveform::OdeDefined { .. } => None,
        }
    }
}

/// Time-stamped samples of a single spin's evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Su2>,
    /// Lab-frame control angle at each sample.
    pub controls: Vec<f64>,
    pub chi: f64,
    pub bias: f64,
}

impl TrajectoryRecord {
    pub fn end(&self) -> Su2 {
        *self.states.last().expect("trajectory has at least one sample")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn hopf_points(&self) -> Vec<S2Point> {
        self.states.iter().map(Su2::hopf_project).collect()
    }

    pub fn s2_arclength(&self) -> ArcLength {
        s2_arclength(&self.states)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|u| (u.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Left-multiplies `u` by `exp(i χ dt σ·n̂(φ))`.
pub fn step_exact(u: &Su2, phi: f64, chi: f64, dt: f64) -> Su2 {
    if dt == 0.0 {
        return *u;
    }
    let (s, c) = (chi * dt).sin_cos();
    let step = Su2::from_unit(Complex64::new(c, 0.0), I * Complex64::from_polar(s, -phi));
    step.mul(u)
}

fn uniform_grid(t: f64, samples: usize) -> Vec<f64> {
    let last = samples - 1;
    (0..samples)
        .map(|k| if k == last { t } else { t * k as f64 / last as f64 })
        .collect()
}

enum PhiLaw {
    Linear { phi0: f64, rate: f64 },
    Ode { a: f64, b: f64 },
}

/// Co-integrated spins (and control, when ODE-defined). Layout: four reals
/// `(Re z1, Im z1, Re z2, Im z2)` per spin, then `(φ, φ', φ'')` if needed.
struct Dynamics<'a> {
    chis: &'a [f64],
    bias: f64,
    law: PhiLaw,
}

impl<const N: usize> OdeSystem<N> for Dynamics<'_> {
    fn rhs(&self, t: f64, y: &[f64; N], d: &mut [f64; N]) {
        let phi = match self.law {
            PhiLaw::Linear { phi0, rate } => phi0 + rate * t,
            PhiLaw::Ode { a, b } => {
                let (phi, rate, accel) = (y[N - 3], y[N - 2], y[N - 1]);
                d[N - 3] = rate;
                d[N - 2] = accel;
                d[N - 1] = -0.5 * rate * rate * rate - b * rate - a;
                phi
            }
        };
        let (sp, cp) = phi.sin_cos();
        for (s, &chi) in self.chis.iter().enumerate() {
            let o = 4 * s;
            let (x1, y1, x2, y2) = (y[o], y[o + 1], y[o + 2], y[o + 3]);
            // ż1 = -iχ e^{-iφ} z2*,  ż2 = iχ e^{-iφ} z1*
            // e^{-iφ} z* = (cφ x - sφ y) - i(sφ x + cφ y)
            let (a2, b2) = (cp * x2 - sp * y2, -(sp * x2 + cp * y2));
            let (a1, b1) = (cp * x1 - sp * y1, -(sp * x1 + cp * y1));
            d[o] = chi * b2 + self.bias * y1;
            d[o + 1] = -chi * a2 - self.bias * x1;
            d[o + 2] = -chi * b1 + self.bias * y2;
            d[o + 3] = chi * a1 - self.bias * x2;
        }
    }

    fn check(&self, t: f64, y: &[f64; N]) -> Result<()> {
        if let PhiLaw::Ode { .. } = self.law {
            let rate = y[N - 2];
            if !(rate.abs() <= MAX_CONTROL_RATE) {
                return Err(Error::BlowUp { t, rate });
            }
        }
        Ok(())
    }
}

/// Propagates one spin with field scale `chi` over `[0, t]`, recording
/// `samples >= 2` uniformly spaced states.
pub fn propagate(waveform: &ControlWaveform, chi: f64, t: f64, samples: usize) -> Result<TrajectoryRecord> {
    propagate_with(waveform, chi, t, samples, Tolerances::default())
}

pub fn propagate_with(
    waveform: &ControlWaveform,
    chi: f64,
    t: f64,
    samples: usize,
    tol: Tolerances,
) -> Result<TrajectoryRecord> {
    let mut recs = propagate_ensemble_with(waveform, &[chi], t, samples, tol)?;
    Ok(recs.remove(0))
}

/// Propagates up to four spins driven by the same control.
pub fn propagate_ensemble(
    waveform: &ControlWaveform,
    chis: &[f64],
    t: f64,
    samples: usize,
) -> Result<Vec<TrajectoryRecord>> {
    propagate_ensemble_with(waveform, chis, t, samples, Tolerances::default())
}

pub fn propagate_ensemble_with(
    waveform: &ControlWaveform,
    chis: &[f64],
    t: f64,
    samples: usize,
    tol: Tolerances,
) -> Result<Vec<TrajectoryRecord>> {
    waveform.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("evolution time must be finite and non-negative"));
    }
    if samples < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    if chis.is_empty() || chis.len() > 4 || chis.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain("between one and four finite field values are supported"));
    }
    let grid = uniform_grid(t, samples);
    let bias = waveform.bias();

    if let ControlWaveform::PiecewiseConstant { dt, phis } = waveform {
        return propagate_piecewise(*dt, phis, chis, &grid);
    }

    let (law, ode) = match *waveform {
        ControlWaveform::Linear { phi0, omega } => (PhiLaw::Linear { phi0, rate: omega }, None),
        ControlWaveform::LinearBias { phi0, omega, bias } => (
            PhiLaw::Linear {
                phi0,
                rate: omega + 2.0 * bias,
            },
            None,
        ),
        ControlWaveform::OdeDefined {
            phi0,
            phidot0,
            phiddot0,
            a,
            b,
        } => (PhiLaw::Ode { a, b }, Some([phi0, phidot0, phiddot0])),
        ControlWaveform::PiecewiseConstant { .. } => unreachable!(),
    };
    let sys = Dynamics { chis, bias, law };
    let integrator = Integrator::new(tol);

    macro_rules! run {
        ($n:literal) => {{
            let mut y0 = [0.0; $n];
            for s in 0..chis.len() {
                y0[4 * s] = 1.0;
            }
            if let Some(init) = ode {
                y0[$n - 3..].copy_from_slice(&init);
            }
            let (ys, _) = integrator.integrate_grid(&sys, 0.0, y0, &grid)?;
            ys.into_iter().map(|y| y.to_vec()).collect::<Vec<Vec<f64>>>()
        }};
    }
    let rows: Vec<Vec<f64>> = match (chis.len(), ode.is_some()) {
        (1, false) => run!(4),
        (2, false) => run!(8),
        (3, false) => run!(12),
        (4, false) => run!(16),
        (1, true) => run!(7),
        (2, true) => run!(11),
        (3, true) => run!(15),
        (4, true) => run!(19),
        _ => unreachable!(),
    };

    let controls: Vec<f64> = match ode {
        Some(_) => rows.iter().map(|r| r[r.len() - 3]).collect(),
        None => grid.iter().map(|&s| waveform.phi_at(s).unwrap()).collect(),
    };
    let mut out = Vec::with_capacity(chis.len());
    for (s, &chi) in chis.iter().enumerate() {
        let o = 4 * s;
        let states = rows
            .iter()
            .map(|r| Su2::new(Complex64::new(r[o], r[o + 1]), Complex64::new(r[o + 2], r[o + 3])))
            .collect::<Result<Vec<_>>>()?;
        out.push(TrajectoryRecord {
            times: grid.clone(),
            states,
            controls: controls.clone(),
            chi,
            bias,
        });
    }
    Ok(out)
}

fn propagate_piecewise(dt: f64, phis: &[f64], chis: &[f64], grid: &[f64]) -> Result<Vec<TrajectoryRecord>> {
    let total = dt * phis.len() as f64;
    let t_end = *grid.last().unwrap();
    if t_end > total * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "evolution time {t_end} exceeds waveform duration {total}"
        )));
    }
    let mut out = Vec::with_capacity(chis.len());
    for &chi in chis {
        // state at the start of the current segment
        let mut seg = 0usize;
        let mut seg_state = Su2::identity();
        let mut states = Vec::with_capacity(grid.len());
        let mut controls = Vec::with_capacity(grid.len());
        for &ts in grid {
            while seg + 1 < phis.len() && ts >= (seg + 1) as f64 * dt {
                seg_state = step_exact(&seg_state, phis[seg], chi, dt);
                seg += 1;
            }
            let into = (ts - seg as f64 * dt).max(0.0);
            states.push(step_exact(&seg_state, phis[seg], chi, into));
            controls.push(phis[seg]);
        }
        out.push(TrajectoryRecord {
            times: grid.to_vec(),
            states,
            controls,
            chi,
            bias: 0.0,
        });
    }
    Ok(out)
}

/// Worst-case residuals of the two first-order identities along a sampled
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `max |ż1 z1* + ż2 z2*|`.
    pub norm: f64,
    /// `max |ż2 z1 - ż1 z2 - iχ e^{-iφ}|`.
    pub phase: f64,
    /// `max | |ż2 z1 - ż1 z2| - χ |`.
    pub modulus: f64,
}

/// Checks the identities satisfied by any planar-control evolution with
/// field scale `chi`, using centered differences. The bias term is not
/// accounted for, so bias-free trajectories only.
pub fn check_identities(traj: &TrajectoryRecord, chi: f64) -> Result<IdentityResiduals> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::domain("need at least three samples for centered differences"));
    }
    let mut res = IdentityResiduals {
        norm: 0.0,
        phase: 0.0,
        modulus: 0.0,
    };
    for k in 1..n - 1 {
        let h = traj.times[k + 1] - traj.times[k - 1];
        if h <= 0.0 {
            return Err(Error::domain("trajectory times must be strictly increasing"));
        }
        let (a, b, u) = (traj.states[k - 1], traj.states[k + 1], traj.states[k]);
        let d1 = (b.z1() - a.z1()) / h;
        let d2 = (b.z2() - a.z2()) / h;
        let first = d1 * u.z1().conj() + d2 * u.z2().conj();
        let second = d2 * u.z1() - d1 * u.z2();
        let want = I * Complex64::from_polar(chi, -traj.controls[k]);
        res.norm = res.norm.max(first.norm());
        res.phase = res.phase.max((second - want).norm());
        res.modulus = res.modulus.max((second.norm() - chi).abs());
    }
    Ok(res)
}

/// Spin direction `ŝ(t) = R(U(t)) ŝ(0)` along the trajectory.
pub fn bloch_trajectory(traj: &TrajectoryRecord, initial_spin: [f64; 3]) -> Result<Vec<[f64; 3]>> {
    let n = crate::su2::norm3(initial_spin);
    if !((n - 1.0).abs() <= 1e-10) {
        return Err(Error::domain(format!("initial spin must be a unit vector (|s| = {n})")));
    }
    Ok(traj.states.iter().map(|u| u.rotate(initial_spin)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn step_exact_examples() {
        let u = Su2::from_axis_angle([0.3, -1.0, 0.2], 0.7).unwrap();
        assert_eq!(step_exact(&u, 1.1, 1.0, 0.0), u);

        let x = step_exact(&Su2::identity(), 0.0, 1.0, FRAC_PI_4);
        assert_abs_diff_eq!(x.z1().re, FRAC_PI_4.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(x.z2().im, FRAC_PI_4.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(x.z2().re, 0.0, epsilon = 1e-15);

        let once = step_exact(&u, 0.4, 1.3, 0.2);
        let twice = step_exact(&step_exact(&u, 0.4, 1.3, 0.1), 0.4, 1.3, 0.1);
        assert!(once.max_coord_error(&twice) < 1e-14);
    }

    #[test]
    fn constant_control_is_axis_angle_rotation() {
        let traj = propagate(&ControlWaveform::Linear { phi0: 0.7, omega: 0.0 }, 1.0, FRAC_PI_4, 5).unwrap();
        let want = Su2::from_axis_angle([0.7f64.cos(), 0.7f64.sin(), 0.0], FRAC_PI_2).unwrap();
        assert!(traj.end().max_coord_error(&want) < 1e-10);
        assert_eq!(traj.len(), 5);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.states[0], Su2::identity());
    }

    #[test]
    fn two_samples_gives_endpoints() {
        let traj = propagate(&ControlWaveform::Linear { phi0: 0.0, omega: 1.0 }, 1.0, 2.0, 2).unwrap();
        assert_eq!(traj.times, vec![0.0, 2.0]);
    }

    #[test]
    fn piecewise_matches_sampled_linear() {
        let (phi0, omega, t) = (0.3, 1.7, 2.2);
        let r = 10_000;
        let dt = t / r as f64;
        let phis: Vec<f64> = (0..r).map(|k| phi0 + omega * (k as f64 + 0.5) * dt).collect();
        let pc = propagate(&ControlWaveform::PiecewiseConstant { dt, phis }, 1.0, t, 2).unwrap();
        let smooth = propagate(&ControlWaveform::Linear { phi0, omega }, 1.0, t, 2).unwrap();
        assert!(pc.end().max_coord_error(&smooth.end()) < 1e-6);
    }

    #[test]
    fn piecewise_rejects_overlong_time() {
        let w = ControlWaveform::PiecewiseConstant {
            dt: 0.1,
            phis: vec![0.0; 3],
        };
        assert!(propagate(&w, 1.0, 0.5, 2).is_err());
        let w = ControlWaveform::PiecewiseConstant {
            dt: 0.0,
            phis: vec![0.0],
        };
        assert!(propagate(&w, 1.0, 0.0, 2).is_err());
    }

    #[test]
    fn constant_ode_control_stays_put() {
        let w = ControlWaveform::OdeDefined {
            phi0: 0.4,
            phidot0: 0.0,
            phiddot0: 0.0,
            a: 0.0,
            b: 2.0,
        };
        let traj = propagate(&w, 1.0, 1.5, 4).unwrap();
        assert!(traj.controls.iter().all(|&p| p == 0.4));
        let want = Su2::from_axis_angle([0.4f64.cos(), 0.4f64.sin(), 0.0], 3.0).unwrap();
        assert!(traj.end().max_coord_error(&want) < 1e-10);
    }

    #[test]
    fn identity_residuals() {
        let w = ControlWaveform::Linear { phi0: 0.2, omega: 1.1 };
        let traj = propagate(&w, 1.0, PI, 10_001).unwrap();
        let r = check_identities(&traj, 1.0).unwrap();
        assert!(r.norm < 1e-6 && r.phase < 1e-6, "{r:?}");

        let c = ControlWaveform::Linear { phi0: 0.2, omega: 0.0 };
        // centered-difference truncation error is about (h/2)^2 chi^3 / 6
        let traj = propagate(&c, 1.7, 1.0, 2001).unwrap();
        assert!(check_identities(&traj, 1.7).unwrap().modulus < 1e-6);

        let wrong = check_identities(&traj, 1.2).unwrap();
        assert_abs_diff_eq!(wrong.phase, 0.5, epsilon = 1e-6);

        let short = propagate(&c, 1.0, 1.0, 2).unwrap();
        assert!(check_identities(&short, 1.0).is_err());
    }

    #[test]
    fn bloch_examples() {
        let id = TrajectoryRecord {
            times: vec![0.0],
            states: vec![Su2::identity()],
            controls: vec![0.0],
            chi: 1.0,
            bias: 0.0,
        };
        let s = bloch_trajectory(&id, [0.6, 0.0, 0.8]).unwrap();
        assert_eq!(s[0], [0.6, 0.0, 0.8]);
        assert!(bloch_trajectory(&id, [1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn ode_blow_up_is_reported() {
        let w = ControlWaveform::OdeDefined {
            phi0: 0.0,
            phidot0: 0.0,
            phiddot0: 1e7,
            a: 0.0,
            b: 0.0,
        };
        match propagate(&w, 1.0, 1.0, 2) {
            Err(Error::BlowUp { t, .. }) => assert!(t < 1.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
