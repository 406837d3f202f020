//! Time-optimal synthesis with a planar control of fixed amplitude, and the
//! two reference syntheses it is compared against.
//!
//! The minimal-time control rotates uniformly, `φ(t) = φ₀ + ωt`, so every
//! optimal propagator is labelled by `(φ₀, ω, t)`:
//!
//! ```text
//!     z1 = e^{-iωt/2} (cos αt + i (ω/2α) sin αt)
//!     z2 = (i/α) e^{-i(φ₀ + ωt/2)} sin αt,          α = (1 + ω²/4)^{1/2}
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion;
use crate::propagator::ControlWaveform;
use crate::su2::{norm3, Su2, I};

/// Parameters of a uniformly rotating control and its duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalCoords {
    pub phi0: f64,
    pub omega: f64,
    pub t: f64,
    /// `φ₀` does not affect the endpoint (pure z-rotation targets).
    pub degenerate_phi0: bool,
}

impl OptimalCoords {
    pub fn new(phi0: f64, omega: f64, t: f64) -> Self {
        OptimalCoords {
            phi0,
            omega,
            t,
            degenerate_phi0: false,
        }
    }

    pub fn rates(&self) -> DerivedRates {
        DerivedRates::new(self.omega)
    }

    pub fn waveform(&self) -> ControlWaveform {
        ControlWaveform::Linear {
            phi0: self.phi0,
            omega: self.omega,
        }
    }
}

/// `α = (1 + ω²/4)^{1/2}` and `β± = α ± ω/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    pub alpha: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl DerivedRates {
    pub fn new(omega: f64) -> Self {
        let h = 0.5 * omega;
        let alpha = h.hypot(1.0);
        // the smaller of β± is formed as a reciprocal to avoid cancellation
        let (beta_plus, beta_minus) = if h >= 0.0 {
            let bp = alpha + h;
            (bp, 1.0 / bp)
        } else {
            let bm = alpha - h;
            (1.0 / bm, bm)
        };
        DerivedRates {
            alpha,
            beta_plus,
            beta_minus,
        }
    }
}

/// Endpoint of the uniformly rotating control.
pub fn forward(coords: &OptimalCoords) -> Result<Su2> {
    let OptimalCoords { phi0, omega, t, .. } = *coords;
    if !(t >= 0.0) || !t.is_finite() || !phi0.is_finite() || !omega.is_finite() {
        return Err(Error::domain("forward needs finite (phi0, omega) and t >= 0"));
    }
    Ok(forward_unchecked(phi0, omega, t))
}

pub(crate) fn forward_unchecked(phi0: f64, omega: f64, t: f64) -> Su2 {
    let alpha = (0.5 * omega).hypot(1.0);
    let (s, c) = (alpha * t).sin_cos();
    let half = 0.5 * omega * t;
    let z1 = Complex64::from_polar(1.0, -half) * Complex64::new(c, omega / (2.0 * alpha) * s);
    let z2 = I * Complex64::from_polar(s / alpha, -(phi0 + half));
    Su2::from_unit(z1, z2)
}

/// Minimal-time coordinates reaching `target`, plus search diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionReport {
    pub coords: OptimalCoords,
    /// A different solution reaches the target within 1e-10 of the same time.
    pub tie: bool,
    pub branches_searched: usize,
    pub residual: f64,
}

pub fn invert(target: &Su2) -> Result<OptimalCoords> {
    invert_with_report(target).map(|r| r.coords)
}

pub fn invert_with_report(target: &Su2) -> Result<InversionReport> {
    let s = inversion::solve(target, 0.0)?;
    Ok(InversionReport {
        coords: OptimalCoords {
            phi0: s.phi0,
            omega: s.omega,
            t: s.t,
            degenerate_phi0: s.degenerate_phi0,
        },
        tie: s.tie,
        branches_searched: s.branches,
        residual: s.residual,
    })
}

/// Closed-form optimal coordinates of `e^{iησz/2}` for `η ∈ (0, 2π]`:
/// `ν = 1 - η/2π`, `ω = 2ν(1 - ν²)^{-1/2}`, `t = π(1 - ν²)^{1/2}`.
pub fn z_rotation_coords(eta: f64) -> Result<OptimalCoords> {
    if !(eta > 0.0 && eta <= 2.0 * PI) {
        return Err(Error::domain("z-rotation angle must lie in (0, 2pi]"));
    }
    let nu = 1.0 - eta / (2.0 * PI);
    let c = ((1.0 - nu) * (1.0 + nu)).sqrt();
    Ok(OptimalCoords {
        phi0: 0.0,
        omega: 2.0 * nu / c,
        t: PI * c,
        degenerate_phi0: true,
    })
}

/// One constant-control piece of a piecewise-constant synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Control angle: `0` is `+x̂`, `π/2` is `+ŷ`, `π` is `-x̂`, `-π/2` is `-ŷ`.
    pub phi: f64,
    pub duration: f64,
}

/// Synthesis `V = e^{iψσx/2} e^{iθσy/2} e^{iφσx/2}`, applied right to left.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerBaseline {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
    pub t: f64,
    /// Non-empty pieces in time order.
    pub segments: Vec<Segment>,
}

impl EulerBaseline {
    pub fn apply(&self, u: &Su2, chi: f64) -> Su2 {
        self.segments.iter().fold(*u, |acc, seg| {
            crate::propagator::step_exact(&acc, seg.phi, chi, seg.duration / chi)
        })
    }
}

/// `e^{-iπσy/4}`, which carries σz to σx under conjugation.
fn z_to_x() -> Su2 {
    let h = 0.5f64.sqrt();
    Su2::from_unit(Complex64::new(h, 0.0), Complex64::new(-h, 0.0))
}

/// The x–y–x Euler synthesis with the least total time among the
/// equivalent angle triples.
pub fn euler_baseline(target: &Su2) -> EulerBaseline {
    let tr = z_to_x();
    let rotated = tr.adjoint().mul(target).mul(&tr);
    let e = rotated.to_euler();
    let cost = |p: f64, q: f64, r: f64| 0.5 * (p.abs() + q.abs() + r.abs());
    let two_pi = 2.0 * PI;
    let mut best = (e.psi, e.theta, e.phi);
    let mut best_cost = f64::INFINITY;
    for flip in [false, true] {
        let (p0, q0, r0) = if flip {
            (e.psi + PI, -e.theta, e.phi - PI)
        } else {
            (e.psi, e.theta, e.phi)
        };
        for a in -2i32..=2 {
            for b in -2i32..=2 {
                for c in -2i32..=2 {
                    if (a + b + c).rem_euclid(2) != 0 {
                        continue;
                    }
                    let (p, q, r) = (p0 + two_pi * a as f64, q0 + two_pi * b as f64, r0 + two_pi * c as f64);
                    let k = cost(p, q, r);
                    if k < best_cost - 1e-15 {
                        best_cost = k;
                        best = (p, q, r);
                    }
                }
            }
        }
    }
    let (psi, theta, phi) = best;
    let axis = |angle: f64, positive: f64, negative: f64| if angle >= 0.0 { positive } else { negative };
    let segments = [
        (axis(phi, 0.0, PI), phi),
        (axis(theta, 0.5 * PI, -0.5 * PI), theta),
        (axis(psi, 0.0, PI), psi),
    ]
    .into_iter()
    .filter(|(_, angle)| *angle != 0.0)
    .map(|(ctrl, angle)| Segment {
        phi: ctrl,
        duration: 0.5 * angle.abs(),
    })
    .collect();
    EulerBaseline {
        psi,
        theta,
        phi,
        t: best_cost,
        segments,
    }
}

/// Rotation with a freely oriented control: `V = e^{i r·σ}`, `|r| ≤ π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnconstrainedBaseline {
    pub axis: [f64; 3],
    pub t: f64,
}

pub fn unconstrained_baseline(target: &Su2) -> UnconstrainedBaseline {
    let e = target.to_embedding();
    let v = [e.x, e.y, e.z];
    let n = norm3(v);
    let t = n.atan2(e.w);
    let axis = if n > 0.0 {
        [v[0] / n, v[1] / n, v[2] / n]
    } else {
        [0.0, 0.0, 1.0]
    };
    UnconstrainedBaseline { axis, t }
}

/// One row of the z-rotation timing comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub t_optimal: f64,
    pub t_euler: f64,
    pub t_unconstrained: f64,
}

/// Synthesis times of `e^{iησz/2}`. The optimal time is computed by
/// inversion; the Euler column uses the schedule `ψ = -π/2, θ = η, φ = π/2`.
pub fn sweep_z_rotation(eta_grid: &[f64]) -> Result<Vec<SweepRow>> {
    eta_grid
        .iter()
        .map(|&eta| {
            if !(eta > 0.0 && eta <= 2.0 * PI) {
                return Err(Error::domain(format!("eta = {eta} outside (0, 2pi]")));
            }
            let v = Su2::from_axis_angle([0.0, 0.0, 1.0], eta)?;
            Ok(SweepRow {
                eta,
                t_optimal: invert(&v)?.t,
                t_euler: 0.5 * PI + 0.5 * eta,
                t_unconstrained: 0.5 * eta,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{propagate, step_exact};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn forward_examples() {
        let u = forward(&OptimalCoords::new(0.7, 3.1, 0.0)).unwrap();
        assert_eq!(u.z1(), c(1.0, 0.0));
        assert!(u.z2().norm() == 0.0);

        let (phi0, t) = (0.9, 1.3);
        let u = forward(&OptimalCoords::new(phi0, 0.0, t)).unwrap();
        assert!((u.z1() - c(t.cos(), 0.0)).norm() < 1e-15);
        assert!((u.z2() - I * Complex64::from_polar(t.sin(), -phi0)).norm() < 1e-15);

        assert!(forward(&OptimalCoords::new(0.0, 1.0, -1.0)).is_err());
    }

    #[test]
    fn forward_matches_exponential_form() {
        // z1 = (β₊ e^{iβ₋t} + β₋ e^{-iβ₊t}) / 2α, z2 = e^{-iφ₀}(e^{iβ₋t} - e^{-iβ₊t}) / 2α
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        use rand::Rng;
        for _ in 0..200 {
            let phi0 = rng.random_range(-PI..PI);
            let omega = rng.random_range(-20.0..20.0);
            let t = rng.random_range(0.0..4.0);
            let r = DerivedRates::new(omega);
            let em = Complex64::from_polar(1.0, r.beta_minus * t);
            let ep = Complex64::from_polar(1.0, -r.beta_plus * t);
            let z1 = (em * r.beta_plus + ep * r.beta_minus) / (2.0 * r.alpha);
            let z2 = Complex64::from_polar(1.0, -phi0) * (em - ep) / (2.0 * r.alpha);
            let u = forward(&OptimalCoords::new(phi0, omega, t)).unwrap();
            assert!((u.z1() - z1).norm() < 1e-12);
            assert!((u.z2() - z2).norm() < 1e-12);
        }
    }

    #[test]
    fn derived_rates_identities() {
        for omega in [-40.0, -3.0, -1e-3, 0.0, 0.5, 7.0, 40.0, 1e6] {
            let r = DerivedRates::new(omega);
            assert!(r.alpha >= 1.0);
            assert!((r.beta_plus * r.beta_minus - 1.0).abs() < 1e-14, "{omega}");
            assert!(
                (r.beta_plus + r.beta_minus - 2.0 * r.alpha).abs() <= 1e-14 * r.alpha,
                "{omega}"
            );
        }
    }

    #[test]
    fn z_rotation_closed_form() {
        let eta = PI / 2.0;
        let co = z_rotation_coords(eta).unwrap();
        assert!((co.omega - 6.0 / 7f64.sqrt()).abs() < 1e-14);
        assert!((co.t - PI * 7f64.sqrt() / 4.0).abs() < 1e-14);
        let want = Su2::from_axis_angle([0.0, 0.0, 1.0], eta).unwrap();
        for phi0 in [0.0, 1.0, -2.5] {
            let got = forward(&OptimalCoords::new(phi0, co.omega, co.t)).unwrap();
            assert!(got.max_coord_error(&want) < 1e-14);
        }
        assert!(z_rotation_coords(0.0).is_err());
    }

    #[test]
    fn invert_examples() {
        let id = invert(&Su2::identity()).unwrap();
        assert_eq!(id.t, 0.0);

        let v = Su2::from_axis_angle([0.0, 0.0, 1.0], PI).unwrap();
        let co = invert(&v).unwrap();
        assert!(co.degenerate_phi0);
        assert!((co.omega - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((co.t - PI * 3f64.sqrt() / 2.0).abs() < 1e-12);

        let (theta, eta): (f64, f64) = (0.6, 1.7);
        let v = Su2::from_axis_angle([theta.cos(), theta.sin(), 0.0], eta).unwrap();
        let co = invert(&v).unwrap();
        assert!(!co.degenerate_phi0);
        assert!((co.phi0 - theta).abs() < 1e-9);
        assert!(co.omega.abs() < 1e-8);
        assert!((co.t - eta / 2.0).abs() < 1e-9);
    }

    #[test]
    fn invert_round_trip_small_fuzz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v = Su2::haar_random(&mut rng);
            let co = invert(&v).unwrap();
            let back = forward(&co).unwrap();
            assert!(back.max_coord_error(&v) < 1e-9, "{v:?} -> {co:?}");
            assert!(co.t >= 0.0 && co.t <= PI + 1e-12);
        }
    }

    #[test]
    fn invert_near_degenerate_targets() {
        for &m in &[1e-3f64, 1e-5, 1e-8, 5e-11] {
            for &theta in &[0.3, 2.0, 3.1] {
                let z1 = Complex64::from_polar((1.0 - m * m).sqrt(), theta);
                let v = Su2::new(z1, c(0.0, m)).unwrap();
                let co = invert(&v).unwrap();
                let back = forward(&co).unwrap();
                assert!(back.max_coord_error(&v) < 1e-9, "m = {m}, theta = {theta}: {co:?}");
            }
        }
    }

    #[test]
    fn minus_identity_is_the_farthest_target() {
        let co = invert(&Su2::identity().neg()).unwrap();
        assert!((co.t - PI).abs() < 1e-12);
        assert!(co.omega.abs() < 1e-12);
    }

    #[test]
    fn optimal_waveform_propagates_to_target() {
        let v = Su2::from_axis_angle([0.2, -0.4, 0.9], 2.4).unwrap();
        let co = invert(&v).unwrap();
        let traj = propagate(&co.waveform(), 1.0, co.t, 2).unwrap();
        assert!(traj.end().max_coord_error(&v) < 1e-9);
    }

    #[test]
    fn euler_baseline_examples() {
        let e = euler_baseline(&Su2::identity());
        assert_eq!(e.t, 0.0);
        assert!(e.segments.is_empty());

        for eta in [0.4, PI / 2.0, PI, 3.0 * PI / 2.0] {
            let v = Su2::from_axis_angle([0.0, 0.0, 1.0], eta).unwrap();
            let e = euler_baseline(&v);
            assert!((e.t - (PI / 2.0 + eta / 2.0)).abs() < 1e-12, "eta = {eta}: {e:?}");
            assert!(e.apply(&Su2::identity(), 1.0).max_coord_error(&v) < 1e-12);
        }
    }

    #[test]
    fn euler_baseline_reaches_random_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v = Su2::haar_random(&mut rng);
            let e = euler_baseline(&v);
            let total: f64 = e.segments.iter().map(|s| s.duration).sum();
            assert!((total - e.t).abs() < 1e-12);
            let mut u = Su2::identity();
            for s in &e.segments {
                u = step_exact(&u, s.phi, 1.0, s.duration);
            }
            assert!(u.max_coord_error(&v) < 1e-9);
        }
    }

    #[test]
    fn unconstrained_examples() {
        let eta = 1.1;
        let b = unconstrained_baseline(&Su2::from_axis_angle([0.0, 0.0, 1.0], eta).unwrap());
        assert!((b.t - eta / 2.0).abs() < 1e-15);
        assert!((b.axis[2] - 1.0).abs() < 1e-15);
        assert_eq!(unconstrained_baseline(&Su2::identity()).t, 0.0);
        let b = unconstrained_baseline(&Su2::identity().neg());
        assert_eq!((b.axis, b.t), ([0.0, 0.0, 1.0], PI));
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep_z_rotation(&[PI, 2.0 * PI]).unwrap();
        assert!((rows[0].t_optimal - PI * 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(rows[0].t_euler, PI);
        assert_eq!(rows[0].t_unconstrained, PI / 2.0);
        assert!((rows[1].t_optimal - PI).abs() < 1e-12);
        assert_eq!(rows[1].t_euler, 1.5 * PI);
        assert!(sweep_z_rotation(&[0.0]).is_err());
        let tiny = sweep_z_rotation(&[1e-6]).unwrap();
        assert!(tiny[0].t_optimal < 1e-2);
    }
}
