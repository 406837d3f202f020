//! Inversion of the two-spin coordinate map by multi-start shooting.
//!
//! The unknowns `(φ₀, φ'₀, φ''₀, a, b, t)` are matched to the eight real
//! coordinates of the target pair with a damped Gauss–Newton
//! (Levenberg–Marquardt) iteration on finite-difference Jacobians. Each
//! start is independent; the shortest converged solution wins.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensemble_forward_with, validate_chis, EnsembleCoords, GatePair};
use crate::error::{Error, Result};
use crate::homogeneous::invert;
use crate::ode::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Accept a start once the residual norm falls below this.
    pub accept: f64,
    /// Half-width of the uniform box for `φ'₀`, `φ''₀`, `a`, `b`.
    pub init_box: f64,
    /// Initial times are drawn from `[t_lower, t_lower + t_span]`.
    pub t_span: f64,
    pub tol: Tolerances,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            starts: 64,
            seed: 0,
            max_iters: 200,
            accept: 1e-8,
            init_box: 4.0,
            t_span: 2.0 * PI,
            tol: Tolerances::new(1e-11, 1e-13),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingReport {
    pub coords: EnsembleCoords,
    pub residual: f64,
    /// Lower bound on the time from the single-spin optimal times.
    pub t_lower: f64,
    pub converged_starts: usize,
}

/// Shortest-time generalized coordinates reaching `targets`.
pub fn ensemble_invert(targets: &GatePair, chis: (f64, f64)) -> Result<EnsembleCoords> {
    ensemble_invert_with(targets, chis, &ShootingOptions::default(), &[]).map(|r| r.coords)
}

fn pack(c: &EnsembleCoords) -> [f64; 6] {
    [c.phi0, c.phidot0, c.phiddot0, c.a, c.b, c.t]
}

fn unpack(x: &[f64], chis: (f64, f64)) -> EnsembleCoords {
    EnsembleCoords {
        phi0: x[0],
        phidot0: x[1],
        phiddot0: x[2],
        a: x[3],
        b: x[4],
        t: x[5],
        chi1: chis.0,
        chi2: chis.1,
    }
}

fn residual(x: &[f64], chis: (f64, f64), targets: &GatePair, tol: Tolerances) -> Option<DVector<f64>> {
    if x[5] < 0.0 {
        return None;
    }
    let pair = ensemble_forward_with(&unpack(x, chis), tol).ok()?;
    let mut r = DVector::zeros(8);
    for (k, (a, v)) in [(pair.u1, targets.u1), (pair.u2, targets.u2)].iter().enumerate() {
        let d1 = a.z1() - v.z1();
        let d2 = a.z2() - v.z2();
        r[4 * k] = d1.re;
        r[4 * k + 1] = d1.im;
        r[4 * k + 2] = d2.re;
        r[4 * k + 3] = d2.im;
    }
    Some(r)
}

struct Outcome {
    x: [f64; 6],
    norm: f64,
}

fn levenberg_marquardt(
    x0: [f64; 6],
    chis: (f64, f64),
    targets: &GatePair,
    t_lower: f64,
    opts: &ShootingOptions,
) -> Option<Outcome> {
    let mut x = x0;
    x[5] = x[5].max(t_lower);
    let mut r = residual(&x, chis, targets, opts.tol)?;
    let mut norm = r.norm();
    let mut lambda = 1e-3;
    for _ in 0..opts.max_iters {
        if norm < opts.accept {
            break;
        }
        let mut jac = DMatrix::zeros(8, 6);
        for j in 0..6 {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let (rp, rm) = if j == 5 && xm[5] < 0.0 {
                (residual(&xp, chis, targets, opts.tol)?, r.clone())
            } else {
                (
                    residual(&xp, chis, targets, opts.tol)?,
                    residual(&xm, chis, targets, opts.tol)?,
                )
            };
            let span = if j == 5 && xm[5] < 0.0 { h } else { 2.0 * h };
            jac.set_column(j, &((rp - rm) / span));
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for d in 0..6 {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut xn = x;
            for d in 0..6 {
                xn[d] += step[d];
            }
            xn[5] = xn[5].max(t_lower);
            if let Some(rn) = residual(&xn, chis, targets, opts.tol) {
                let nn = rn.norm();
                if nn < norm {
                    x = xn;
                    r = rn;
                    norm = nn;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some(Outcome { x, norm })
}

/// Multi-start shooting. `warm_starts` are tried in addition to the random
/// starts drawn from `opts.seed`.
pub fn ensemble_invert_with(
    targets: &GatePair,
    chis: (f64, f64),
    opts: &ShootingOptions,
    warm_starts: &[EnsembleCoords],
) -> Result<ShootingReport> {
    validate_chis(chis.0, chis.1)?;
    let t_lower = invert(&targets.u1)?.t / chis.0;
    let t_lower = t_lower.max(invert(&targets.u2)?.t / chis.1);

    if targets.max_frobenius_error(&GatePair::identity()) < opts.accept {
        return Ok(ShootingReport {
            coords: unpack(&[0.0; 6], chis),
            residual: targets.max_frobenius_error(&GatePair::identity()),
            t_lower,
            converged_starts: 1,
        });
    }

    let mut starts: Vec<[f64; 6]> = warm_starts.iter().map(pack).collect();
    for j in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(j as u64);
        let w = opts.init_box;
        starts.push([
            rng.random_range(-PI..PI),
            rng.random_range(-w..w),
            rng.random_range(-w..w),
            rng.random_range(-w..w),
            rng.random_range(-w..w),
            t_lower + rng.random_range(0.0..opts.t_span),
        ]);
    }
    let outcomes: Vec<Option<Outcome>> = starts
        .par_iter()
        .map(|x0| levenberg_marquardt(*x0, chis, targets, t_lower, opts))
        .collect();

    let mut best: Option<&Outcome> = None;
    let mut best_failed: Option<&Outcome> = None;
    let mut converged = 0;
    for o in outcomes.iter().flatten() {
        if o.norm < opts.accept {
            converged += 1;
            if best.is_none_or(|b| o.x[5] < b.x[5]) {
                best = Some(o);
            }
        } else if best_failed.is_none_or(|b| o.norm < b.norm) {
            best_failed = Some(o);
        }
    }
    match best {
        Some(o) => {
            let mut coords = unpack(&o.x, chis);
            coords.phi0 = crate::su2::wrap_angle(coords.phi0);
            Ok(ShootingReport {
                coords,
                residual: o.norm,
                t_lower,
                converged_starts: converged,
            })
        }
        None => Err(Error::NoConvergence {
            what: "ensemble shooting",
            residual: best_failed.map_or(f64::INFINITY, |o| o.norm),
            best_t: best_failed.map(|o| o.x[5]),
        }),
    }
}
