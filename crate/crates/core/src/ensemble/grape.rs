//! Gradient ascent of the ensemble fidelity over piecewise-constant controls.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{validate_chis, GatePair};
use crate::error::{Error, Result};
use crate::propagator::{step_exact, ControlWaveform};
use crate::su2::Su2;

/// `φ = phis[r]` on the `r`-th of `R` equal slices of `[0, t_total]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedControl {
    pub t_total: f64,
    pub phis: Vec<f64>,
}

impl DiscretizedControl {
    pub fn new(t_total: f64, phis: Vec<f64>) -> Result<Self> {
        if phis.is_empty() || !(t_total >= 0.0) || !t_total.is_finite() {
            return Err(Error::domain("discretized control needs R >= 1 and t >= 0"));
        }
        Ok(DiscretizedControl { t_total, phis })
    }

    pub fn dt(&self) -> f64 {
        self.t_total / self.phis.len() as f64
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }

    /// Centre of slice `r`.
    pub fn midpoint(&self, r: usize) -> f64 {
        (r as f64 + 0.5) * self.dt()
    }

    pub fn waveform(&self) -> ControlWaveform {
        ControlWaveform::PiecewiseConstant {
            dt: self.dt(),
            phis: self.phis.clone(),
        }
    }

    /// Final propagator of each spin.
    pub fn propagate(&self, chis: &[f64]) -> Vec<Su2> {
        let dt = self.dt();
        chis.iter()
            .map(|&chi| {
                self.phis
                    .iter()
                    .fold(Su2::identity(), |u, &phi| step_exact(&u, phi, chi, dt))
            })
            .collect()
    }
}

/// Line-search gradient ascent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrapeOptions {
    /// Smallest first trial step of a line search.
    pub initial_step: f64,
    /// Each line search starts at `max(initial_step, growth * last step)`.
    pub growth: f64,
    pub shrink: f64,
    /// Sufficient-increase constant of the backtracking test.
    pub armijo: f64,
    /// Stop once `‖∇F‖_∞` falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for GrapeOptions {
    fn default() -> Self {
        GrapeOptions {
            initial_step: 0.5,
            growth: 2.0,
            shrink: 0.5,
            armijo: 1e-4,
            grad_tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrapeResult {
    pub f_max: f64,
    pub control: DiscretizedControl,
    /// Index of the restart that produced `control`.
    pub restart: usize,
    pub iterations: usize,
    pub grad_norm: f64,
    pub options: GrapeOptions,
}

/// `F = (1/2N) Σ Re Tr[V_i† A_i]` over `N` spins.
fn mean_fidelity(finals: &[Su2], targets: &[Su2]) -> f64 {
    let s: f64 = finals.iter().zip(targets).map(|(a, v)| v.re_trace_inner(a)).sum();
    s / (2.0 * targets.len() as f64)
}

fn check_inputs(targets: &[Su2], chis: &[f64]) -> Result<()> {
    if targets.is_empty() || targets.len() != chis.len() {
        return Err(Error::domain("need one field value per target"));
    }
    if chis.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::domain("field values must be positive and finite"));
    }
    Ok(())
}

/// Fidelity and its exact gradient with respect to every `φ_r`.
///
/// With `S_r = exp(iχδt σ·n̂(φ_r))`, the derivative of `Re Tr[V† S_R…S_1]`
/// in `φ_r` is `Re Tr[W_r† S_r' P_{r-1}]`, where `P` are the forward
/// products and `W_r = (S_R…S_{r+1})† V` the backward ones.
pub fn fidelity_gradient(control: &DiscretizedControl, targets: &[Su2], chis: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_inputs(targets, chis)?;
    Ok(gradient_unchecked(control, targets, chis))
}

fn gradient_unchecked(control: &DiscretizedControl, targets: &[Su2], chis: &[f64]) -> (f64, Vec<f64>) {
    let dt = control.dt();
    let n = control.len();
    let scale = 1.0 / (2.0 * targets.len() as f64);
    let mut grad = vec![0.0; n];
    let mut prefix = vec![Su2::identity(); n + 1];
    let mut total = 0.0;
    for (v, &chi) in targets.iter().zip(chis) {
        let (sn, cs) = (chi * dt).sin_cos();
        let steps: Vec<Su2> = control
            .phis
            .iter()
            .map(|&phi| Su2::from_unit(Complex64::new(cs, 0.0), Complex64::from_polar(sn, -phi) * crate::su2::I))
            .collect();
        for r in 0..n {
            prefix[r + 1] = steps[r].mul(&prefix[r]);
        }
        total += v.re_trace_inner(&prefix[n]);
        let mut w = *v;
        for r in (0..n).rev() {
            // dS/dφ = (0, d) in complex coordinates, so
            // (dS/dφ) P = (-d conj(p2), d conj(p1))
            let d = Complex64::from_polar(sn, -control.phis[r]);
            let p = prefix[r];
            let x1 = -d * p.z2().conj();
            let x2 = d * p.z1().conj();
            grad[r] += scale * 2.0 * (w.z1().conj() * x1 + w.z2().conj() * x2).re;
            w = steps[r].adjoint().mul(&w);
        }
    }
    (scale * total, grad)
}

fn fidelity_only(phis: &[f64], dt: f64, targets: &[Su2], chis: &[f64]) -> f64 {
    let finals: Vec<Su2> = chis
        .iter()
        .map(|&chi| {
            phis.iter()
                .fold(Su2::identity(), |u, &phi| step_exact(&u, phi, chi, dt))
        })
        .collect();
    mean_fidelity(&finals, targets)
}

struct Run {
    f: f64,
    phis: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
}

fn ascend(phis: Vec<f64>, t: f64, targets: &[Su2], chis: &[f64], opts: &GrapeOptions) -> Run {
    let dt = t / phis.len() as f64;
    let mut ctrl = DiscretizedControl { t_total: t, phis };
    let (mut f, mut g) = gradient_unchecked(&ctrl, targets, chis);
    let mut iterations = 0;
    let mut trial = vec![0.0; g.len()];
    let mut last_step = 0.0;
    loop {
        let grad_norm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if grad_norm < opts.grad_tol || iterations >= opts.max_iters {
            return Run {
                f,
                phis: ctrl.phis,
                iterations,
                grad_norm,
            };
        }
        let g2: f64 = g.iter().map(|x| x * x).sum();
        let mut step = opts.initial_step.max(opts.growth * last_step);
        let mut accepted = false;
        while step > 1e-18 {
            for ((tr, p), d) in trial.iter_mut().zip(&ctrl.phis).zip(&g) {
                *tr = p + step * d;
            }
            let ft = fidelity_only(&trial, dt, targets, chis);
            if ft >= f + opts.armijo * step * g2 {
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        iterations += 1;
        if !accepted {
            return Run {
                f,
                phis: ctrl.phis,
                iterations,
                grad_norm,
            };
        }
        last_step = step;
        std::mem::swap(&mut ctrl.phis, &mut trial);
        (f, g) = gradient_unchecked(&ctrl, targets, chis);
    }
}

/// Best fidelity reachable with `r` constant slices over `[0, t]`, from
/// `restarts` random initial controls drawn from `seed`.
pub fn gradient_ascent(
    targets: &GatePair,
    chis: (f64, f64),
    t: f64,
    r: usize,
    restarts: usize,
    seed: u64,
) -> Result<GrapeResult> {
    validate_chis(chis.0, chis.1)?;
    gradient_ascent_many(
        &targets.as_array(),
        &[chis.0, chis.1],
        t,
        r,
        restarts,
        seed,
        &GrapeOptions::default(),
    )
}

/// [`gradient_ascent`] for any number of spins and explicit options.
/// Restarts run in parallel; restart `j` draws from stream `j` of a
/// ChaCha8 generator keyed by `seed`, so results do not depend on the
/// thread count.
pub fn gradient_ascent_many(
    targets: &[Su2],
    chis: &[f64],
    t: f64,
    r: usize,
    restarts: usize,
    seed: u64,
    opts: &GrapeOptions,
) -> Result<GrapeResult> {
    check_inputs(targets, chis)?;
    if r == 0 || restarts == 0 {
        return Err(Error::domain("need at least one slice and one restart"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("evolution time must be finite and non-negative"));
    }
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let phis = (0..r).map(|_| rng.random_range(-PI..PI)).collect();
            ascend(phis, t, targets, chis, opts)
        })
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.f > a.1.f { b } else { a })
        .expect("at least one restart");
    Ok(GrapeResult {
        f_max: best.f,
        control: DiscretizedControl {
            t_total: t,
            phis: best.phis,
        },
        restart,
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        options: *opts,
    })
}

/// `F_max` at each time of `t_grid`, every point searched with the same seed.
pub fn sweep_fmax(
    targets: &GatePair,
    chis: (f64, f64),
    t_grid: &[f64],
    r: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    t_grid
        .iter()
        .map(|&t| gradient_ascent(targets, chis, t, r, restarts, seed).map(|g| (t, g.f_max)))
        .collect()
}
