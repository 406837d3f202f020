//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 8(5,3)).
//!
//! States are fixed-size arrays so the hot loop stays allocation free.

mod tableau;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use tableau::{A, B, C, E3, E5, STAGES};

/// System of first-order equations `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dydt: &mut [f64; N]);

    /// Called after every accepted step; an error aborts the integration.
    fn check(&self, _t: f64, _y: &[f64; N]) -> Result<()> {
        Ok(())
    }
}

/// Error tolerances for the step-size controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl Tolerances {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol }
    }
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// DOP853 driver. Integration is deterministic for fixed tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub tol: Tolerances,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::new(Tolerances::default())
    }
}

impl Integrator {
    pub fn new(tol: Tolerances) -> Self {
        Integrator {
            tol,
            max_steps: 1_000_000,
        }
    }

    /// Integrates from `t0` through every time in `grid` (ascending, all
    /// `>= t0`) and returns the state at each grid time.
    pub fn integrate_grid<S, const N: usize>(
        &self,
        sys: &S,
        t0: f64,
        y0: [f64; N],
        grid: &[f64],
    ) -> Result<(Vec<[f64; N]>, Stats)>
    where
        S: OdeSystem<N>,
    {
        let mut run = Run::new(self, sys, t0, y0);
        let mut out = Vec::with_capacity(grid.len());
        for &t in grid {
            if t < run.t {
                return Err(Error::domain("integration grid must be non-decreasing"));
            }
            run.advance_to(t)?;
            out.push(run.y);
        }
        Ok((out, run.stats))
    }

    pub fn integrate<S, const N: usize>(&self, sys: &S, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]>
    where
        S: OdeSystem<N>,
    {
        let (ys, _) = self.integrate_grid(sys, t0, y0, &[t1])?;
        Ok(ys[0])
    }
}

struct Run<'a, S, const N: usize> {
    cfg: &'a Integrator,
    sys: &'a S,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h: Option<f64>,
    stats: Stats,
}

impl<'a, S: OdeSystem<N>, const N: usize> Run<'a, S, N> {
    fn new(cfg: &'a Integrator, sys: &'a S, t0: f64, y0: [f64; N]) -> Self {
        let mut f = [0.0; N];
        sys.rhs(t0, &y0, &mut f);
        Run {
            cfg,
            sys,
            t: t0,
            y: y0,
            f,
            h: None,
            stats: Stats {
                evaluations: 1,
                ..Stats::default()
            },
        }
    }

    fn scale(&self, y: &[f64; N], k: usize) -> f64 {
        self.cfg.tol.atol + self.cfg.tol.rtol * y[k].abs()
    }

    fn rms_norm(&self, v: &[f64; N]) -> f64 {
        let s: f64 = (0..N)
            .map(|k| {
                let r = v[k] / self.scale(&self.y, k);
                r * r
            })
            .sum();
        (s / N as f64).sqrt()
    }

    /// Hairer's starting-step heuristic.
    fn initial_step(&mut self, span: f64) -> f64 {
        let d0 = self.rms_norm(&self.y);
        let d1 = self.rms_norm(&self.f);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let mut y1 = [0.0; N];
        for k in 0..N {
            y1[k] = self.y[k] + h0 * self.f[k];
        }
        let mut f1 = [0.0; N];
        self.sys.rhs(self.t + h0, &y1, &mut f1);
        self.stats.evaluations += 1;
        let mut df = [0.0; N];
        for k in 0..N {
            df[k] = f1[k] - self.f[k];
        }
        let d2 = self.rms_norm(&df) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let span = t_end - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(span),
        };
        let mut rejected_last = false;
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.cfg.max_steps {
                return Err(Error::TooManySteps {
                    t: self.t,
                    steps: self.cfg.max_steps,
                });
            }
            let h_min = 16.0 * f64::EPSILON * self.t.abs().max(1.0);
            if h < h_min {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            let remaining = t_end - self.t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let (y_new, f_new, err) = self.trial(step);
            if err <= 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                };
                if rejected_last {
                    factor = factor.min(1.0);
                }
                self.t = if last { t_end } else { self.t + step };
                self.y = y_new;
                self.f = f_new;
                self.stats.accepted += 1;
                self.sys.check(self.t, &self.y)?;
                // keep the controller's step, not the truncated one
                if !last || step == h {
                    h = step * factor;
                }
                rejected_last = false;
            } else {
                h = step * (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
                self.stats.rejected += 1;
                rejected_last = true;
            }
            if !h.is_finite() {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
        }
        self.h = Some(h);
        Ok(())
    }

    /// One trial step; returns the 8th-order solution, its derivative and
    /// the scaled error norm of the embedded (5,3) estimate.
    fn trial(&mut self, h: f64) -> ([f64; N], [f64; N], f64) {
        let mut k = [[0.0; N]; STAGES];
        k[0] = self.f;
        let mut tmp = [0.0; N];
        for s in 1..STAGES {
            for i in 0..N {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                tmp[i] = self.y[i] + h * acc;
            }
            self.sys.rhs(self.t + C[s] * h, &tmp, &mut k[s]);
        }
        let mut y_new = [0.0; N];
        for i in 0..N {
            let mut acc = 0.0;
            for j in 0..STAGES {
                acc += B[j] * k[j][i];
            }
            y_new[i] = self.y[i] + h * acc;
        }
        let mut f_new = [0.0; N];
        self.sys.rhs(self.t + h, &y_new, &mut f_new);
        self.stats.evaluations += STAGES;

        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..N {
            let sc = self.cfg.tol.atol + self.cfg.tol.rtol * self.y[i].abs().max(y_new[i].abs());
            let (mut a5, mut a3) = (0.0, 0.0);
            for j in 0..STAGES {
                a5 += E5[j] * k[j][i];
                a3 += E3[j] * k[j][i];
            }
            e5 += (a5 / sc).powi(2);
            e3 += (a3 / sc).powi(2);
        }
        let err = if e5 == 0.0 && e3 == 0.0 {
            0.0
        } else {
            h.abs() * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
        };
        (y_new, f_new, err)
    }
}
