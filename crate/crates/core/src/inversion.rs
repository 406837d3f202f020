//! Branch search for time-optimal coordinates.
//!
//! Writing `k = ω/2α ∈ (-1, 1)`, `c = 1/α = (1 - k²)^{1/2}` and `s = αt`,
//! the optimal propagator (times a bias phase `e^{-ibt}`) is
//!
//! ```text
//!     z1 = e^{-ibt} e^{-iks} (cos s + i k sin s)
//!     z2 = e^{-ibt} i c e^{-i(φ₀ + ks)} sin s,        t = s c.
//! ```
//!
//! Matching `|z2| = m` and `|z1| = r` leaves a one-parameter curve per
//! branch `s ∈ (Nπ, (N+1)π)`, parametrized by `β ∈ [0, 2π)` through
//! `k = r sin β`, `c cos u = r cos β`, `c sin u = m`, `s = Nπ + u`. The phase
//! of `z1` is then a scalar equation in `β`, solved by adaptive sampling
//! and bisection; `φ₀` follows from the phase of `z2`. Branches are visited
//! in order of their lower time bound `Nπm` until it exceeds the best time.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::su2::{wrap_angle, Su2, I};

/// Below this `|z2|` the target is treated as a pure z-rotation and `φ₀`
/// is a free gauge.
pub const DEGENERATE_Z2: f64 = 1e-10;
/// Targets within this distance of the identity take `t = 0`.
pub const IDENTITY_RADIUS: f64 = 1e-9;
/// Branch times closer than this are reported as ties.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Upper limit on the branch index explored for non-degenerate targets.
pub const MAX_BRANCH: usize = 20_000;
/// Number of branches scanned for biased z-rotation targets, where the
/// infimum over branches is approached only as `ω → ∞`.
pub const DEGENERATE_BIAS_BRANCHES: usize = 64;

/// Largest phase step between adjacent samples before refining.
const MAX_PHASE_STEP: f64 = 0.5;
const MAX_DEPTH: u32 = 60;
/// Accepted root residual in the complex coordinates.
const ACCEPT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub phi0: f64,
    pub omega: f64,
    pub t: f64,
    pub degenerate_phi0: bool,
    /// Another branch reaches the target within [`TIE_TOLERANCE`] of `t`.
    pub tie: bool,
    pub branches: usize,
    /// Max coordinate error of the closed form at the solution.
    pub residual: f64,
}

/// Closed-form endpoint in `(k, s)` variables, bias included.
fn endpoint(phi0: f64, k: f64, c: f64, s: f64, b: f64) -> Su2 {
    let t = s * c;
    let (sn, cs) = s.sin_cos();
    let common = Complex64::from_polar(1.0, -b * t - k * s);
    let z1 = common * Complex64::new(cs, k * sn);
    let z2 = common * I * Complex64::from_polar(c * sn, -phi0);
    Su2::from_unit(z1, z2)
}

pub fn omega_from(k: f64, c: f64) -> f64 {
    2.0 * k / c
}

struct Branch<'a> {
    v: &'a Su2,
    r: f64,
    m: f64,
    n: usize,
    b: f64,
}

struct Point {
    k: f64,
    c: f64,
    s: f64,
    t: f64,
    z1: Complex64,
}

impl Branch<'_> {
    fn point(&self, beta: f64) -> Point {
        let (sb, cb) = beta.sin_cos();
        let k = self.r * sb;
        let x = self.r * cb;
        let c = self.m.hypot(x);
        let (su, cu) = (self.m / c, x / c);
        let u = self.m.atan2(x);
        let s = self.n as f64 * PI + u;
        let t = s * c;
        let sign = if self.n % 2 == 0 { 1.0 } else { -1.0 };
        let z1 = Complex64::from_polar(sign, -k * s - self.b * t) * Complex64::new(cu, k * su);
        Point { k, c, s, t, z1 }
    }

    fn phase(&self, beta: f64) -> f64 {
        (self.point(beta).z1 * self.v.z1().conj()).arg()
    }

    /// Roots of the phase equation with `c <= c_max`, which confines `β`
    /// to windows around `±π/2` once `c_max < 1`.
    fn roots(&self, c_max: f64) -> Vec<f64> {
        let density = (64.0 + 8.0 * (self.n as f64 + 1.0) * PI * self.r) / TAU;
        let windows: Vec<(f64, f64)> = if c_max >= 1.0 {
            vec![(0.0, TAU)]
        } else if c_max < self.m {
            Vec::new()
        } else {
            let x = ((c_max - self.m) * (c_max + self.m)).sqrt() / self.r;
            let w = x.min(1.0).asin();
            vec![(0.5 * PI - w, 0.5 * PI + w), (1.5 * PI - w, 1.5 * PI + w)]
        };
        let phase = |beta: f64| self.phase(beta);
        let mut roots = Vec::new();
        for (lo, hi) in windows {
            let samples = 16 + (density * (hi - lo)) as usize;
            roots.extend(phase_roots(&phase, lo, hi, samples));
        }
        roots
    }
}

/// Minimal-time `(φ₀, ω, t)` with `e^{-ibtσz} · U_opt(φ₀, ω, t) = v`.
pub fn solve(v: &Su2, b: f64) -> Result<Solution> {
    if !b.is_finite() {
        return Err(Error::domain("bias must be finite"));
    }
    let id_err = v.max_coord_error(&Su2::identity());
    if id_err <= IDENTITY_RADIUS {
        return Ok(Solution {
            phi0: 0.0,
            omega: 0.0,
            t: 0.0,
            degenerate_phi0: true,
            tie: false,
            branches: 0,
            residual: id_err,
        });
    }
    let m = v.z2().norm();
    if m < DEGENERATE_Z2 {
        return if b == 0.0 {
            Ok(solve_z_rotation(v))
        } else {
            solve_z_rotation_biased(v, b)
        };
    }
    let r = v.z1().norm();

    let mut best: Option<Solution> = None;
    let mut runner_up = f64::INFINITY;
    let mut branches = 0;
    for n in 0..=MAX_BRANCH {
        let t_best = best.map_or(f64::INFINITY, |s| s.t);
        let t_max = t_best + TIE_TOLERANCE;
        let t_min = n as f64 * PI * m;
        if t_min > t_max {
            break;
        }
        // t = s c >= Nπ c bounds c on this branch
        let c_max = if n == 0 {
            1.0
        } else {
            (t_max / (n as f64 * PI)).min(1.0)
        };
        if !phase_reachable(v.z1().arg(), b, c_max, t_min, t_max) {
            continue;
        }
        branches += 1;
        let br = Branch { v, r, m, n, b };
        for beta in br.roots(c_max) {
            let p = br.point(beta);
            if p.t > t_best + TIE_TOLERANCE && p.t > runner_up {
                continue;
            }
            let phase_z2 = (v.z2() * Complex64::from_polar(1.0, b * p.t)).arg();
            let phi0 = wrap_angle(0.5 * PI + n as f64 * PI - p.k * p.s - phase_z2);
            let residual = endpoint(phi0, p.k, p.c, p.s, b).max_coord_error(v);
            if residual > ACCEPT {
                continue;
            }
            let cand = Solution {
                phi0,
                omega: omega_from(p.k, p.c),
                t: p.t,
                degenerate_phi0: false,
                tie: false,
                branches: 0,
                residual,
            };
            match best {
                Some(cur) if cand.t >= cur.t => {
                    if !same_solution(&cand, &cur) {
                        runner_up = runner_up.min(cand.t);
                    }
                }
                Some(cur) => {
                    if !same_solution(&cand, &cur) {
                        runner_up = runner_up.min(cur.t);
                    }
                    best = Some(cand);
                }
                None => best = Some(cand),
            }
        }
    }
    match best {
        Some(mut s) => {
            s.tie = runner_up - s.t <= TIE_TOLERANCE;
            s.branches = branches;
            Ok(s)
        }
        None => Err(Error::NoConvergence {
            what: "time-optimal inversion",
            residual: f64::INFINITY,
            best_t: None,
        }),
    }
}

/// Necessary condition for a root with `c <= c_max` and `t` in
/// `[t_min, t_max]`. With `ε = 1 - |k| <= c²`, the unbiased phase of `z1`
/// satisfies `|arg z1| <= ε(s + π/2) <= c t + c² π/2`, while the bias adds
/// `-bt`.
fn phase_reachable(target_phase: f64, b: f64, c_max: f64, t_min: f64, t_max: f64) -> bool {
    if c_max >= 1.0 || !t_max.is_finite() {
        return true;
    }
    let bound = c_max * (t_max + c_max * 0.5 * PI) + 1e-12;
    if bound >= PI {
        return true;
    }
    // need target_phase + b t within `bound` of a multiple of 2π
    let (p0, p1) = (target_phase + b * t_min, target_phase + b * t_max);
    let (lo, hi) = (p0.min(p1) - bound, p0.max(p1) + bound);
    (hi / TAU).floor() >= (lo / TAU).ceil()
}

fn same_solution(a: &Solution, b: &Solution) -> bool {
    (a.t - b.t).abs() <= 1e-12 * (1.0 + a.t)
        && (a.omega - b.omega).abs() <= 1e-9 * (1.0 + a.omega.abs())
        && wrap_angle(a.phi0 - b.phi0).abs() <= 1e-9
}

/// `v = e^{iθσz}` with `θ ∈ (0, 2π)`: the first branch with `s = π` is
/// optimal, giving `k = 1 - θ/π`.
fn solve_z_rotation(v: &Su2) -> Solution {
    let theta = v.z1().arg().rem_euclid(TAU);
    let k = 1.0 - theta / PI;
    let c = ((1.0 - k) * (1.0 + k)).sqrt();
    let residual = endpoint(0.0, k, c, PI, 0.0).max_coord_error(v);
    Solution {
        phi0: 0.0,
        omega: omega_from(k, c),
        t: PI * c,
        degenerate_phi0: true,
        tie: false,
        branches: 1,
        residual,
    }
}

/// Biased z-rotation: `s = Nπ`, so `z1 = (-1)^N e^{-i(kNπ + bt)}` with
/// `t = Nπ(1 - k²)^{1/2}`. Each branch is a scalar phase equation in `k`.
fn solve_z_rotation_biased(v: &Su2, b: f64) -> Result<Solution> {
    let target = v.z1().arg();
    let mut best: Option<(f64, f64, f64, usize)> = None;
    for n in 1..=DEGENERATE_BIAS_BRANCHES {
        let nf = n as f64 * PI;
        // k = sin γ keeps c = cos γ accurate near |k| = 1
        let phase = |g: f64| {
            let (k, c) = g.sin_cos();
            wrap_angle(nf - k * nf - b * nf * c - target)
        };
        let samples = 256 + (8.0 * nf * (1.0 + b.abs())) as usize;
        let gs = phase_roots(&phase, -0.5 * PI + 1e-12, 0.5 * PI - 1e-12, samples);
        for g in gs {
            let (k, c) = g.sin_cos();
            let t = nf * c;
            if endpoint(0.0, k, c, nf, b).max_coord_error(v) > ACCEPT {
                continue;
            }
            if best.is_none_or(|(bt, ..)| t < bt) {
                best = Some((t, k, c, n));
            }
        }
    }
    let (t, k, c, n) = best.ok_or(Error::NoConvergence {
        what: "biased z-rotation inversion",
        residual: f64::INFINITY,
        best_t: None,
    })?;
    let residual = endpoint(0.0, k, c, n as f64 * PI, b).max_coord_error(v);
    if residual > ACCEPT {
        return Err(Error::NoConvergence {
            what: "biased z-rotation inversion",
            residual,
            best_t: Some(t),
        });
    }
    Ok(Solution {
        phi0: 0.0,
        omega: omega_from(k, c),
        t,
        degenerate_phi0: true,
        tie: false,
        branches: DEGENERATE_BIAS_BRANCHES,
        residual,
    })
}

/// Roots in `[lo, hi]` of an angle-valued function, from `samples` uniform
/// samples. Sign changes are refined by bisection, subdividing wherever the
/// phase moves too fast to be tracked. Local minima of `|f|` are refined by
/// golden-section search so that close root pairs and tangencies between
/// samples are not lost.
fn phase_roots<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let h = (hi - lo) / samples as f64;
    let xs: Vec<f64> = (0..=samples)
        .map(|j| if j == samples { hi } else { lo + j as f64 * h })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for j in 0..samples {
        scan(f, xs[j], fs[j], xs[j + 1], fs[j + 1], 0, &mut out);
    }
    for j in 1..samples {
        let fm = fs[j];
        let sign = fm.signum();
        let (da, db) = (wrap_angle(fs[j - 1] - fm), wrap_angle(fs[j + 1] - fm));
        // |f| has a sampled local minimum that could dip through zero
        if fm == 0.0 || sign * da < 0.0 || sign * db < 0.0 || fm.abs() > 4.0 * da.abs().max(db.abs()) {
            continue;
        }
        let g = |x: f64| sign * (fm + wrap_angle(f(x) - fm));
        let (x, gx) = golden_min(&g, xs[j - 1], xs[j + 1]);
        if gx <= 0.0 {
            out.push(bisect(f, xs[j - 1], fs[j - 1], x));
            out.push(bisect(f, x, f(x), xs[j + 1]));
        } else if gx <= TANGENT {
            out.push(x);
        }
    }
    out
}

/// Phase minima below this count as (tangential) roots; the caller's
/// residual check has the final say.
const TANGENT: f64 = 1e-9;

fn scan<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, depth: u32, out: &mut Vec<f64>) {
    let d = wrap_angle(fb - fa);
    if d.abs() > MAX_PHASE_STEP && depth < MAX_DEPTH && b - a > 1e-15 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        scan(f, a, fa, mid, fm, depth + 1, out);
        scan(f, mid, fm, b, fb, depth + 1, out);
        return;
    }
    let end = fa + d;
    if fa == 0.0 {
        out.push(a);
    } else if fa.signum() != end.signum() && end != 0.0 {
        out.push(bisect(f, a, fa, b));
    }
}

/// Bisection on the phase unwrapped relative to `fa`.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, fa: f64, mut b: f64) -> f64 {
    let unwrapped = |x: f64| fa + wrap_angle(f(x) - fa);
    let sa = fa.signum();
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if unwrapped(mid).signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    if unwrapped(a).abs() <= unwrapped(b).abs() {
        a
    } else {
        b
    }
}

fn golden_min<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-15 * (1.0 + a.abs()) {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
        if gc.min(gd) <= 0.0 {
            break;
        }
    }
    if gc <= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}
