//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are pinned below.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use spinsynth::bias::{forward_bias, invert_bias, BiasCoords};
use spinsynth::ensemble::{
    ensemble_forward_with, fidelity_gradient, gradient_ascent, integrate_phi, DiscretizedControl, EnsembleCoords,
    GatePair,
};
use spinsynth::homogeneous::{forward, invert, sweep_z_rotation, OptimalCoords};
use spinsynth::propagator::{check_identities, propagate, ControlWaveform};
use spinsynth::su2::{plane_fit_residual, stereographic_north, wrap_angle};
use spinsynth::{Su2, Tolerances};

const ROUND_TRIP_TOL: f64 = 1e-9;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(10);
const Z_ROTATION_TOL: f64 = 1e-10;
const SWEEP_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-6;
const IDENTITY_SAMPLES: usize = 10_000;
const PLANE_TOL: f64 = 1e-8;
const ARC_TOL: f64 = 1e-4;
const STEREO_TOL: f64 = 1e-10;
const BIAS_REDUCTION_TOL: f64 = 1e-12;
const BIAS_ROUND_TRIP_TOL: f64 = 1e-9;
const FMAX_AT_OPTIMUM: f64 = 0.999;
const WAVEFORM_RMS_TOL: f64 = 0.1;
const GRAPE_BUDGET: Duration = Duration::from_secs(300);
const FMAX_BELOW_OPTIMUM: f64 = 1.0 - 1e-4;
const BRUTE_SLACK: f64 = 2e-3;
const GRADIENT_REL_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

#[derive(Deserialize)]
struct ReferencePair {
    coords: EnsembleCoords,
    tolerances: Tolerances,
    targets: GatePair,
}

fn reference_pair() -> ReferencePair {
    serde_json::from_str(include_str!("fixtures/reference_pair.json")).expect("fixture parses")
}

fn closed_form_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let targets: Vec<Su2> = (0..1000).map(|_| Su2::haar_random(&mut rng)).collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for v in &targets {
        let co = invert(v).expect("every target is invertible");
        worst = worst.max(forward(&co).unwrap().max_coord_error(v));
    }
    let took = start.elapsed();
    outcome(
        worst < ROUND_TRIP_TOL && took < ROUND_TRIP_BUDGET,
        format!("1000 Haar targets, max error {worst:.2e}, {took:.2?}"),
    )
}

fn z_rotation_formula() -> Outcome {
    let mut worst = 0.0f64;
    for eta in [0.5 * PI, PI, 1.5 * PI, 2.0 * PI] {
        let nu = 1.0 - eta / (2.0 * PI);
        let want_omega = 2.0 * nu / (1.0 - nu * nu).sqrt();
        let want_t = PI * (1.0 - nu * nu).sqrt();
        let co = invert(&Su2::from_axis_angle([0.0, 0.0, 1.0], eta).unwrap()).unwrap();
        worst = worst.max((co.omega - want_omega).abs()).max((co.t - want_t).abs());
    }
    outcome(worst < Z_ROTATION_TOL, format!("max (omega, t) deviation {worst:.2e}"))
}

fn sweep_ordering() -> Outcome {
    let n = 720;
    let grid: Vec<f64> = (1..=n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let rows = sweep_z_rotation(&grid).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut endpoint_ok = true;
    for r in &rows {
        worst = worst
            .max((r.t_unconstrained - 0.5 * r.eta).abs() - SWEEP_TOL)
            .max((r.t_euler - (0.5 * PI + 0.5 * r.eta)).abs() - SWEEP_TOL)
            .max(r.t_unconstrained - r.t_optimal - SWEEP_TOL)
            .max(r.t_optimal - r.t_euler - SWEEP_TOL);
    }
    let last = rows.last().unwrap();
    endpoint_ok &= (last.t_optimal - PI).abs() < SWEEP_TOL;
    outcome(
        worst <= 0.0 && endpoint_ok,
        format!("{n} points, t_optimal(2pi) = {:.15}", last.t_optimal),
    )
}

fn propagator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let co = OptimalCoords::new(
            rng.random_range(-PI..PI),
            rng.random_range(-8.0..8.0),
            rng.random_range(0.0..PI),
        );
        let got = propagate(&co.waveform(), 1.0, co.t, 2).unwrap().end();
        worst = worst.max(got.max_coord_error(&forward(&co).unwrap()));
    }
    outcome(
        worst < ORACLE_TOL,
        format!("100 linear waveforms, max error {worst:.2e}"),
    )
}

fn identity_residuals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let waveform = if k % 2 == 0 {
            ControlWaveform::Linear {
                phi0: rng.random_range(-PI..PI),
                omega: rng.random_range(-4.0..4.0),
            }
        } else {
            ControlWaveform::OdeDefined {
                phi0: rng.random_range(-PI..PI),
                phidot0: rng.random_range(-2.0..2.0),
                phiddot0: rng.random_range(-2.0..2.0),
                a: rng.random_range(-2.0..2.0),
                b: rng.random_range(-2.0..2.0),
            }
        };
        let chi = rng.random_range(0.5..2.0);
        let t = rng.random_range(0.5..PI);
        let traj = propagate(&waveform, chi, t, IDENTITY_SAMPLES).unwrap();
        let r = check_identities(&traj, chi).unwrap();
        worst = worst.max(r.norm).max(r.phase).max(r.modulus);
    }
    outcome(
        worst < IDENTITY_TOL,
        format!("20 trajectories x {IDENTITY_SAMPLES} samples, max residual {worst:.2e}"),
    )
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut plane, mut arc, mut stereo) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let co = OptimalCoords::new(
            rng.random_range(-PI..PI),
            rng.random_range(-6.0..6.0),
            rng.random_range(0.1..PI),
        );
        let traj = propagate(&co.waveform(), 1.0, co.t, 2001).unwrap();
        let pts: Vec<[f64; 3]> = traj.hopf_points().iter().map(|p| p.as_array()).collect();
        plane = plane.max(plane_fit_residual(&pts));
        arc = arc.max((traj.s2_arclength().length - 2.0 * co.t).abs());

        for k in 1..=20 {
            let u = forward(&OptimalCoords {
                t: co.t * k as f64 / 20.0,
                ..co
            })
            .unwrap();
            stereo = stereo.max(stereo_error(&u));
        }
    }
    for _ in 0..200 {
        stereo = stereo.max(stereo_error(&Su2::haar_random(&mut rng)));
    }
    outcome(
        plane < PLANE_TOL && arc < ARC_TOL && stereo < STEREO_TOL,
        format!("plane fit {plane:.2e}, |L - 2t| {arc:.2e}, stereographic {stereo:.2e}"),
    )
}

/// Relative error of `ζ(p̂(U)) = z1/z2`.
fn stereo_error(u: &Su2) -> f64 {
    let want = u.z1() / u.z2();
    match stereographic_north(&u.hopf_project()).finite() {
        Some(z) => (z - want).norm() / want.norm().max(1.0),
        None => {
            if u.z2().norm() < 1e-7 {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }
}

fn bias() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut reduction = 0.0f64;
    for _ in 0..100 {
        let co = OptimalCoords::new(
            rng.random_range(-PI..PI),
            rng.random_range(-6.0..6.0),
            rng.random_range(0.0..PI),
        );
        let b = forward_bias(&BiasCoords::new(co.phi0, co.omega, co.t, 0.0)).unwrap();
        reduction = reduction.max(b.max_coord_error(&forward(&co).unwrap()));
        let v = Su2::haar_random(&mut rng);
        reduction = reduction.max((invert_bias(&v, 0.0).unwrap().t - invert(&v).unwrap().t).abs());
    }
    let mut round_trip = 0.0f64;
    for _ in 0..500 {
        let v = Su2::haar_random(&mut rng);
        let b = rng.random_range(-4.0..=4.0);
        let co = invert_bias(&v, b).unwrap();
        round_trip = round_trip.max(forward_bias(&co).unwrap().max_coord_error(&v));
    }
    outcome(
        reduction < BIAS_REDUCTION_TOL && round_trip < BIAS_ROUND_TRIP_TOL,
        format!("b = 0 deviation {reduction:.2e}, 500 round trips max error {round_trip:.2e}"),
    )
}

/// RMS of the wrapped difference between GRAPE slices and the control
/// equation's solution at the slice midpoints.
fn waveform_rms(control: &DiscretizedControl, coords: &EnsembleCoords) -> f64 {
    let r = control.len();
    let curve = integrate_phi(coords, 2 * r + 1).unwrap();
    let sum: f64 = (0..r)
        .map(|k| wrap_angle(control.phis[k] - curve.phi[2 * k + 1]).powi(2))
        .sum();
    (sum / r as f64).sqrt()
}

fn ensemble_instance() -> Outcome {
    let fx = reference_pair();
    let regenerated = ensemble_forward_with(&fx.coords, fx.tolerances).unwrap();
    let fixture_err = regenerated.max_frobenius_error(&fx.targets);
    let start = Instant::now();
    let g = gradient_ascent(&fx.targets, (fx.coords.chi1, fx.coords.chi2), 3.0, 50, 8, 2024).unwrap();
    let took = start.elapsed();
    let rms = waveform_rms(&g.control, &fx.coords);
    outcome(
        fixture_err < 1e-10 && g.f_max >= FMAX_AT_OPTIMUM && rms < WAVEFORM_RMS_TOL && took < GRAPE_BUDGET,
        format!(
            "F_max {:.8} (restart {}), waveform RMS {rms:.2e} rad, {took:.2?}",
            g.f_max, g.restart
        ),
    )
}

fn optimality_witness() -> Outcome {
    let fx = reference_pair();
    let g = gradient_ascent(&fx.targets, (fx.coords.chi1, fx.coords.chi2), 2.7, 50, 8, 2024).unwrap();
    outcome(
        g.f_max <= FMAX_BELOW_OPTIMUM,
        format!("F_max(t = 2.7) = {:.8}", g.f_max),
    )
}

/// Smallest distance to `v` over `φ₀` at fixed `(ω, t)`. The optimal
/// propagator's `z1` and `|z2|` do not depend on `φ₀`, and `φ₀` rotates the
/// phase of `z2` freely.
fn phase_free_distance(v: &Su2, omega: f64, t: f64) -> f64 {
    let u = forward(&OptimalCoords::new(0.0, omega, t)).unwrap();
    let d1 = (u.z1() - v.z1()).norm_sqr();
    let d2 = (u.z2().norm() - v.z2().norm()).powi(2);
    (0.5 * (d1 + d2)).sqrt()
}

/// Scans rows `t' < t_opt - slack` of an `(ω, t)` grid for a synthesis of
/// `v`. Returns the smallest distance found and the row where it occurs.
///
/// `|z2| = |sin αt|/α ≤ 1/α`, so matching `|v2| = m` needs
/// `|ω| ≤ 2 (1/m² - 1)^{1/2}`. Each row is scanned coarsely in `ω` and the
/// local minima are refined by golden-section search.
fn brute_force(v: &Su2, t_opt: f64, rows: usize, threshold: f64) -> (f64, f64) {
    let m = v.z2().norm() - threshold * 2f64.sqrt();
    let w_max = if m > 0.0 {
        2.0 * (1.0 / (m * m) - 1.0).max(0.0).sqrt()
    } else {
        40.0
    };
    let w_max = w_max.min(40.0);
    let cols = ((2.0 * w_max / 0.02).ceil() as usize).max(8);
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..rows {
        let t = PI * i as f64 / rows as f64;
        if t >= t_opt - BRUTE_SLACK {
            break;
        }
        let ws: Vec<f64> = (0..=cols)
            .map(|j| -w_max + 2.0 * w_max * j as f64 / cols as f64)
            .collect();
        let ds: Vec<f64> = ws.iter().map(|&w| phase_free_distance(v, w, t)).collect();
        for j in 0..=cols {
            let left = if j > 0 { ds[j - 1] } else { f64::INFINITY };
            let right = if j < cols { ds[j + 1] } else { f64::INFINITY };
            if ds[j] > left || ds[j] > right || ds[j] > 0.05 {
                continue;
            }
            let lo = ws[j.saturating_sub(1)];
            let hi = ws[(j + 1).min(cols)];
            let d = golden_min(|w| phase_free_distance(v, w, t), lo, hi);
            if d < best.0 {
                best = (d, t);
            }
        }
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

fn sampled_minimality() -> Outcome {
    // rows every π/2000; a synthesis at any time between rows lies within
    // half a row of one, and |dU/dt| = 1 moves the distance by at most
    // Δt / (2√2)
    let rows = 2000;
    let threshold = PI / rows as f64 / (2.0 * 2f64.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let start = Instant::now();
    let mut violations = 0;
    let mut closest = f64::INFINITY;
    for _ in 0..200 {
        let v = Su2::haar_random(&mut rng);
        let t_opt = invert(&v).unwrap().t;
        let (d, _) = brute_force(&v, t_opt, rows, threshold);
        closest = closest.min(d);
        if d < threshold {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!(
            "200 targets, {violations} faster grid syntheses, closest miss {closest:.2e} (threshold {threshold:.2e}), {:.2?}",
            start.elapsed()
        ),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let chis = [rng.random_range(0.2..1.0), rng.random_range(1.0..2.0)];
        let r = rng.random_range(5..40);
        let phis: Vec<f64> = (0..r).map(|_| rng.random_range(-PI..PI)).collect();
        let ctrl = DiscretizedControl::new(rng.random_range(0.5..4.0), phis).unwrap();
        let targets = [Su2::haar_random(&mut rng), Su2::haar_random(&mut rng)];
        let (_, g) = fidelity_gradient(&ctrl, &targets, &chis).unwrap();
        let fd: Vec<f64> = (0..r)
            .map(|k| {
                let shifted = |d: f64| {
                    let mut c = ctrl.clone();
                    c.phis[k] += d;
                    fidelity_gradient(&c, &targets, &chis).unwrap().0
                };
                (shifted(h) - shifted(-h)) / (2.0 * h)
            })
            .collect();
        let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(err / scale);
    }
    outcome(
        worst < GRADIENT_REL_TOL,
        format!("10 instances, max relative error {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closed-form round trip", closed_form_round_trip),
        ("z-rotation time formula", z_rotation_formula),
        ("z-rotation sweep ordering", sweep_ordering),
        ("propagator vs closed form", propagator_oracle),
        ("identity residuals", identity_residuals),
        ("geometry", geometry),
        ("bias reduction and round trip", bias),
        ("two-spin instance at t = 3", ensemble_instance),
        ("optimality witness at t = 2.7", optimality_witness),
        ("sampled global minimality", sampled_minimality),
        ("gradient check", gradient_check),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} [{:>2}] {name}: {}", k + 1, o.detail);
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
