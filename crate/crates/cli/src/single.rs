//! Single-spin commands: `synthesize`, `trajectory`, `sweep`.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use serde_json::{json, Value};

use spinsynth::bias::{invert_bias_with_report, BiasCoords};
use spinsynth::homogeneous::{invert_with_report, sweep_z_rotation};
use spinsynth::propagator::{bloch_trajectory, propagate_with};
use spinsynth::{Su2, Tolerances};

use crate::error::{CliError, CliResult};
use crate::output::{self, to_json, Run};

/// A target gate, as an axis-angle pair or as complex coordinates.
#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    /// Rotation axis; the target is `exp(i angle/2 axis·σ)`.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    pub axis: Option<Vec<f64>>,
    /// Rotation angle in radians (requires --axis).
    #[arg(long, requires = "axis", allow_negative_numbers = true)]
    pub angle: Option<f64>,
    /// Real and imaginary part of z1; the pair is normalized.
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true, conflicts_with = "axis")]
    pub z1: Option<Vec<f64>>,
    /// Real and imaginary part of z2.
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true, requires = "z1")]
    pub z2: Option<Vec<f64>>,
}

impl TargetArgs {
    pub fn given(&self) -> bool {
        self.axis.is_some() || self.z1.is_some()
    }

    pub fn resolve(&self) -> CliResult<Su2> {
        match (&self.axis, self.angle, &self.z1, &self.z2) {
            (Some(axis), Some(angle), None, None) => Ok(Su2::from_axis_angle([axis[0], axis[1], axis[2]], angle)?),
            (Some(_), None, ..) => Err(CliError::usage("--axis needs --angle")),
            (None, None, Some(z1), z2) => {
                let z2 = z2.as_deref().unwrap_or(&[0.0, 0.0]);
                Ok(Su2::normalized(
                    Complex64::new(z1[0], z1[1]),
                    Complex64::new(z2[0], z2[1]),
                )?)
            }
            _ => Err(CliError::usage("give a target with --axis/--angle or --z1/--z2")),
        }
    }
}

fn su2_json(u: &Su2) -> Value {
    json!({"z1": [u.z1().re, u.z1().im], "z2": [u.z2().re, u.z2().im]})
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Constant bias field `b σz`.
    #[arg(long, allow_negative_numbers = true)]
    pub bias: Option<f64>,
    /// Also write the result here (default: stdout only, unless the output
    /// directory is set in the environment).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn synthesize(args: &SynthesizeArgs) -> CliResult<()> {
    let v = args.target.resolve()?;
    let run = Run::new("synthesize", json!({"target": su2_json(&v), "bias": args.bias}));
    let result = match args.bias {
        None => {
            let rep = invert_with_report(&v)?;
            let co = rep.coords;
            json!({
                "target": su2_json(&v),
                "phi0": co.phi0,
                "omega": co.omega,
                "t": co.t,
                "degenerate_phi0": co.degenerate_phi0,
                "tie": rep.tie,
                "branches_searched": rep.branches_searched,
                "residual": rep.residual,
                "waveform": co.waveform(),
            })
        }
        Some(b) => {
            let rep = invert_bias_with_report(&v, b)?;
            let co = rep.coords;
            json!({
                "target": su2_json(&v),
                "phi0": co.phi0,
                "omega": co.omega,
                "t": co.t,
                "b": b,
                "lab_rate": co.lab_rate(),
                "degenerate_phi0": co.degenerate_phi0,
                "tie": rep.tie,
                "branches_searched": rep.branches_searched,
                "residual": rep.residual,
                "waveform": co.lab_waveform(),
            })
        }
    };
    let result = to_json(&result);
    println!(
        "{}",
        serde_json::to_string_pretty(&result).expect("json values serialize")
    );
    if args.out.is_some() || output::out_dir_configured() {
        let path = output::resolve(args.out.as_deref(), "synthesize.json");
        output::write_json(&path, &result)?;
        let mut run = run;
        run.output(&path);
        run.finish(&path, json!({"t": result["t"]}))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Explicit coordinates instead of a target: `φ₀`.
    #[arg(long, allow_negative_numbers = true, requires_all = ["omega", "time"], conflicts_with_all = ["axis", "z1"])]
    pub phi0: Option<f64>,
    /// Rotating-frame rate `ω` (with --phi0).
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Duration (with --phi0).
    #[arg(long = "time", allow_negative_numbers = true)]
    pub time: Option<f64>,
    /// Constant bias field `b σz`; a target is synthesized under this bias.
    #[arg(long, allow_negative_numbers = true)]
    pub bias: Option<f64>,
    /// Number of uniformly spaced samples, endpoints included.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Initial spin direction; adds `sx,sy,sz` columns.
    #[arg(long, num_args = 3, value_names = ["SX", "SY", "SZ"], allow_negative_numbers = true)]
    pub spin: Option<Vec<f64>>,
    /// CSV path (default `trajectory.csv` in the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "w", "x", "y", "z", "re_z1", "im_z1", "re_z2", "im_z2", "px", "py", "pz",
];

pub fn trajectory(args: &TrajectoryArgs) -> CliResult<()> {
    let b = args.bias.unwrap_or(0.0);
    let coords = match (args.phi0, args.omega, args.time) {
        (Some(phi0), Some(omega), Some(t)) => BiasCoords::new(phi0, omega, t, b),
        _ if args.target.given() => invert_bias_with_report(&args.target.resolve()?, b)?.coords,
        _ => return Err(CliError::usage("give a target or --phi0/--omega/--time")),
    };
    if args.samples < 2 {
        return Err(CliError::usage("--samples must be at least 2"));
    }
    let tol = Tolerances::default();
    let traj = propagate_with(&coords.lab_waveform(), 1.0, coords.t, args.samples, tol)?;
    let spins = match &args.spin {
        Some(s) => Some(bloch_trajectory(&traj, [s[0], s[1], s[2]])?),
        None => None,
    };
    let mut header = TRAJECTORY_HEADER.to_vec();
    if spins.is_some() {
        header.extend(["sx", "sy", "sz"]);
    }
    let rows = traj.states.iter().enumerate().map(|(k, u)| {
        let e = u.to_embedding();
        let p = u.hopf_project().as_array();
        let mut row = vec![
            traj.times[k],
            e.w,
            e.x,
            e.y,
            e.z,
            u.z1().re,
            u.z1().im,
            u.z2().re,
            u.z2().im,
            p[0],
            p[1],
            p[2],
        ];
        if let Some(s) = &spins {
            row.extend(s[k]);
        }
        row
    });
    let path = output::resolve(args.out.as_deref(), "trajectory.csv");
    output::write_csv(&path, &header, rows)?;
    let mut run = Run::new(
        "trajectory",
        json!({"coords": coords, "samples": args.samples, "spin": args.spin}),
    )
    .tolerances(&tol);
    run.output(&path);
    run.finish(&path, json!({"t": coords.t, "max_norm_drift": traj.max_norm_drift()}))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Grid `η = 2πk/N`, `k = 1..N`.
    #[arg(long, default_value_t = 360, conflicts_with = "eta")]
    pub points: usize,
    /// Explicit angles in `(0, 2π]`.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// CSV path (default `sweep.csv` in the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let grid: Vec<f64> = match &args.eta {
        Some(etas) => etas.clone(),
        None => {
            if args.points == 0 {
                return Err(CliError::usage("--points must be positive"));
            }
            (1..=args.points)
                .map(|k| 2.0 * PI * k as f64 / args.points as f64)
                .collect()
        }
    };
    let rows = sweep_z_rotation(&grid)?;
    let path = output::resolve(args.out.as_deref(), "sweep.csv");
    output::write_csv(
        &path,
        &["eta", "t_optimal", "t_euler", "t_unconstrained"],
        rows.iter()
            .map(|r| vec![r.eta, r.t_optimal, r.t_euler, r.t_unconstrained]),
    )?;
    let mut run = Run::new("sweep", json!({"eta": grid}));
    run.output(&path);
    run.finish(&path, json!({"rows": rows.len()}))?;
    Ok(())
}
