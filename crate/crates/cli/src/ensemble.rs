//! Two-spin commands driven by a JSON config file.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use spinsynth::ensemble::{
    ensemble_forward_with, ensemble_invert_with, gradient_ascent_many, integrate_phi_with, validate_chis,
    EnsembleCoords, GatePair, GrapeOptions, ShootingOptions,
};
use spinsynth::Tolerances;

use crate::error::{CliError, CliResult};
use crate::output::{self, to_json, Run};

/// Tolerance for generating targets from coordinates and for waveforms.
pub const TIGHT: Tolerances = Tolerances::new(1e-12, 1e-14);

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlCoords {
    pub phi0: f64,
    pub phidot0: f64,
    pub phiddot0: f64,
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrapeConfig {
    pub t: f64,
    pub slices: usize,
    pub restarts: usize,
    #[serde(default)]
    pub options: GrapeOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub t_grid: Vec<f64>,
    pub slices: usize,
    pub restarts: usize,
    #[serde(default)]
    pub options: GrapeOptions,
}

/// Contents of an ensemble config file. Targets are given directly or
/// generated from `coords`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub chis: [f64; 2],
    #[serde(default)]
    pub coords: Option<ControlCoords>,
    #[serde(default)]
    pub targets: Option<GatePair>,
    /// Samples of the `t,phi` waveform output.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grape: Option<GrapeConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub shooting: Option<Value>,
}

fn default_samples() -> usize {
    301
}

impl EnsembleConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        validate_chis(cfg.chis[0], cfg.chis[1])?;
        Ok(cfg)
    }

    fn chis(&self) -> (f64, f64) {
        (self.chis[0], self.chis[1])
    }

    fn coords(&self) -> CliResult<EnsembleCoords> {
        let c = self
            .coords
            .ok_or_else(|| CliError::usage("config needs \"coords\" for this command"))?;
        let co = EnsembleCoords {
            phi0: c.phi0,
            phidot0: c.phidot0,
            phiddot0: c.phiddot0,
            a: c.a,
            b: c.b,
            t: c.t,
            chi1: self.chis[0],
            chi2: self.chis[1],
        };
        co.validate()?;
        Ok(co)
    }

    fn targets(&self) -> CliResult<GatePair> {
        match (&self.targets, &self.coords) {
            (Some(t), _) => Ok(*t),
            (None, Some(_)) => Ok(ensemble_forward_with(&self.coords()?, TIGHT)?),
            (None, None) => Err(CliError::usage("config needs \"targets\" or \"coords\"")),
        }
    }

    fn shooting(&self, seed: u64) -> CliResult<ShootingOptions> {
        let opts: ShootingOptions = match &self.shooting {
            Some(v) => {
                if v.get("seed").is_some() {
                    return Err(CliError::usage(
                        "the shooting seed is set with --seed, not in the config",
                    ));
                }
                serde_json::from_value(v.clone()).map_err(|e| CliError::usage(format!("shooting: {e}")))?
            }
            None => ShootingOptions::default(),
        };
        Ok(ShootingOptions { seed, ..opts })
    }
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(subcommand)]
    pub command: EnsembleCommand,
}

#[derive(Debug, Subcommand)]
pub enum EnsembleCommand {
    /// Gate pair produced by the control in `coords`.
    Forward(ForwardArgs),
    /// Shortest control reaching the target pair, by multi-start shooting.
    Invert(InvertArgs),
    /// Gradient-ascent fidelity search at a fixed time.
    Grape(StochasticArgs),
    /// Best fidelity over a grid of times.
    SweepFmax(StochasticArgs),
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    /// Ensemble config JSON with a `coords` section.
    #[arg(long)]
    pub config: PathBuf,
    /// Gate-pair JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the `t,phi` waveform.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StochasticArgs {
    /// Ensemble config JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Seed of the random initial guesses; recorded in the manifest.
    #[arg(long)]
    pub seed: u64,
    /// Result path (default inside the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub common: StochasticArgs,
    /// Also write the `t,phi` waveform of the solution.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
}

pub fn run(args: &EnsembleArgs) -> CliResult<()> {
    match &args.command {
        EnsembleCommand::Forward(a) => forward(a),
        EnsembleCommand::Invert(a) => invert(a),
        EnsembleCommand::Grape(a) => grape(a),
        EnsembleCommand::SweepFmax(a) => sweep_fmax(a),
    }
}

fn pair_json(p: &GatePair) -> Value {
    to_json(p)
}

fn write_waveform(path: &Path, coords: &EnsembleCoords, samples: usize) -> CliResult<()> {
    if samples < 2 {
        return Err(CliError::usage("samples must be at least 2"));
    }
    let curve = integrate_phi_with(coords, samples, TIGHT)?;
    output::write_csv(
        path,
        &["t", "phi"],
        curve.times.iter().zip(&curve.phi).map(|(&t, &p)| vec![t, p]),
    )
}

fn forward(args: &ForwardArgs) -> CliResult<()> {
    let cfg = EnsembleConfig::load(&args.config)?;
    let coords = cfg.coords()?;
    let pair = ensemble_forward_with(&coords, TIGHT)?;
    let path = output::resolve(args.out.as_deref(), "ensemble_forward.json");
    output::write_json(&path, &pair_json(&pair))?;
    let mut run = Run::new("ensemble forward", to_json(&cfg)).tolerances(&TIGHT);
    run.output(&path);
    if let Some(w) = &args.waveform {
        write_waveform(w, &coords, cfg.samples)?;
        run.output(w);
    }
    run.finish(&path, json!({}))?;
    Ok(())
}

fn invert(full: &InvertArgs) -> CliResult<()> {
    let args = &full.common;
    let cfg = EnsembleConfig::load(&args.config)?;
    let targets = cfg.targets()?;
    let opts = cfg.shooting(args.seed)?;
    let rep = ensemble_invert_with(&targets, cfg.chis(), &opts, &[])?;
    let path = output::resolve(args.out.as_deref(), "ensemble_invert.json");
    let result = to_json(&rep);
    output::write_json(&path, &result)?;
    let mut run = Run::new("ensemble invert", to_json(&cfg))
        .tolerances(&opts)
        .seed(args.seed);
    run.output(&path);
    if let Some(w) = &full.waveform {
        write_waveform(w, &rep.coords, cfg.samples)?;
        run.output(w);
    }
    run.finish(
        &path,
        json!({"t": result["coords"]["t"], "residual": result["residual"]}),
    )?;
    Ok(())
}

fn grape(args: &StochasticArgs) -> CliResult<()> {
    let cfg = EnsembleConfig::load(&args.config)?;
    let g = cfg
        .grape
        .as_ref()
        .ok_or_else(|| CliError::usage("config needs a \"grape\" section"))?;
    let targets = cfg.targets()?;
    let res = gradient_ascent_many(
        &targets.as_array(),
        &cfg.chis,
        g.t,
        g.slices,
        g.restarts,
        args.seed,
        &g.options,
    )?;
    let path = output::resolve(args.out.as_deref(), "ensemble_grape.csv");
    let ctrl = &res.control;
    output::write_csv(
        &path,
        &["t", "phi"],
        (0..ctrl.len()).map(|r| vec![ctrl.midpoint(r), ctrl.phis[r]]),
    )?;
    let mut run = Run::new("ensemble grape", to_json(&cfg))
        .tolerances(&g.options)
        .seed(args.seed);
    run.output(&path);
    let summary = json!({
        "f_max": res.f_max,
        "restart": res.restart,
        "iterations": res.iterations,
        "grad_norm": res.grad_norm,
    });
    run.finish(&path, to_json(&summary))?;
    Ok(())
}

fn sweep_fmax(args: &StochasticArgs) -> CliResult<()> {
    let cfg = EnsembleConfig::load(&args.config)?;
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::usage("config needs a \"sweep\" section"))?;
    let targets = cfg.targets()?;
    let rows = s
        .t_grid
        .iter()
        .map(|&t| {
            gradient_ascent_many(
                &targets.as_array(),
                &cfg.chis,
                t,
                s.slices,
                s.restarts,
                args.seed,
                &s.options,
            )
            .map(|g| vec![t, g.f_max])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let path = output::resolve(args.out.as_deref(), "ensemble_sweep_fmax.csv");
    output::write_csv(&path, &["t", "F_max"], rows.iter().cloned())?;
    let mut run = Run::new("ensemble sweep-fmax", to_json(&cfg))
        .tolerances(&s.options)
        .seed(args.seed);
    run.output(&path);
    run.finish(&path, json!({"rows": rows.len()}))?;
    Ok(())
}
