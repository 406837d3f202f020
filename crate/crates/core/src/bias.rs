//! Time-optimal synthesis in the presence of a constant bias field `b σz`.
//!
//! In the frame rotating with `b σz` the problem is the unbiased one, so the
//! optimal lab-frame propagator is `e^{-ibtσz} U_opt(φ₀, ω, t)` and the lab
//! control angle is `φ(t) = φ₀ + (ω + 2b)t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homogeneous::forward_unchecked;
use crate::inversion;
use crate::propagator::ControlWaveform;
use crate::su2::Su2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasCoords {
    pub phi0: f64,
    /// Rotation rate of the control in the rotating frame.
    pub omega: f64,
    pub t: f64,
    pub b: f64,
    pub degenerate_phi0: bool,
}

impl BiasCoords {
    pub fn new(phi0: f64, omega: f64, t: f64, b: f64) -> Self {
        BiasCoords {
            phi0,
            omega,
            t,
            b,
            degenerate_phi0: false,
        }
    }

    /// Lab-frame control `φ(t) = φ₀ + (ω + 2b)t` together with the bias.
    pub fn lab_waveform(&self) -> ControlWaveform {
        ControlWaveform::LinearBias {
            phi0: self.phi0,
            omega: self.omega,
            bias: self.b,
        }
    }

    pub fn lab_rate(&self) -> f64 {
        self.omega + 2.0 * self.b
    }
}

pub fn forward_bias(coords: &BiasCoords) -> Result<Su2> {
    let BiasCoords { phi0, omega, t, b, .. } = *coords;
    if !(t >= 0.0) || ![phi0, omega, t, b].iter().all(|x| x.is_finite()) {
        return Err(Error::domain("forward_bias needs finite parameters and t >= 0"));
    }
    Ok(forward_unchecked(phi0, omega, t).z_phase(-b * t))
}

/// Result of [`invert_bias_with_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasInversionReport {
    pub coords: BiasCoords,
    pub tie: bool,
    pub branches_searched: usize,
    pub residual: f64,
}

pub fn invert_bias(target: &Su2, b: f64) -> Result<BiasCoords> {
    invert_bias_with_report(target, b).map(|r| r.coords)
}

pub fn invert_bias_with_report(target: &Su2, b: f64) -> Result<BiasInversionReport> {
    let s = inversion::solve(target, b)?;
    Ok(BiasInversionReport {
        coords: BiasCoords {
            phi0: s.phi0,
            omega: s.omega,
            t: s.t,
            b,
            degenerate_phi0: s.degenerate_phi0,
        },
        tie: s.tie,
        branches_searched: s.branches,
        residual: s.residual,
    })
}
