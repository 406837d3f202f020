//! Time-optimal synthesis of single-spin SU(2) gates under a planar control
//! field of fixed amplitude, with extensions to a constant bias field and to
//! two-spin ensembles with different field scales.

pub mod bias;
pub mod ensemble;
pub mod error;
pub mod homogeneous;
mod inversion;
pub mod ode;
pub mod propagator;
pub mod su2;

pub use bias::{forward_bias, invert_bias, BiasCoords};
pub use ensemble::{EnsembleCoords, GatePair};
pub use error::{Error, Result};
pub use homogeneous::{forward, invert, OptimalCoords};
pub use ode::Tolerances;
pub use propagator::{ControlWaveform, TrajectoryRecord};
pub use su2::{EmbeddingCoords, EulerCoords, Projected, S2Point, Su2};
