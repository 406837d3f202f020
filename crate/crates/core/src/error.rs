use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("norm invariant violated: |z1|^2 + |z2|^2 = {norm_sq}")]
    NormViolation { norm_sq: f64 },

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {steps} steps at t = {t}")]
    TooManySteps { t: f64, steps: usize },

    #[error("control rate blew up at t = {t} (|phi'| = {rate:e})")]
    BlowUp { t: f64, rate: f64 },

    #[error("equal field values chi1 = chi2 = {0}; use the homogeneous solver instead")]
    EqualFields(f64),

    #[error("{what} did not converge (best residual {residual:e}{})",
        .best_t.map(|t| format!(", best t = {t}")).unwrap_or_default())]
    NoConvergence {
        what: &'static str,
        residual: f64,
        best_t: Option<f64>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
