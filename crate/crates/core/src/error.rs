use thiserror::Error;

use crate::model::MagPair;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        /// Best iterate reached before giving up, if one exists.
        best: Option<MagPair>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The fluctuation spectrum is not real: the state is not a stable minimum.
    #[error("unstable fluctuation spectrum (max |Im eps| = {max_imag:.3e})")]
    Instability { max_imag: f64 },

    #[error("degenerate bosonic mode: {0}")]
    DegenerateMode(String),

    #[error("transition detected at xi = {xi} inside the optimization range")]
    TransitionInRange { xi: f64 },

    #[error("problem too large: {0}")]
    Size(String),

    #[error("at s = {s}: {source}")]
    AtPoint {
        s: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, s: f64) -> Error {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint { s, source: Box::new(e) },
        }
    }

    /// The innermost error, with any `AtPoint` wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} is not finite ({x})")))
    }
}
