use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("degenerate spectrum: decay rates must be strictly increasing and distinct (gamma[{index}] = {value} repeats or decreases)")]
    DegenerateSpectrum { index: usize, value: f64 },

    #[error("invalid evolution spec: {0}")]
    Spec(String),

    #[error("construction matrix is singular at x = {x}")]
    Singular { x: f64 },

    #[error("value out of representable range at x = {x}")]
    Range { x: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("potential does not decay at the grid ends (|U| = {value:e} > 1e-12 at x = {x})")]
    Domain { x: f64, value: f64 },

    #[error("solitons are not separated; need |t| >= {required_t}")]
    NotAsymptotic { required_t: f64 },

    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidSpectrum(_)
            | Error::DegenerateSpectrum { .. }
            | Error::Spec(_) => true,
            Error::AtTime { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
