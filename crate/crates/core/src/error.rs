use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode count must be at least 1")]
    ZeroModes,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("photon number mismatch: input has {input}, output has {output}")]
    PhotonMismatch { input: usize, output: usize },
    #[error("{photons} photons exceeds the supported maximum of {max}")]
    TooManyPhotons { photons: usize, max: usize },
    #[error("Fock space of {states} states exceeds the supported maximum of {max}")]
    BasisTooLarge { states: u64, max: u64 },
    #[error("matrix is not unitary (Frobenius deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("frequency {k} is outside the {photons}-photon spectrum")]
    FrequencyOutOfSpectrum { k: usize, photons: usize },
    #[error("linear system is singular")]
    Singular,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error comes from numerics (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotUnitary { .. } | Error::Singular)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
