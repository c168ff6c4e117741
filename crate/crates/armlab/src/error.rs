use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("site ({0}, {1}) outside the configuration box")]
    SiteOutsideBox(i32, i32),
    #[error("enumeration guard exceeded: {0} configurations requested, limit {1}")]
    EnumerationGuard(u64, u64),
    #[error("annulus too large for the path oracle: n2 = {0}, limit {1}")]
    OracleGuard(i32, i32),
    #[error("exploration is implemented for the square lattice only")]
    UnsupportedLattice,
    #[error("exponent fit needs at least {0} usable scales, got {1}")]
    TooFewScales(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
