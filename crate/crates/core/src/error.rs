use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid user profile: {0}")]
    InvalidProfile(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("user {user} has a zero-gain weakest subcarrier")]
    ZeroGainSubcarrier { user: usize },

    #[error("user {user} has no usable subcarriers")]
    EmptyUser { user: usize },

    #[error("power split system is singular")]
    SingularSplit,

    #[error("exhaustive search needs {candidates} candidates, cap is {cap}")]
    OracleTooLarge { candidates: u128, cap: u64 },

    #[error("oracle failed: {0}")]
    OracleFailure(String),

    #[error("query does not match the band plan: {0}")]
    InvalidQuery(String),

    #[error("deviation undefined: {0}")]
    UndefinedDeviation(&'static str),

    #[error("ratio undefined: oracle value is zero")]
    UndefinedRatio,

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
