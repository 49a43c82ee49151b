use thiserror::Error;

/// Errors raised by the test construction, evidence and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UmpbtError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Param(String),

    #[error("natural-parameter separation {separation:e} below minimum {minimum:e} (alternative too close to the null)")]
    DegenerateSeparation { separation: f64, minimum: f64 },

    #[error("objective is monotone up to the support boundary {boundary} (limit {limit}); no interior minimum")]
    NoInteriorMinimum { boundary: f64, limit: f64 },

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("tested column is explained by the nuisance columns (x'(I-H)x = {quadratic_form:e})")]
    DegenerateColumn { quadratic_form: f64 },

    #[error("no sampler available for family `{0}`")]
    UnsupportedSampler(String),
}

pub type Result<T> = std::result::Result<T, UmpbtError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(UmpbtError::Domain(msg.into()))
}
