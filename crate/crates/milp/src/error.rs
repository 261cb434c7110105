use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable {var} (#{index}) has invalid bounds [{lower}, {upper}]")]
    InvalidBounds {
        var: String,
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite value in {location}")]
    NonFinite { location: String },
    #[error("row {row} references unknown variable #{index}")]
    UnknownVariable { row: String, index: usize },
}
