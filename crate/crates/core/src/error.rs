use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("split leaves a child without training samples")]
    EmptyChild,
    #[error("split point {point} is outside the leaf extent ({lower}, {upper}] in coordinate {coord}")]
    InvalidSplitPoint {
        coord: usize,
        point: f64,
        lower: f64,
        upper: f64,
    },
    #[error("coordinate {0} is not a coordinate of the leaf region")]
    CoordinateNotInRegion(usize),
    #[error("no valid split candidate")]
    NoValidSplit,
    #[error("degenerate data: every predictor is constant on the training sample")]
    DegenerateData,
    #[error("components of order {0} are not supported here (only 1 and 2)")]
    UnsupportedOrder(usize),
    #[error("purification did not converge after {0} sweeps")]
    NonConvergence(usize),
    #[error("purification grid for {coords} would need {cells} cells (limit {limit})")]
    GridTooLarge {
        coords: String,
        cells: usize,
        limit: usize,
    },
    #[error("predictor value {value} of coordinate {coord} lies outside [0, 1]")]
    DomainError { coord: usize, value: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("model format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
