use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point outside [0,1]^d at row {row}: coordinate {axis} is {value}")]
    OutOfDomain { row: usize, axis: usize, value: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite input at cell {0}")]
    NonFinite(usize),
    #[error("grid too large for brute-force search: {cells} cells (limit {limit})")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("all candidate J weights underflow; widen the log-scale window or reduce J range")]
    WeightUnderflow,
    #[error("empty sample")]
    EmptySample,
    #[error("no Z_B table entry for eta={eta:?}, map={map}; run the Z_B simulator (`monodens zb`) to generate it")]
    MissingZbEntry { eta: Vec<usize>, map: String },
    #[error("lattice too large: {nodes} (u,v) nodes; reduce lattice_c or lattice_res")]
    LatticeTooLarge { nodes: usize },
    #[error("rejection sampler acceptance ratio {0:.4} below 1%; check the density definition")]
    RejectionTooInefficient(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
