use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: ({row}, {col}) with value {value} exceeds {n_rows}x{n_cols}")]
    CooIndexOutOfRange {
        row: usize,
        col: usize,
        value: f32,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("node index {index} at {path}:{line} exceeds declared node count {n_nodes}")]
    NodeIndexOutOfRange {
        path: String,
        line: usize,
        index: usize,
        n_nodes: usize,
    },

    #[error("row index {row} out of range for matrix with {n_rows} rows")]
    RowOutOfRange { row: usize, n_rows: usize },

    #[error("row_nnz must be >= 1 for sample index computation")]
    EmptyRow,

    #[error("dimension mismatch: {left} ({left_dims}) vs {right} ({right_dims})")]
    DimMismatch {
        left: String,
        left_dims: String,
        right: String,
        right_dims: String,
    },

    #[error(
        "tile footprint {footprint} bytes (rows_per_block {rows_per_block} x s_width {s_width} x 8) exceeds budget {budget} bytes"
    )]
    BudgetExceeded {
        rows_per_block: usize,
        s_width: usize,
        footprint: usize,
        budget: usize,
    },

    #[error("infeasible degree: avg_degree {avg_degree} >= n_nodes {n_nodes}")]
    InfeasibleDegree { avg_degree: f64, n_nodes: usize },

    #[error("evaluation mask is empty")]
    EmptyMask,

    #[error("invalid model manifest: {0}")]
    Manifest(String),

    #[error("bad file format in {path}: {message}")]
    Format { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
