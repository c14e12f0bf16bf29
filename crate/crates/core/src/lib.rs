//! Cache-budgeted edge-sampled SpMM over CSR graphs, with a minimal GNN
//! inference engine on top.
//!
//! The kernel bounds each row's retained nonzeros to a buffer width `S` so a
//! block of sampled rows fits a fixed scratch budget, trading a controlled
//! amount of accuracy for less compute and better locality.

pub mod csr;
pub mod dense;
pub mod error;
pub mod gnn;
pub mod sampler;
pub mod spmm;
pub mod synth;

pub use csr::{load_edge_list, save_edge_list, CsrMatrix, EdgeList, Violation};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use sampler::{
    fastrand_index, materialize_sampled, sample_row, sampling_rate, SamplingStrategy,
    DEFAULT_PRIME,
};
pub use spmm::{
    flop_count, spmm_exact, spmm_sampled, spmm_sampled_with_stats, NormMode, SpmmStats,
    TileConfig, DEFAULT_BUDGET_BYTES, DEFAULT_ROWS_PER_BLOCK,
};
pub use synth::{gen_synthetic, GraphKind};
