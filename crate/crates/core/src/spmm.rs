//! Exact SpMM and the two-stage, budgeted, tiled sampled-SpMM kernel.
//!
//! The sampled kernel processes row blocks of `rows_per_block` rows against a
//! fixed scratch buffer of `(value, col)` pairs — the fast-memory analog. Stage
//! one fills the scratch with each row's sampled entries; stage two iterates
//! the scratch in buffer order and accumulates against rows of the dense
//! operand. Per-row accumulation is strictly sequential, so output is
//! bitwise identical for any worker count.

use std::time::Instant;

use crate::csr::CsrMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sampler::{fastrand_index, SamplingStrategy};

/// Row-block geometry and scratch budget for the sampled kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileConfig {
    /// Rows handled per scratch buffer (G).
    pub rows_per_block: usize,
    /// Target buffer width per row (S).
    pub s_width: usize,
    /// Scratch byte budget; each buffered entry costs 8 bytes
    /// (4-byte value + 4-byte column index).
    pub budget_bytes: usize,
}

pub const DEFAULT_ROWS_PER_BLOCK: usize = 4;
pub const DEFAULT_BUDGET_BYTES: usize = 49152;

pub const BYTES_PER_ENTRY: usize = 8;

impl TileConfig {
    pub fn new(rows_per_block: usize, s_width: usize, budget_bytes: usize) -> Self {
        TileConfig {
            rows_per_block,
            s_width,
            budget_bytes,
        }
    }

    pub fn with_s_width(s_width: usize) -> Self {
        TileConfig::new(DEFAULT_ROWS_PER_BLOCK, s_width, DEFAULT_BUDGET_BYTES)
    }

    pub fn footprint_bytes(&self) -> usize {
        self.rows_per_block * self.s_width * BYTES_PER_ENTRY
    }

    pub fn check(&self) -> Result<()> {
        assert!(self.rows_per_block >= 1, "rows_per_block must be >= 1");
        if self.footprint_bytes() > self.budget_bytes {
            return Err(Error::BudgetExceeded {
                rows_per_block: self.rows_per_block,
                s_width: self.s_width,
                footprint: self.footprint_bytes(),
                budget: self.budget_bytes,
            });
        }
        Ok(())
    }
}

/// Output-row normalization applied after accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    #[default]
    None,
    /// Divide each row by its sampled entry count, `min(row_nnz, S)`. Mean
    /// semantics over the retained neighbors.
    SampledCount,
    /// Divide each row by its original `row_nnz`, ignoring how many entries
    /// the sampler kept. For sensitivity comparison only.
    OriginalDegree,
}

impl NormMode {
    pub fn label(&self) -> &'static str {
        match self {
            NormMode::None => "none",
            NormMode::SampledCount => "row/sampled-count",
            NormMode::OriginalDegree => "row/original-degree",
        }
    }
}

/// Per-run instrumentation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpmmStats {
    pub blocks_executed: usize,
    pub peak_scratch_bytes: usize,
    pub total_sampled_nnz: usize,
    /// Largest per-row stage-2 iteration count observed.
    pub max_stage2_iters: usize,
    pub stage1_ns: u64,
    pub stage2_ns: u64,
}

impl SpmmStats {
    fn merge(&mut self, other: &SpmmStats) {
        self.blocks_executed += other.blocks_executed;
        self.peak_scratch_bytes = self.peak_scratch_bytes.max(other.peak_scratch_bytes);
        self.total_sampled_nnz += other.total_sampled_nnz;
        self.max_stage2_iters = self.max_stage2_iters.max(other.max_stage2_iters);
        self.stage1_ns += other.stage1_ns;
        self.stage2_ns += other.stage2_ns;
    }
}

fn check_dims(a: &CsrMatrix, b: &DenseMatrix) -> Result<()> {
    if a.n_cols != b.rows {
        return Err(Error::DimMismatch {
            left: "sparse A".into(),
            left_dims: format!("{}x{}", a.n_rows, a.n_cols),
            right: "dense B".into(),
            right_dims: format!("{}x{}", b.rows, b.cols),
        });
    }
    Ok(())
}

/// Reference SpMM: `C[i,j] = sum_k a[i,k] * b[k,j]`, accumulated in stored
/// row order with contiguous traversal of B's rows.
pub fn spmm_exact(a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_dims(a, b)?;
    let cols = b.cols;
    let mut c = DenseMatrix::zeros(a.n_rows, cols);
    for row in 0..a.n_rows {
        let out = c.row_mut(row);
        for k in a.row_ptr[row]..a.row_ptr[row + 1] {
            let v = a.values[k];
            let b_row = b.row(a.col_ind[k]);
            for (o, &bv) in out.iter_mut().zip(b_row) {
                *o += v * bv;
            }
        }
    }
    Ok(c)
}

/// Sampled SpMM over row blocks; see the module docs. `threads` is the worker
/// count (0 means 1). Returns the output and instrumentation counters.
pub fn spmm_sampled_with_stats(
    a: &CsrMatrix,
    b: &DenseMatrix,
    strategy: SamplingStrategy,
    tile: TileConfig,
    norm: NormMode,
    threads: usize,
) -> Result<(DenseMatrix, SpmmStats)> {
    check_dims(a, b)?;
    // Exact keeps whole rows, so the budget does not constrain it; the
    // scratch is sized to the widest row instead.
    let scratch_width = match strategy {
        SamplingStrategy::Exact => a.max_row_nnz(),
        _ => {
            tile.check()?;
            tile.s_width
        }
    };
    let threads = threads.max(1);
    let g = tile.rows_per_block;
    let n_blocks = a.n_rows.div_ceil(g).max(1);
    let blocks_per_worker = n_blocks.div_ceil(threads);

    let mut c = DenseMatrix::zeros(a.n_rows, b.cols);
    let mut stats = SpmmStats::default();

    // Carve the output into one contiguous mutable span per worker; block
    // ranges are disjoint so row spans are too.
    let mut worker_spans: Vec<(usize, usize, &mut [f32])> = Vec::new();
    {
        let mut rest: &mut [f32] = &mut c.data;
        let mut row_base = 0usize;
        let mut block = 0usize;
        while block < n_blocks {
            let block_end = (block + blocks_per_worker).min(n_blocks);
            let row_end = (block_end * g).min(a.n_rows);
            let (span, tail) = rest.split_at_mut((row_end - row_base) * b.cols);
            worker_spans.push((block, block_end, span));
            rest = tail;
            row_base = row_end;
            block = block_end;
        }
    }

    let worker_stats: Vec<SpmmStats> = std::thread::scope(|scope| {
        let handles: Vec<_> = worker_spans
            .into_iter()
            .map(|(block_start, block_end, span)| {
                scope.spawn(move || {
                    run_blocks(
                        a,
                        b,
                        strategy,
                        norm,
                        g,
                        scratch_width,
                        block_start,
                        block_end,
                        span,
                    )
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for s in &worker_stats {
        stats.merge(s);
    }
    stats.peak_scratch_bytes = g * scratch_width * BYTES_PER_ENTRY;
    Ok((c, stats))
}

pub fn spmm_sampled(
    a: &CsrMatrix,
    b: &DenseMatrix,
    strategy: SamplingStrategy,
    tile: TileConfig,
    norm: NormMode,
) -> Result<DenseMatrix> {
    spmm_sampled_with_stats(a, b, strategy, tile, norm, 1).map(|(c, _)| c)
}

#[allow(clippy::too_many_arguments)]
fn run_blocks(
    a: &CsrMatrix,
    b: &DenseMatrix,
    strategy: SamplingStrategy,
    norm: NormMode,
    g: usize,
    scratch_width: usize,
    block_start: usize,
    block_end: usize,
    out_span: &mut [f32],
) -> SpmmStats {
    let cols = b.cols;
    let mut stats = SpmmStats::default();
    // one scratch allocation per worker, reused across blocks
    let mut scratch_vals = vec![0.0f32; g * scratch_width];
    let mut scratch_cols = vec![0u32; g * scratch_width];
    let mut counts = vec![0usize; g];
    let row_base = block_start * g;

    for block in block_start..block_end {
        let first_row = block * g;
        let rows_here = g.min(a.n_rows - first_row);

        // stage 1: sample into the scratch buffer
        let t0 = Instant::now();
        for gi in 0..rows_here {
            let row = first_row + gi;
            let start = a.row_ptr[row];
            let row_nnz = a.row_ptr[row + 1] - start;
            let count = strategy.sampled_count(row_nnz);
            let vals = &mut scratch_vals[gi * scratch_width..gi * scratch_width + count];
            let cols_buf = &mut scratch_cols[gi * scratch_width..gi * scratch_width + count];
            match strategy {
                SamplingStrategy::Exact | SamplingStrategy::Bucket { .. } => {
                    for (slot, k) in (start..start + count).enumerate() {
                        vals[slot] = a.values[k];
                        cols_buf[slot] = a.col_ind[k] as u32;
                    }
                }
                SamplingStrategy::FastRand { prime, .. } => {
                    for slot in 0..count {
                        let pos = fastrand_index(slot, row_nnz, prime)
                            .expect("count > 0 implies row_nnz > 0");
                        vals[slot] = a.values[start + pos];
                        cols_buf[slot] = a.col_ind[start + pos] as u32;
                    }
                }
            }
            counts[gi] = count;
            stats.total_sampled_nnz += count;
        }
        stats.stage1_ns += t0.elapsed().as_nanos() as u64;

        // stage 2: accumulate in buffer order
        let t1 = Instant::now();
        for gi in 0..rows_here {
            let row = first_row + gi;
            let count = counts[gi];
            let out_off = (row - row_base) * cols;
            let out = &mut out_span[out_off..out_off + cols];
            out.fill(0.0);
            for slot in 0..count {
                let v = scratch_vals[gi * scratch_width + slot];
                let b_row = b.row(scratch_cols[gi * scratch_width + slot] as usize);
                for (o, &bv) in out.iter_mut().zip(b_row) {
                    *o += v * bv;
                }
            }
            stats.max_stage2_iters = stats.max_stage2_iters.max(count);
            let divisor = match norm {
                NormMode::None => None,
                NormMode::SampledCount => (count > 0).then_some(count as f32),
                NormMode::OriginalDegree => {
                    let d = a.row_ptr[row + 1] - a.row_ptr[row];
                    (d > 0).then_some(d as f32)
                }
            };
            if let Some(d) = divisor {
                for o in out.iter_mut() {
                    *o /= d;
                }
            }
        }
        stats.stage2_ns += t1.elapsed().as_nanos() as u64;
        stats.blocks_executed += 1;
    }
    stats
}

/// Multiply-add count for a sampled SpMM: `sum_i min(row_nnz_i, S) * n_dense_cols`.
pub fn flop_count(a: &CsrMatrix, strategy: SamplingStrategy, n_dense_cols: usize) -> u64 {
    let kept: u64 = (0..a.n_rows)
        .map(|r| strategy.sampled_count(a.row_nnz(r)) as u64)
        .sum();
    kept * n_dense_cols as u64
}
