//! Edge-sampling strategies and sampling-rate analysis.
//!
//! Every strategy retains at most `s_width` entries per row, so the retained
//! row block fits a fixed buffer budget. Bucket keeps the first entries in
//! stored order; FastRand hashes buffer slots to row positions with
//! `(slot * prime) mod row_nnz`.

pub const DEFAULT_PRIME: usize = 577;

use crate::csr::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// No sampling; every row is kept whole.
    Exact,
    /// First `s_width` stored entries of each row.
    Bucket { s_width: usize },
    /// Pseudo-random positions `(i * prime) mod row_nnz` for buffer slot `i`.
    /// When `gcd(prime, row_nnz) > 1` positions repeat; duplicates are kept.
    FastRand { s_width: usize, prime: usize },
}

impl SamplingStrategy {
    pub fn bucket(s_width: usize) -> Self {
        assert!(s_width >= 1, "s_width must be >= 1");
        SamplingStrategy::Bucket { s_width }
    }

    pub fn fastrand(s_width: usize, prime: usize) -> Self {
        assert!(s_width >= 1, "s_width must be >= 1");
        assert!(prime >= 2, "prime must be >= 2");
        SamplingStrategy::FastRand { s_width, prime }
    }

    /// Buffer width, or `None` for Exact.
    pub fn s_width(&self) -> Option<usize> {
        match *self {
            SamplingStrategy::Exact => None,
            SamplingStrategy::Bucket { s_width } => Some(s_width),
            SamplingStrategy::FastRand { s_width, .. } => Some(s_width),
        }
    }

    /// Number of entries retained from a row with `row_nnz` stored entries.
    pub fn sampled_count(&self, row_nnz: usize) -> usize {
        match self.s_width() {
            None => row_nnz,
            Some(s) => row_nnz.min(s),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplingStrategy::Exact => "exact",
            SamplingStrategy::Bucket { .. } => "bucket",
            SamplingStrategy::FastRand { .. } => "fastrand",
        }
    }
}

/// The FastRand slot-to-position hash: `(shmem_idx * prime) mod row_nnz`.
///
/// Uses a 64-bit intermediate so the product cannot overflow for inputs
/// up to 2^31.
pub fn fastrand_index(shmem_idx: usize, row_nnz: usize, prime: usize) -> Result<usize> {
    if row_nnz == 0 {
        return Err(Error::EmptyRow);
    }
    Ok(((shmem_idx as u64 * prime as u64) % row_nnz as u64) as usize)
}

/// Samples one row, returning `(col, value)` pairs in buffer-slot order plus
/// the sampled count. FastRand may repeat positions; duplicates are kept.
pub fn sample_row(
    m: &CsrMatrix,
    row: usize,
    strategy: SamplingStrategy,
) -> Result<(Vec<(usize, f32)>, usize)> {
    if row >= m.n_rows {
        return Err(Error::RowOutOfRange {
            row,
            n_rows: m.n_rows,
        });
    }
    let start = m.row_ptr[row];
    let row_nnz = m.row_nnz(row);
    let count = strategy.sampled_count(row_nnz);
    let mut out = Vec::with_capacity(count);
    match strategy {
        SamplingStrategy::Exact | SamplingStrategy::Bucket { .. } => {
            for k in start..start + count {
                out.push((m.col_ind[k], m.values[k]));
            }
        }
        SamplingStrategy::FastRand { prime, .. } => {
            for slot in 0..count {
                let pos = fastrand_index(slot, row_nnz, prime)?;
                out.push((m.col_ind[start + pos], m.values[start + pos]));
            }
        }
    }
    Ok((out, count))
}

/// Fraction of nonzeros retained at buffer width `s_width`:
/// `sum_i min(row_nnz_i, s_width) / nnz`. Identical for Bucket and FastRand.
pub fn sampling_rate(m: &CsrMatrix, s_width: usize) -> f64 {
    assert!(s_width >= 1, "s_width must be >= 1");
    let total = m.nnz();
    if total == 0 {
        return 1.0;
    }
    let kept: usize = (0..m.n_rows).map(|r| m.row_nnz(r).min(s_width)).sum();
    kept as f64 / total as f64
}

/// Applies a strategy offline, producing the sampled graph as a CSR matrix.
/// Duplicate FastRand positions collapse by summing values so the output is
/// canonical; an in-kernel run instead multiplies the duplicated entry twice.
pub fn materialize_sampled(m: &CsrMatrix, strategy: SamplingStrategy) -> CsrMatrix {
    let mut triples = Vec::new();
    for row in 0..m.n_rows {
        let (entries, _) = sample_row(m, row, strategy).expect("row in range");
        for (col, value) in entries {
            triples.push((row, col, value));
        }
    }
    CsrMatrix::from_coo(m.n_rows, m.n_cols, &triples).expect("sampled entries are in range")
}

/// True iff FastRand would map two buffer slots to the same position in some
/// row of `m`. Happens exactly when `gcd(prime, row_nnz) > 1` and the slot
/// count exceeds `row_nnz / gcd`.
pub fn fastrand_has_duplicates(m: &CsrMatrix, s_width: usize, prime: usize) -> bool {
    (0..m.n_rows).any(|row| fastrand_row_has_duplicates(m.row_nnz(row), s_width, prime))
}

pub fn fastrand_row_has_duplicates(row_nnz: usize, s_width: usize, prime: usize) -> bool {
    if row_nnz == 0 {
        return false;
    }
    let g = gcd(prime, row_nnz);
    // positions cycle with period row_nnz / gcd
    row_nnz.min(s_width) > row_nnz / g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
