//! CSR adjacency matrices: construction, validation, edge-list ingestion.
//!
//! Within each row, column indices are stored in strictly increasing order.
//! That storage order is part of the contract: prefix-based sampling picks
//! the first entries of a row, so a different order gives different samples.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with `f32` values. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Length `n_rows + 1`; row `i` spans `col_ind[row_ptr[i]..row_ptr[i+1]]`.
    pub row_ptr: Vec<usize>,
    pub col_ind: Vec<usize>,
    pub values: Vec<f32>,
}

/// A single invariant violation found by [`CsrMatrix::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub row: Option<usize>,
    pub position: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.invariant)?;
        if let Some(row) = self.row {
            write!(f, " at row {row}")?;
        }
        if let Some(pos) = self.position {
            write!(f, " (position {pos})")?;
        }
        Ok(())
    }
}

impl CsrMatrix {
    /// Builds a CSR matrix from COO triples. Duplicate `(row, col)` pairs are
    /// summed; within each row, entries end up sorted by column ascending.
    pub fn from_coo(
        n_rows: usize,
        n_cols: usize,
        triples: &[(usize, usize, f32)],
    ) -> Result<Self> {
        for &(row, col, value) in triples {
            if row >= n_rows || col >= n_cols {
                return Err(Error::CooIndexOutOfRange {
                    row,
                    col,
                    value,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f32)> = triples.to_vec();
        sorted.sort_by_key(|e| (e.0, e.1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_ind = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for (row, col, value) in sorted {
            if prev == Some((row, col)) {
                *values.last_mut().unwrap() += value;
                continue;
            }
            prev = Some((row, col));
            col_ind.push(col);
            values.push(value);
            row_ptr[row + 1] = col_ind.len();
        }
        // fill offsets of empty rows
        for i in 1..=n_rows {
            if row_ptr[i] < row_ptr[i - 1] {
                row_ptr[i] = row_ptr[i - 1];
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_ind,
            values,
        })
    }

    /// Inverse of [`from_coo`](Self::from_coo) for canonical matrices.
    pub fn to_coo(&self) -> Vec<(usize, usize, f32)> {
        let mut out = Vec::with_capacity(self.nnz());
        for row in 0..self.n_rows {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                out.push((row, self.col_ind[k], self.values[k]));
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.col_ind.len()
    }

    pub fn row_nnz(&self, row: usize) -> usize {
        self.row_ptr[row + 1] - self.row_ptr[row]
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n_rows).map(|r| self.row_nnz(r)).max().unwrap_or(0)
    }

    /// `(col, value)` entries of one row in stored order.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, f32)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        span.map(move |k| (self.col_ind[k], self.values[k]))
    }

    /// Checks every structural invariant; an empty list means the matrix is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.row_ptr.len() != self.n_rows + 1 {
            out.push(Violation {
                invariant: "row_ptr length must be n_rows + 1",
                row: None,
                position: None,
            });
            return out;
        }
        if self.row_ptr[0] != 0 {
            out.push(Violation {
                invariant: "row_ptr[0] must be 0",
                row: Some(0),
                position: Some(0),
            });
        }
        for i in 0..self.n_rows {
            if self.row_ptr[i + 1] < self.row_ptr[i] {
                out.push(Violation {
                    invariant: "row_ptr must be non-decreasing",
                    row: Some(i),
                    position: Some(i + 1),
                });
            }
        }
        if self.row_ptr[self.n_rows] != self.col_ind.len() {
            out.push(Violation {
                invariant: "row_ptr[n_rows] must equal length of col_ind",
                row: Some(self.n_rows),
                position: None,
            });
        }
        if self.col_ind.len() != self.values.len() {
            out.push(Violation {
                invariant: "col_ind and values must have equal length",
                row: None,
                position: None,
            });
        }
        for (k, &col) in self.col_ind.iter().enumerate() {
            if col >= self.n_cols {
                out.push(Violation {
                    invariant: "col_ind entry must be < n_cols",
                    row: None,
                    position: Some(k),
                });
            }
        }
        // strictly increasing columns within each row; clamp spans so a broken
        // pointer structure cannot index out of bounds
        for row in 0..self.n_rows {
            let lo = self.row_ptr[row].min(self.col_ind.len());
            let hi = self.row_ptr[row + 1].min(self.col_ind.len());
            if lo >= hi {
                continue;
            }
            for k in lo + 1..hi {
                if self.col_ind[k] <= self.col_ind[k - 1] {
                    out.push(Violation {
                        invariant: "columns within a row must be strictly increasing",
                        row: Some(row),
                        position: Some(k),
                    });
                }
            }
        }
        out
    }

    /// Structural + value transpose. Used for symmetry checks.
    pub fn transpose(&self) -> CsrMatrix {
        let triples: Vec<_> = self
            .to_coo()
            .into_iter()
            .map(|(r, c, v)| (c, r, v))
            .collect();
        CsrMatrix::from_coo(self.n_cols, self.n_rows, &triples)
            .expect("transpose of a valid matrix is valid")
    }

    pub fn identity(n: usize) -> CsrMatrix {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_ind: (0..n).collect(),
            values: vec![1.0; n],
        }
    }
}

/// A plain edge list, the intermediate form between text files and CSR.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Unweighted adjacency matrix: every retained edge has value 1.0 and
    /// duplicates collapse to a single entry.
    pub fn to_csr(&self, symmetrize: bool, add_self_loops: bool) -> CsrMatrix {
        let mut triples: Vec<(usize, usize, f32)> = Vec::new();
        let mut push = |s: usize, d: usize| triples.push((s, d, 1.0));
        for &(src, dst) in &self.edges {
            push(src, dst);
            if symmetrize {
                push(dst, src);
            }
        }
        if add_self_loops {
            for i in 0..self.n_nodes {
                push(i, i);
            }
        }
        triples.sort_by_key(|e| (e.0, e.1));
        triples.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        CsrMatrix::from_coo(self.n_nodes, self.n_nodes, &triples)
            .expect("edge list indices already validated")
    }
}

/// Parses the edge-list text format: one `src dst` pair per line, `#` comments,
/// optional leading `n <count>` line declaring the node count.
pub fn parse_edge_list(reader: impl BufRead, path: &str, n_nodes: Option<usize>) -> Result<EdgeList> {
    let mut declared = n_nodes;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_index = 0usize;
    let mut seen_edge = false;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let first = fields.next().unwrap();
        if !seen_edge && first == "n" {
            let count = fields
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_string(),
                    line: line_no,
                    message: "expected `n <count>`".to_string(),
                })?;
            if declared.is_none() {
                declared = Some(count);
            }
            continue;
        }
        let parse_idx = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_string(),
                    line: line_no,
                    message: format!("expected two node indices, got `{trimmed}`"),
                })
        };
        let src = parse_idx(Some(first))?;
        let dst = parse_idx(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                path: path.to_string(),
                line: line_no,
                message: format!("trailing tokens on line `{trimmed}`"),
            });
        }
        if let Some(n) = declared {
            if src >= n || dst >= n {
                return Err(Error::NodeIndexOutOfRange {
                    path: path.to_string(),
                    line: line_no,
                    index: src.max(dst),
                    n_nodes: n,
                });
            }
        }
        max_index = max_index.max(src).max(dst);
        seen_edge = true;
        edges.push((src, dst));
    }
    let n_nodes = declared.unwrap_or(if seen_edge { max_index + 1 } else { 0 });
    Ok(EdgeList { n_nodes, edges })
}

/// Loads an edge-list text file into an unweighted adjacency matrix.
pub fn load_edge_list(
    path: impl AsRef<Path>,
    n_nodes: Option<usize>,
    symmetrize: bool,
    add_self_loops: bool,
) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let list = parse_edge_list(BufReader::new(file), &display, n_nodes)?;
    Ok(list.to_csr(symmetrize, add_self_loops))
}

/// Writes a CSR matrix back out as an edge-list text file (structure only).
pub fn save_edge_list(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = |s: String| -> Result<()> {
        w.write_all(s.as_bytes()).map_err(|e| Error::io(&display, e))
    };
    emit(format!("n {}\n", m.n_rows))?;
    for row in 0..m.n_rows {
        for (col, _) in m.row_entries(row) {
            emit(format!("{row} {col}\n"))?;
        }
    }
    Ok(())
}
