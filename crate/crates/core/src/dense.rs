//! Row-major dense matrices and their binary file format.
//!
//! The on-disk layout is: magic `ESMM`, then little-endian u32 version (1),
//! rows, cols, followed by `rows * cols` little-endian f32 values, row-major.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ESMM";
const VERSION: u32 = 1;

/// Row-major dense `f32` matrix. Immutable by convention after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n_cols));
        DenseMatrix {
            rows: rows.len(),
            cols: n_cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Uniform entries in [-1, 1), driven by the caller's RNG.
    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }

    /// Dense product `self * other`, k-inner accumulation over contiguous rows.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must match");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &av) in a_row.iter().enumerate() {
                let b_row = other.row(k);
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f32 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    /// Largest relative difference, with an absolute floor to keep
    /// near-zero entries from blowing up the ratio.
    pub fn max_rel_diff(&self, other: &DenseMatrix) -> f32 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
            .fold(0.0, f32::max)
    }

    pub fn write(&self, w: &mut impl Write, path: &str) -> Result<()> {
        let io = |e| Error::io(path, e);
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.rows as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.cols as u32).to_le_bytes()).map_err(io)?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(io)
    }

    pub fn read(r: &mut impl Read, path: &str) -> Result<Self> {
        let io = |e| Error::io(path, e);
        let bad = |message: &str| Error::Format {
            path: path.to_string(),
            message: message.to_string(),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic, expected ESMM"));
        }
        let mut word = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
            Ok(u32::from_le_bytes(word))
        };
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(bad("unsupported version"));
        }
        let rows = read_u32(r)? as usize;
        let cols = read_u32(r)? as usize;
        let mut bytes = vec![0u8; rows * cols * 4];
        r.read_exact(&mut bytes).map_err(io)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let display = path.as_ref().display().to_string();
        let file = std::fs::File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
        self.write(&mut std::io::BufWriter::new(file), &display)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let display = path.as_ref().display().to_string();
        let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
        Self::read(&mut std::io::BufReader::new(file), &display)
    }
}
