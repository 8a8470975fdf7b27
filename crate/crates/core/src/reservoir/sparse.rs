use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square compressed-sparse-row matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets sorted by row then column.
    pub fn from_sorted_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::Dimension(format!("entry ({r}, {c}) outside {n}x{n}")));
            }
            if prev.is_some_and(|p| p >= (r, c)) {
                return Err(Error::Dimension("triplets must be strictly sorted".into()));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse matrix entry".into()));
            }
            prev = Some((r, c));
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self { n, indptr, indices, values })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut trip = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension("dense matrix must be square".into()));
            }
            trip.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, &v)| (r, c, v)));
        }
        Self::from_sorted_triplets(n, &trip)
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_sorted_triplets(n, &trip).expect("identity is valid")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.nnz() as f64 / (self.n * self.n) as f64
        }
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (r, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
            *o = self.indices[lo..hi].iter().zip(&self.values[lo..hi]).map(|(&c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (r, row) in out.iter_mut().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                row[self.indices[k]] = self.values[k];
            }
        }
        out
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
