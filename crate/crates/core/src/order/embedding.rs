use fixedbitset::FixedBitSet;

use super::{OrderError, Poset};

/// Row-major `m×K` matrix of latent utilities, one row per action.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentEmbedding {
    m: usize,
    k: usize,
    values: Vec<f64>,
}

impl LatentEmbedding {
    pub fn new(m: usize, k: usize, values: Vec<f64>) -> Result<Self, OrderError> {
        if k == 0 {
            return Err(OrderError::ZeroDimension);
        }
        if values.len() != m * k {
            return Err(OrderError::ShapeMismatch {
                rows: m,
                cols: k,
                got: values.len(),
            });
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(OrderError::NonFinite(p / k, p % k));
        }
        Ok(LatentEmbedding { m, k, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, OrderError> {
        let k = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(OrderError::ShapeMismatch {
                rows: rows.len(),
                cols: k,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), k, rows.concat())
    }

    pub fn zeros(m: usize, k: usize) -> Self {
        Self::new(m, k, vec![0.0; m * k]).expect("k >= 1")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Latent dimension `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        assert_eq!(row.len(), self.k);
        self.values[i * self.k..(i + 1) * self.k].copy_from_slice(row);
    }

    pub fn get(&self, i: usize, d: usize) -> f64 {
        self.values[i * self.k + d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k)
    }

    /// Inserts `column` at position `c`, shifting columns `>= c` right.
    pub fn insert_column(&self, c: usize, column: &[f64]) -> Self {
        assert!(c <= self.k && column.len() == self.m);
        let k = self.k + 1;
        let mut values = Vec::with_capacity(self.m * k);
        for (row, &v) in self.rows().zip(column) {
            values.extend_from_slice(&row[..c]);
            values.push(v);
            values.extend_from_slice(&row[c..]);
        }
        LatentEmbedding { m: self.m, k, values }
    }

    /// Removes column `c`. Requires `K >= 2`.
    pub fn remove_column(&self, c: usize) -> Self {
        assert!(self.k >= 2 && c < self.k);
        let k = self.k - 1;
        let mut values = Vec::with_capacity(self.m * k);
        for row in self.rows() {
            values.extend_from_slice(&row[..c]);
            values.extend_from_slice(&row[c + 1..]);
        }
        LatentEmbedding { m: self.m, k, values }
    }

    /// Component-wise strict dominance: `i ≻ j` iff `U[i][d] > U[j][d]` for every `d`.
    ///
    /// Ties in any coordinate leave the pair incomparable. The result is
    /// transitive and irreflexive by construction.
    pub fn dominance_order(&self) -> Poset {
        let mut succ = vec![FixedBitSet::with_capacity(self.m); self.m];
        for (i, row_i) in self.rows().enumerate() {
            for (j, row_j) in self.rows().enumerate() {
                if i != j && row_i.iter().zip(row_j).all(|(a, b)| a > b) {
                    succ[i].insert(j);
                }
            }
        }
        Poset::from_closed_rows(self.m, succ)
    }
}
