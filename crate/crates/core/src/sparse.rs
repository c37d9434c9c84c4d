//! Symmetric sparse matrix stored as the lower triangle in compressed rows.

use std::io::{self, Write};

use nalgebra::DMatrix;

/// Symmetric matrix; row `i` stores columns `j <= i` in increasing order,
/// the diagonal always present and last.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds a matrix from `(row, col, value)` contributions. Entries above
    /// the diagonal are mirrored into the lower triangle; duplicates are
    /// summed in input order, so the result depends only on the sequence of
    /// contributions.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(i, j, v)| {
                assert!(i < dim && j < dim, "entry ({i}, {j}) outside dimension {dim}");
                (i.max(j), i.min(j), v)
            })
            .collect();
        entries.extend((0..dim).map(|i| (i, i, 0.0)));
        // Stable: equal positions keep contribution order.
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = Vec::with_capacity(dim + 1);
        let mut columns = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        let mut row = 0;
        for (i, j, v) in entries {
            while row < i {
                row_offsets.push(columns.len());
                row += 1;
            }
            let start = row_offsets[row];
            if columns.len() > start && *columns.last().unwrap() == j {
                *values.last_mut().unwrap() += v;
            } else {
                columns.push(j);
                values.push(v);
            }
        }
        while row < dim {
            row_offsets.push(columns.len());
            row += 1;
        }
        if dim == 0 {
            row_offsets.truncate(1);
        }
        Self {
            dim,
            row_offsets,
            columns,
            values,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, 1.0)))
    }

    /// `sum_k coeff_k * A_k`; all terms must share the dimension.
    pub fn linear_combination(dim: usize, terms: &[(f64, &SparseSymMatrix)]) -> Self {
        let triplets = terms.iter().flat_map(|(s, m)| {
            assert_eq!(m.dim, dim, "dimension mismatch in linear combination");
            m.iter_lower().map(move |(i, j, v)| (i, j, s * v))
        });
        Self::from_triplets(dim, triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries of the lower triangle including the diagonal.
    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_lower(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_offsets[i]..self.row_offsets[i + 1]).map(move |k| (i, self.columns[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = (i.max(j), i.min(j));
        let row = &self.columns[self.row_offsets[r]..self.row_offsets[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_offsets[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.values[self.row_offsets[i + 1] - 1]).collect()
    }

    /// `y = A x`, accumulated in storage order.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for k in start..end - 1 {
                let (j, a) = (self.columns[k], self.values[k]);
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + self.values[end - 1] * x[i];
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut total = 0.0;
        for i in 0..self.dim {
            let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut off = 0.0;
            for k in start..end - 1 {
                off += self.values[k] * x[self.columns[k]];
            }
            total += x[i] * (2.0 * off + self.values[end - 1] * x[i]);
        }
        total
    }

    /// Sum of all entries of the full symmetric matrix.
    pub fn sum_entries(&self) -> f64 {
        self.iter_lower().map(|(i, j, v)| if i == j { v } else { 2.0 * v }).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mul_vec(&vec![1.0; self.dim])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter_lower() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Matrix Market coordinate format, symmetric, lower triangle, 1-based.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", self.dim, self.dim, self.nnz_lower())?;
        for (i, j, v) in self.iter_lower() {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}
