//! Sparse complex matrices in compressed-row form.
//!
//! Entries inside a row are kept sorted by column and duplicates are summed at
//! construction, so two matrices built from the same triplets are bitwise
//! identical regardless of insertion order.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A square sparse complex matrix acting on a (tensor-product) charge basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Build from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped. The Hermitian flag is computed, not trusted.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            assert!(
                i < dim && j < dim,
                "triplet ({i}, {j}) outside dimension {dim}"
            );
            if let (Some(&last_i), Some(&last_j)) = (rows.last(), col_idx.last()) {
                if last_i == i && last_j == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(i);
            col_idx.push(j);
            values.push(v);
        }
        // drop exact zeros left over from cancellation
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((i, j), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[i + 1] += 1;
                keep_cols.push(j);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self {
            dim,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
            hermitian: false,
        };
        op.hermitian = op.check_hermitian();
        op
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        Self::from_triplets(diag.len(), triplets)
    }

    /// Dense conversion; intended for small matrices and oracles.
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether `A = A†` holds exactly (bitwise) for the stored entries.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Whether every stored entry has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterate all stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn check_hermitian(&self) -> bool {
        self.iter().all(|(i, j, v)| self.get(j, i) == v.conj())
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.iter()
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// `⟨bra| A |ket⟩`
    pub fn matrix_element(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            let mut row = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * ket[self.col_idx[k]];
            }
            acc += bra[i].conj() * row;
        }
        acc
    }

    pub fn scale(&self, c: C64) -> Self {
        let triplets = self.iter().map(|(i, j, v)| (i, j, v * c)).collect();
        Self::from_triplets(self.dim, triplets)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `Σ_k c_k A_k` over operators of equal dimension.
    pub fn linear_combination(terms: &[(C64, &OperatorMatrix)]) -> Result<Self> {
        let dim = terms.first().map(|t| t.1.dim).unwrap_or(0);
        let mut triplets = Vec::new();
        for (c, op) in terms {
            if op.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim,
                });
            }
            triplets.extend(op.iter().map(|(i, j, v)| (i, j, v * c)));
        }
        Ok(Self::from_triplets(dim, triplets))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(&[(C64::new(1.0, 0.0), self), (C64::new(1.0, 0.0), other)])
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(&[(C64::new(1.0, 0.0), self), (C64::new(-1.0, 0.0), other)])
    }

    /// Sparse matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut triplets = Vec::new();
        for (i, k, a) in self.iter() {
            for (j, b) in other.row(k) {
                triplets.push((i, j, a * b));
            }
        }
        Ok(Self::from_triplets(self.dim, triplets))
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Kronecker product `self ⊗ other`; `self` is the slow (outer) index.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.iter() {
            for (k, l, b) in other.iter() {
                triplets.push((i * d + k, j * d + l, a * b));
            }
        }
        Self::from_triplets(self.dim * d, triplets)
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.dim, triplets)
    }

    /// `max |A_ij|`
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij − B_ij|` over the union of both patterns.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm for
    /// Hermitian matrices.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum of a Hermitian matrix.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut centre = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    centre = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    /// Conjugation `P A P` by the index-reversal permutation `i → d−1−i`.
    pub fn reverse_conjugate(&self) -> Self {
        let n = self.dim;
        let triplets = self
            .iter()
            .map(|(i, j, v)| (n - 1 - i, n - 1 - j, v))
            .collect();
        Self::from_triplets(n, triplets)
    }

    /// Whether the operator commutes exactly with the index reversal.
    pub fn is_reversal_symmetric(&self) -> bool {
        let n = self.dim;
        self.iter()
            .all(|(i, j, v)| self.get(n - 1 - i, n - 1 - j) == v)
    }
}
