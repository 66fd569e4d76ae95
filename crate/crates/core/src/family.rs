//! One-parameter operator families `H(φ) = Σ_k f_k(φ) V_k`.
//!
//! The blocks `V_k` are constant sparse matrices scattered onto a shared
//! sparsity pattern, so evaluating `H(φ)` or `dH/dφ` is a weighted sum of
//! value arrays with no re-sparsification.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

/// Scalar coefficient functions of the rotation angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    Const,
    /// `cos²φ`
    CosSq,
    /// `sin²φ`
    SinSq,
    /// `sin 2φ`
    Sin2,
}

impl Profile {
    pub fn value(self, phi: f64) -> f64 {
        match self {
            Profile::Const => 1.0,
            Profile::CosSq => phi.cos().powi(2),
            Profile::SinSq => phi.sin().powi(2),
            Profile::Sin2 => (2.0 * phi).sin(),
        }
    }

    pub fn derivative(self, phi: f64) -> f64 {
        match self {
            Profile::Const => 0.0,
            Profile::CosSq => -(2.0 * phi).sin(),
            Profile::SinSq => (2.0 * phi).sin(),
            Profile::Sin2 => 2.0 * (2.0 * phi).cos(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorFamily {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    blocks: Vec<(Profile, Vec<C64>)>,
}

impl OperatorFamily {
    /// Blocks with the same profile are summed in the order given.
    pub fn new(dim: usize, terms: Vec<(Profile, OperatorMatrix)>) -> Result<Self> {
        let mut grouped: Vec<(Profile, OperatorMatrix)> = Vec::new();
        for (profile, op) in terms {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            match grouped.iter_mut().find(|(p, _)| *p == profile) {
                Some((_, acc)) => *acc = acc.add(&op)?,
                None => grouped.push((profile, op)),
            }
        }

        let mut pattern: Vec<(usize, usize)> = grouped
            .iter()
            .flat_map(|(_, op)| op.iter().map(|(i, j, _)| (i, j)))
            .collect();
        pattern.sort_unstable();
        pattern.dedup();

        let mut row_ptr = vec![0usize; dim + 1];
        for &(i, _) in &pattern {
            row_ptr[i + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = pattern.iter().map(|&(_, j)| j).collect();

        let blocks = grouped
            .into_iter()
            .map(|(profile, op)| {
                let mut values = vec![C64::new(0.0, 0.0); col_idx.len()];
                for (i, j, v) in op.iter() {
                    let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                    let k = row
                        .binary_search(&j)
                        .expect("entry lies in the union pattern");
                    values[row_ptr[i] + k] = v;
                }
                (profile, values)
            })
            .collect();

        Ok(Self {
            dim,
            row_ptr,
            col_idx,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Row pointers and column indices of the shared pattern.
    pub(crate) fn pattern(&self) -> (&[usize], &[usize]) {
        (&self.row_ptr, &self.col_idx)
    }

    pub fn profiles(&self) -> impl Iterator<Item = Profile> + '_ {
        self.blocks.iter().map(|(p, _)| *p)
    }

    fn combine(&self, weights: impl Fn(Profile) -> f64, out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (profile, values) in &self.blocks {
            let w = weights(*profile);
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(values) {
                *o += v * w;
            }
        }
    }

    /// Values of `H(φ)` on the shared pattern.
    pub fn values_at(&self, phi: f64, out: &mut [C64]) {
        self.combine(|p| p.value(phi), out);
    }

    /// Values of `dH/dφ` on the shared pattern.
    pub fn derivative_values_at(&self, phi: f64, out: &mut [C64]) {
        self.combine(|p| p.derivative(phi), out);
    }

    /// `y = A x` for a value array on the shared pattern.
    pub fn matvec_values(&self, values: &[C64], x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    fn to_operator(&self, values: &[C64]) -> OperatorMatrix {
        let mut triplets = Vec::with_capacity(values.len());
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                triplets.push((i, self.col_idx[k], values[k]));
            }
        }
        OperatorMatrix::from_triplets(self.dim, triplets)
    }

    pub fn at(&self, phi: f64) -> OperatorMatrix {
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        self.values_at(phi, &mut values);
        self.to_operator(&values)
    }

    pub fn derivative(&self, phi: f64) -> OperatorMatrix {
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        self.derivative_values_at(phi, &mut values);
        self.to_operator(&values)
    }

    /// Upper bound on `‖H(φ)‖₁` over all φ, from the block norms.
    pub fn norm_bound(&self) -> f64 {
        let mut row_sums = vec![0.0; self.dim];
        // every profile is bounded by one in magnitude
        for (_, values) in &self.blocks {
            for (i, sum) in row_sums.iter_mut().enumerate() {
                for v in &values[self.row_ptr[i]..self.row_ptr[i + 1]] {
                    *sum += v.norm();
                }
            }
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let h = 1e-6;
        for p in [
            Profile::Const,
            Profile::CosSq,
            Profile::SinSq,
            Profile::Sin2,
        ] {
            for phi in [0.0, 0.3, 1.1, 2.5] {
                let fd = (p.value(phi + h) - p.value(phi - h)) / (2.0 * h);
                assert!((fd - p.derivative(phi)).abs() < 1e-8, "{p:?} at {phi}");
            }
        }
    }

    #[test]
    fn evaluation_matches_direct_sum() {
        let a = OperatorMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let b = OperatorMatrix::from_triplets(
            3,
            vec![(0, 2, C64::new(0.5, 0.0)), (2, 0, C64::new(0.5, 0.0))],
        );
        let fam = OperatorFamily::new(
            3,
            vec![(Profile::Const, a.clone()), (Profile::Sin2, b.clone())],
        )
        .unwrap();
        let phi: f64 = 0.4;
        let direct = OperatorMatrix::linear_combination(&[
            (C64::new(1.0, 0.0), &a),
            (C64::new((2.0 * phi).sin(), 0.0), &b),
        ])
        .unwrap();
        assert!(fam.at(phi).max_abs_diff(&direct).unwrap() < 1e-15);
        let d = fam.derivative(phi);
        assert!((d.get(0, 2).re - (2.0 * phi).cos()).abs() < 1e-15);
        assert_eq!(d.get(0, 0), C64::new(0.0, 0.0));
    }
}
