//! Lowest eigenpairs of sparse Hermitian matrices.
//!
//! The default solver is shift-invert Lanczos with full reorthogonalization.
//! The shift sits below the spectrum, so `H − σ` is positive definite and is
//! factored by a banded Cholesky decomposition; a failed factorization means
//! the shift was not below `λ_min` and is lowered. When `H` commutes with the
//! index reversal, each reversal sector is solved separately, which removes
//! the near-degeneracy of parity doublets from the Krylov problem.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Seed of the deterministic Lanczos start vectors.
pub const START_SEED: u64 = 0x5eed_c052;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Lanczos,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Residual bound relative to `‖H‖∞`.
    pub tolerance: f64,
    /// Cap on the Krylov dimension of one Lanczos run.
    pub max_iterations: usize,
    /// Split into reversal sectors when `H` commutes with the reversal.
    pub use_symmetry: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Lanczos,
            tolerance: 1e-10,
            max_iterations: 600,
            use_symmetry: true,
        }
    }
}

/// Raw eigenpairs, ascending, with the reversal sector they were found in.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub sectors: Vec<Option<i8>>,
    pub residuals: Vec<f64>,
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(v: &mut [C64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// `‖H v − λ v‖`
pub fn residual(h: &OperatorMatrix, value: f64, v: &[C64]) -> f64 {
    let hv = h.apply(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * value).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Banded Cholesky factor `L Lᴴ = A − σ I` of a Hermitian matrix.
pub struct BandedCholesky {
    n: usize,
    band: usize,
    // row i holds L[i][i − band ..= i]
    l: Vec<C64>,
}

impl BandedCholesky {
    pub fn factor(a: &OperatorMatrix, shift: f64) -> Result<Self> {
        let n = a.dim();
        let band = a.bandwidth();
        let w = band + 1;
        let mut l = vec![ZERO; n * w];
        for (i, j, v) in a.iter() {
            if j <= i {
                l[i * w + (j + band - i)] = v;
            }
        }
        for i in 0..n {
            l[i * w + band] -= shift;
        }
        for j in 0..n {
            let j0 = j.saturating_sub(band);
            let mut d = l[j * w + band].re;
            for k in j0..j {
                d -= l[j * w + (k + band - j)].norm_sqr();
            }
            if !(d > 0.0) {
                return Err(Error::SingularShift(j));
            }
            let d = d.sqrt();
            l[j * w + band] = C64::new(d, 0.0);
            for i in j + 1..n.min(j + band + 1) {
                let i0 = i.saturating_sub(band);
                let mut s = l[i * w + (j + band - i)];
                for k in i0.max(j0)..j {
                    s -= l[i * w + (k + band - i)] * l[j * w + (k + band - j)].conj();
                }
                l[i * w + (j + band - i)] = s / d;
            }
        }
        Ok(Self { n, band, l })
    }

    /// Overwrite `x` with `(A − σ I)⁻¹ x`.
    pub fn solve(&self, x: &mut [C64]) {
        let (n, b, w) = (self.n, self.band, self.band + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.l[i * w + (k + b - i)] * x[k];
            }
            x[i] = s / self.l[i * w + b].re;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n.min(i + b + 1) {
                s -= self.l[k * w + (i + b - k)].conj() * x[k];
            }
            x[i] = s / self.l[i * w + b].re;
        }
    }
}

/// Dense Hermitian eigendecomposition; the cross-check oracle.
pub fn dense_eigenpairs(h: &OperatorMatrix, k: usize) -> Result<Eigenpairs> {
    let n = h.dim();
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {n}-dimensional matrix"
        )));
    }
    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = if h.is_real() {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in h.iter() {
            m[(i, j)] = v.re;
        }
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order[..k]
            .iter()
            .map(|&c| {
                let col = eig
                    .eigenvectors
                    .column(c)
                    .iter()
                    .map(|&x| C64::new(x, 0.0))
                    .collect();
                (eig.eigenvalues[c], col)
            })
            .unzip()
    } else {
        let eig = SymmetricEigen::new(h.to_dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order[..k]
            .iter()
            .map(|&c| {
                (
                    eig.eigenvalues[c],
                    eig.eigenvectors.column(c).iter().copied().collect(),
                )
            })
            .unzip()
    };
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, v)| residual(h, l, v))
        .collect();
    Ok(Eigenpairs {
        sectors: vec![None; k],
        values,
        vectors,
        residuals,
    })
}

/// `k` lowest eigenpairs of a Hermitian matrix.
pub fn lowest_eigenpairs(
    h: &OperatorMatrix,
    k: usize,
    options: &EigenOptions,
) -> Result<Eigenpairs> {
    let n = h.dim();
    if !h.is_hermitian() {
        return Err(Error::InvalidParameter("matrix is not Hermitian".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 < k <= dimension, got k = {k} for dimension {n}"
        )));
    }
    // a wide band makes the banded factorization as costly as a dense one;
    // tiny matrices can have Krylov spaces too small for the requested pairs
    if options.method == EigenMethod::Dense
        || (4 * h.bandwidth() > n && n < 2000)
        || n < 16
        || k == n
    {
        return dense_eigenpairs(h, k);
    }
    let scale_h = h.norm_inf().max(f64::MIN_POSITIVE);
    let tol = options.tolerance * scale_h;
    let (factor, sigma) = factor_below_spectrum(h)?;
    log::trace!("shift-invert at sigma = {sigma}");
    let solver = ShiftInvert {
        h,
        factor: &factor,
        tol,
        max_iter: options.max_iterations,
    };

    let mut pairs: Vec<(f64, Vec<C64>, Option<i8>)> = Vec::new();
    if options.use_symmetry && h.is_reversal_symmetric() {
        for sign in [1i8, -1] {
            let sector = Sector::Reversal(sign);
            let want = k.min(sector.dim(n));
            if want == 0 {
                continue;
            }
            let found = solver.run(want, sector, &[], START_SEED + u64::from(sign < 0))?;
            pairs.extend(found.into_iter().map(|(l, v)| (l, v, Some(sign))));
        }
    } else {
        pairs = solver
            .deflated(k)?
            .into_iter()
            .map(|(l, v)| (l, v, None))
            .collect();
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(k);

    let residuals: Vec<f64> = pairs.iter().map(|(l, v, _)| residual(h, *l, v)).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if pairs.len() < k || worst > tol {
        return Err(Error::EigenNotConverged {
            wanted: k,
            converged: residuals.iter().filter(|&&r| r <= tol).count(),
            residual: worst,
        });
    }
    let mut out = Eigenpairs {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        sectors: Vec::with_capacity(k),
        residuals,
    };
    for (l, v, s) in pairs {
        out.values.push(l);
        out.vectors.push(v);
        out.sectors.push(s);
    }
    Ok(out)
}

/// Factor `H − σ` for a shift strictly below the spectrum.
fn factor_below_spectrum(h: &OperatorMatrix) -> Result<(BandedCholesky, f64)> {
    let (lo, hi) = h.gershgorin_bounds();
    let width = (hi - lo).max(1.0);
    let mut sigma = lo - 1e-3 * width;
    for _ in 0..8 {
        match BandedCholesky::factor(h, sigma) {
            Ok(f) => return Ok((f, sigma)),
            Err(Error::SingularShift(_)) => sigma -= width,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SingularShift(0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Sector {
    Full,
    /// Vectors with `v[n−1−i] = s·v[i]`.
    Reversal(i8),
}

impl Sector {
    fn dim(self, n: usize) -> usize {
        match self {
            Sector::Full => n,
            Sector::Reversal(1) => n.div_ceil(2),
            Sector::Reversal(_) => n / 2,
        }
    }

    fn project(self, v: &mut [C64]) {
        if let Sector::Reversal(s) = self {
            let n = v.len();
            let s = s as f64;
            for i in 0..n.div_ceil(2) {
                let j = n - 1 - i;
                let avg = 0.5 * (v[i] + v[j] * s);
                v[i] = avg;
                v[j] = avg * s;
            }
        }
    }
}

struct ShiftInvert<'a> {
    h: &'a OperatorMatrix,
    factor: &'a BandedCholesky,
    tol: f64,
    max_iter: usize,
}

impl ShiftInvert<'_> {
    fn start_vector(&self, sector: Sector, locked: &[Vec<C64>], seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<C64> = (0..self.h.dim())
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        sector.project(&mut v);
        orthogonalize(&mut v, locked);
        let nv = norm(&v);
        scale(&mut v, 1.0 / nv);
        v
    }

    /// Lowest `want` eigenpairs in a sector, orthogonal to `locked`.
    fn run(
        &self,
        want: usize,
        sector: Sector,
        locked: &[Vec<C64>],
        seed: u64,
    ) -> Result<Vec<(f64, Vec<C64>)>> {
        let n = self.h.dim();
        let limit = sector
            .dim(n)
            .saturating_sub(locked.len())
            .min(self.max_iter)
            .max(1);
        let want = want.min(limit);
        let mut basis: Vec<Vec<C64>> = vec![self.start_vector(sector, locked, seed)];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut best: Option<(Vec<(f64, Vec<C64>)>, f64)> = None;

        loop {
            let j = basis.len() - 1;
            let mut w = basis[j].clone();
            self.factor.solve(&mut w);
            sector.project(&mut w);
            let alpha = dot(&basis[j], &w).re;
            axpy(C64::new(-alpha, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(C64::new(-betas[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            // two passes of classical Gram–Schmidt keep the basis orthonormal
            for _ in 0..2 {
                orthogonalize(&mut w, &basis);
                orthogonalize(&mut w, locked);
            }
            alphas.push(alpha);
            let beta = norm(&w);
            let exhausted =
                beta <= 1e-13 * alpha.abs().max(f64::MIN_POSITIVE) || basis.len() >= limit;

            let m = alphas.len();
            if m >= want && (m % 5 == 0 || exhausted) {
                let ritz = self.ritz_pairs(&alphas, &betas, &basis, want);
                let worst = ritz
                    .iter()
                    .map(|(l, v)| residual(self.h, *l, v))
                    .fold(0.0, f64::max);
                if worst <= self.tol {
                    return Ok(ritz);
                }
                if best.as_ref().is_none_or(|(_, r)| worst < *r) {
                    best = Some((ritz, worst));
                }
            }
            if exhausted {
                let (ritz, worst) = best.unwrap_or_default();
                log::debug!("Krylov space exhausted at {m} vectors, worst residual {worst:e}");
                if ritz.len() == want && worst <= self.tol {
                    return Ok(ritz);
                }
                return Err(Error::EigenNotConverged {
                    wanted: want,
                    converged: 0,
                    residual: worst,
                });
            }
            betas.push(beta);
            scale(&mut w, 1.0 / beta);
            basis.push(w);
        }
    }

    /// Rayleigh–Ritz with `H` itself on the Ritz vectors of the tridiagonal.
    fn ritz_pairs(
        &self,
        alphas: &[f64],
        betas: &[f64],
        basis: &[Vec<C64>],
        want: usize,
    ) -> Vec<(f64, Vec<C64>)> {
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        // largest θ of (H − σ)⁻¹ are the lowest eigenvalues of H
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let n = self.h.dim();
        let vectors: Vec<Vec<C64>> = order[..want]
            .iter()
            .map(|&c| {
                let mut y = vec![ZERO; n];
                for (i, q) in basis.iter().enumerate().take(m) {
                    axpy(C64::new(eig.eigenvectors[(i, c)], 0.0), q, &mut y);
                }
                let ny = norm(&y);
                scale(&mut y, 1.0 / ny);
                y
            })
            .collect();
        rayleigh_ritz(self.h, &vectors)
    }

    /// Full-space solve with locking, for matrices without the reversal
    /// symmetry. Each pass works in the complement of the pairs already
    /// found, so a nearly degenerate partner that one Krylov run resolves
    /// slowly shows up as the lowest state of the next pass.
    fn deflated(&self, k: usize) -> Result<Vec<(f64, Vec<C64>)>> {
        let mut locked: Vec<(f64, Vec<C64>)> = Vec::new();
        for round in 0..4 * k + 4 {
            let vectors: Vec<Vec<C64>> = locked.iter().map(|(_, v)| v.clone()).collect();
            let want = k.saturating_sub(locked.len()).max(1);
            let found = self.run(
                want,
                Sector::Full,
                &vectors,
                START_SEED + 100 + round as u64,
            )?;
            let kth = if locked.len() >= k {
                locked[k - 1].0
            } else {
                f64::INFINITY
            };
            let fresh: Vec<_> = found.into_iter().filter(|(l, _)| *l < kth).collect();
            if fresh.is_empty() {
                return Ok(locked);
            }
            locked.extend(fresh);
            let vectors: Vec<Vec<C64>> = locked.iter().map(|(_, v)| v.clone()).collect();
            locked = rayleigh_ritz(self.h, &vectors);
            locked.truncate(k.max(locked.len().min(k + 2)));
        }
        log::warn!("deflation did not settle; returning the pairs found");
        Ok(locked)
    }
}

fn orthogonalize(w: &mut [C64], against: &[Vec<C64>]) {
    for q in against {
        let c = dot(q, w);
        axpy(-c, q, w);
    }
}

/// Diagonalize `H` on the span of orthonormal `vectors`; ascending pairs.
fn rayleigh_ritz(h: &OperatorMatrix, vectors: &[Vec<C64>]) -> Vec<(f64, Vec<C64>)> {
    let k = vectors.len();
    let hv: Vec<Vec<C64>> = vectors.iter().map(|v| h.apply(v)).collect();
    let mut sub = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            sub[(i, j)] = dot(&vectors[i], &hv[j]);
        }
    }
    // exact Hermitian symmetrization of the rounding in the projected matrix
    let sub = (sub.clone() + sub.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sub);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = h.dim();
    order
        .into_iter()
        .map(|c| {
            let mut y = vec![ZERO; n];
            for (i, v) in vectors.iter().enumerate() {
                axpy(eig.eigenvectors[(i, c)], v, &mut y);
            }
            let ny = norm(&y);
            scale(&mut y, 1.0 / ny);
            (eig.eigenvalues[c], y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian_banded(n: usize, band: usize, seed: u64, real: bool) -> OperatorMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((
                i,
                i,
                C64::new(4.0 * rng.random::<f64>() + i as f64 * 0.1, 0.0),
            ));
            for j in i + 1..n.min(i + band + 1) {
                let im = if real { 0.0 } else { rng.random::<f64>() - 0.5 };
                let v = C64::new(rng.random::<f64>() - 0.5, im);
                t.push((i, j, v));
                t.push((j, i, v.conj()));
            }
        }
        OperatorMatrix::from_triplets(n, t)
    }

    #[test]
    fn cholesky_solves_against_dense() {
        let h = random_hermitian_banded(40, 3, 1, false);
        let sigma = h.gershgorin_bounds().0 - 0.5;
        let f = BandedCholesky::factor(&h, sigma).unwrap();
        let x: Vec<C64> = (0..40).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut y = x.clone();
        f.solve(&mut y);
        // (H − σ) y = x
        let back: Vec<C64> = h
            .apply(&y)
            .iter()
            .zip(&y)
            .map(|(a, b)| a - b * sigma)
            .collect();
        let err: f64 = back
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite_shift() {
        let h = OperatorMatrix::from_diagonal(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            BandedCholesky::factor(&h, 0.5),
            Err(Error::SingularShift(0))
        ));
    }

    #[test]
    fn diagonal_matrix() {
        let h = OperatorMatrix::from_diagonal(&[0.0, 1.0, 2.0]);
        let r = lowest_eigenpairs(&h, 2, &EigenOptions::default()).unwrap();
        assert!(r.values[0].abs() < 1e-14 && (r.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense_complex() {
        let h = random_hermitian_banded(120, 5, 7, false);
        let opts = EigenOptions::default();
        let l = lowest_eigenpairs(&h, 8, &opts).unwrap();
        let d = dense_eigenpairs(&h, 8).unwrap();
        for (a, b) in l.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(l.residuals.iter().all(|&r| r <= 1e-8 * h.norm_inf()));
    }

    #[test]
    fn reversal_sectors_resolve_exact_degeneracy() {
        // symmetric double well: a reversal-symmetric tridiagonal matrix
        let n = 41;
        let mut t = Vec::new();
        for i in 0..n {
            let x = i as f64 - 20.0;
            t.push((i, i, C64::new(0.01 * (x * x - 100.0).powi(2), 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.0)));
                t.push((i + 1, i, C64::new(-1.0, 0.0)));
            }
        }
        let h = OperatorMatrix::from_triplets(n, t);
        assert!(h.is_reversal_symmetric());
        let l = lowest_eigenpairs(&h, 4, &EigenOptions::default()).unwrap();
        let d = dense_eigenpairs(&h, 4).unwrap();
        for (a, b) in l.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(l.sectors.iter().all(|s| s.is_some()));
        let no_sym = EigenOptions {
            use_symmetry: false,
            ..EigenOptions::default()
        };
        let f = lowest_eigenpairs(&h, 4, &no_sym).unwrap();
        for (a, b) in f.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_output() {
        let h = random_hermitian_banded(60, 4, 3, true);
        let a = lowest_eigenpairs(&h, 5, &EigenOptions::default()).unwrap();
        let b = lowest_eigenpairs(&h, 5, &EigenOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}
