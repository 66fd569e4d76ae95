//! Charge-basis operators for compact phase modes.
//!
//! A mode with cutoff `n_cut` spans the charge states `n = −n_cut ..= n_cut`,
//! stored at index `n + n_cut`. Two-mode operators use the fixed ordering
//! `(θ, φ)`: index `iθ · d_φ + iφ`, θ being the slow index.
//!
//! Shift operators annihilate the boundary states (no wraparound), so the
//! phase-space identities below hold exactly only on states supported away
//! from `±n_cut`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

/// One compact phase mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Charge states run over `−n_cut ..= n_cut`.
    pub n_cut: usize,
    /// Charging energy in GHz.
    pub e_c: f64,
    /// Offset charge, in units of the charge quantum.
    #[serde(default)]
    pub n_offset: f64,
}

impl ModeSpec {
    pub fn new(n_cut: usize, e_c: f64) -> Result<Self> {
        Self::with_offset(n_cut, e_c, 0.0)
    }

    pub fn with_offset(n_cut: usize, e_c: f64, n_offset: f64) -> Result<Self> {
        let mode = Self {
            n_cut,
            e_c,
            n_offset,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cut < 1 {
            return Err(Error::InvalidParameter("n_cut must be at least 1".into()));
        }
        if !(self.e_c > 0.0 && self.e_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "charging energy must be positive, got {}",
                self.e_c
            )));
        }
        if !self.n_offset.is_finite() {
            return Err(Error::InvalidParameter(
                "offset charge must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Hilbert-space dimension `2 n_cut + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n_cut + 1
    }

    /// Charge value at basis index `i`, without the offset.
    pub fn charge(&self, index: usize) -> i64 {
        index as i64 - self.n_cut as i64
    }
}

/// The two modes `(θ, φ)` of the gate circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeBasis {
    pub theta: ModeSpec,
    pub phi: ModeSpec,
}

impl TwoModeBasis {
    pub fn new(theta: ModeSpec, phi: ModeSpec) -> Self {
        Self { theta, phi }
    }

    /// Identical modes sharing one cutoff and charging energy.
    pub fn symmetric(n_cut: usize, e_c: f64) -> Result<Self> {
        let mode = ModeSpec::new(n_cut, e_c)?;
        Ok(Self::new(mode, mode))
    }

    pub fn dim(&self) -> usize {
        self.theta.dim() * self.phi.dim()
    }

    /// Charge pair `(n_θ, n_φ)` at a two-mode index.
    pub fn charges(&self, index: usize) -> (i64, i64) {
        let d = self.phi.dim();
        (self.theta.charge(index / d), self.phi.charge(index % d))
    }
}

/// Which trigonometric function of the phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// `n̂ − n_offset`, diagonal in the charge basis.
pub fn number_operator(mode: &ModeSpec) -> OperatorMatrix {
    let diag: Vec<f64> = (0..mode.dim())
        .map(|i| mode.charge(i) as f64 - mode.n_offset)
        .collect();
    OperatorMatrix::from_diagonal(&diag)
}

/// `(n̂ − n_offset)²`
pub fn number_squared(mode: &ModeSpec) -> OperatorMatrix {
    let diag: Vec<f64> = (0..mode.dim())
        .map(|i| {
            let n = mode.charge(i) as f64 - mode.n_offset;
            n * n
        })
        .collect();
    OperatorMatrix::from_diagonal(&diag)
}

/// Triplets of `e^{ikθ̂}`: `|n⟩ → |n+k⟩`, truncated at the boundary.
fn shift_entries(dim: usize, k: i64) -> Vec<(usize, usize)> {
    (0..dim)
        .filter_map(|i| {
            let target = i as i64 + k;
            (0..dim as i64)
                .contains(&target)
                .then_some((target as usize, i))
        })
        .collect()
}

fn check_harmonic(mode: &ModeSpec, m: i64) -> Result<()> {
    if m.unsigned_abs() as usize > 2 * mode.n_cut {
        return Err(Error::HarmonicExceedsCutoff {
            harmonic: m,
            n_cut: mode.n_cut,
        });
    }
    Ok(())
}

/// `cos(mθ̂)` or `sin(mθ̂)` for `1 ≤ m ≤ 2 n_cut`.
pub fn harmonic_operator(mode: &ModeSpec, m: i64, kind: Trig) -> Result<OperatorMatrix> {
    if m < 1 {
        return Err(Error::InvalidParameter(format!(
            "harmonic order must be >= 1, got {m}"
        )));
    }
    check_harmonic(mode, m)?;
    Ok(trig_of_shift(
        mode.dim(),
        &shift_entries(mode.dim(), m),
        kind,
    ))
}

/// `(U + U†)/2` or `(U − U†)/(2i)` for a shift `U` with unit entries.
fn trig_of_shift(dim: usize, shift: &[(usize, usize)], kind: Trig) -> OperatorMatrix {
    let (fwd, bwd) = match kind {
        Trig::Cos => (C64::new(0.5, 0.0), C64::new(0.5, 0.0)),
        Trig::Sin => (C64::new(0.0, -0.5), C64::new(0.0, 0.5)),
    };
    let mut triplets = Vec::with_capacity(2 * shift.len());
    for &(i, j) in shift {
        triplets.push((i, j, fwd));
        triplets.push((j, i, bwd));
    }
    OperatorMatrix::from_triplets(dim, triplets)
}

/// `op_θ ⊗ op_φ` with θ as the slow index.
pub fn two_mode_embed(op_theta: &OperatorMatrix, op_phi: &OperatorMatrix) -> OperatorMatrix {
    op_theta.kron(op_phi)
}

/// Embed a θ-mode operator as `op ⊗ I`.
pub fn on_theta(basis: &TwoModeBasis, op: &OperatorMatrix) -> OperatorMatrix {
    op.kron(&OperatorMatrix::identity(basis.phi.dim()))
}

/// Embed a φ-mode operator as `I ⊗ op`.
pub fn on_phi(basis: &TwoModeBasis, op: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix::identity(basis.theta.dim()).kron(op)
}

/// `cos(m_θ θ̂ − m_φ φ̂)` or `sin(m_θ θ̂ − m_φ φ̂)` from the joint shift
/// `e^{i m_θ θ̂} e^{−i m_φ φ̂}`.
pub fn joint_harmonic(
    basis: &TwoModeBasis,
    m_theta: i64,
    m_phi: i64,
    kind: Trig,
) -> Result<OperatorMatrix> {
    check_harmonic(&basis.theta, m_theta)?;
    check_harmonic(&basis.phi, m_phi)?;
    let dim = basis.dim();
    if m_theta == 0 && m_phi == 0 {
        return Ok(match kind {
            Trig::Cos => OperatorMatrix::identity(dim),
            Trig::Sin => OperatorMatrix::zeros(dim),
        });
    }
    let d_phi = basis.phi.dim();
    let theta_shift = shift_entries(basis.theta.dim(), m_theta);
    let phi_shift = shift_entries(d_phi, -m_phi);
    let joint: Vec<(usize, usize)> = theta_shift
        .iter()
        .flat_map(|&(ti, tj)| {
            phi_shift
                .iter()
                .map(move |&(pi, pj)| (ti * d_phi + pi, tj * d_phi + pj))
        })
        .collect();
    Ok(trig_of_shift(dim, &joint, kind))
}

/// Joint charge inversion `|n_θ, n_φ⟩ → |−n_θ, −n_φ⟩`.
pub fn parity_operator(basis: &TwoModeBasis) -> Result<OperatorMatrix> {
    for mode in [&basis.theta, &basis.phi] {
        if mode.n_offset != 0.0 {
            return Err(Error::ParityUndefined {
                offset: mode.n_offset,
            });
        }
    }
    let dim = basis.dim();
    // with symmetric charge ranges the inversion is the index reversal
    let triplets = (0..dim)
        .map(|i| (dim - 1 - i, i, C64::new(1.0, 0.0)))
        .collect();
    Ok(OperatorMatrix::from_triplets(dim, triplets))
}

/// Apply the joint parity to a state vector (index reversal).
pub fn apply_parity(state: &[C64]) -> Vec<C64> {
    state.iter().rev().copied().collect()
}
