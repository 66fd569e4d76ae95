//! Spectra, parity labels, noise matrix elements and phase-space pictures of
//! the two-mode Hamiltonians.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::charge_basis::{
    apply_parity, harmonic_operator, number_operator, on_phi, on_theta, Trig, TwoModeBasis,
};
use crate::eigen::{dot, lowest_eigenpairs, norm, EigenOptions};
use crate::error::{Error, Result};
use crate::hamiltonians::{model_hamiltonian, CircuitParams, Model, SinSinVariant};
use crate::operator::OperatorMatrix;

/// Doublets closer than this fraction of `ω₂ − ω₀` are treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// `|⟨ψ|Π|ψ⟩|` above which a state gets a parity label.
pub const PARITY_CONFIDENCE: f64 = 0.99;

/// Successive-overlap floor below which a level crossing is flagged.
pub const CROSSING_OVERLAP: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralResult {
    /// Rotation angle, when the Hamiltonian came from a family.
    pub phi_angle: Option<f64>,
    /// Ascending eigenvalues in rad/ns.
    pub energies: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    /// `±1` where `|⟨ψ|Π|ψ⟩| > 0.99`.
    pub parities: Vec<Option<i8>>,
    pub residuals: Vec<f64>,
}

impl SpectralResult {
    /// `ωₙ − ω₀` in GHz.
    pub fn transition_ghz(&self, n: usize) -> f64 {
        (self.energies[n] - self.energies[0]) / TAU
    }
}

/// Make the largest amplitude real and positive. Ties within 10⁻⁶ of the
/// maximum go to the smallest index.
pub fn fix_gauge(state: &mut [C64]) {
    let max = state.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = state
        .iter()
        .position(|c| c.norm() >= max * (1.0 - 1e-6))
        .expect("maximum is attained");
    let phase = state[pivot].conj() / state[pivot].norm();
    state.iter_mut().for_each(|c| *c *= phase);
}

/// `⟨ψ|Π|ψ⟩` for the joint charge inversion.
pub fn parity_expectation(state: &[C64]) -> C64 {
    dot(state, &apply_parity(state))
}

fn parity_label(state: &[C64]) -> Option<i8> {
    let p = parity_expectation(state);
    (p.norm() > PARITY_CONFIDENCE).then(|| if p.re > 0.0 { 1 } else { -1 })
}

/// Lowest `k` eigenpairs with gauge fixing, parity labels and, for
/// degenerate doublets found without the sector split, parity-diagonal
/// bases.
pub fn lowest_eigenpairs_of(
    h: &OperatorMatrix,
    k: usize,
    options: &EigenOptions,
) -> Result<SpectralResult> {
    let mut raw = lowest_eigenpairs(h, k, options)?;
    let reference = if k >= 3 {
        raw.values[2] - raw.values[0]
    } else {
        raw.values[k - 1] - raw.values[0]
    };
    let mut i = 0;
    while i + 1 < k {
        let gap = raw.values[i + 1] - raw.values[i];
        let unlabeled = raw.sectors[i].is_none() || raw.sectors[i + 1].is_none();
        if unlabeled && reference > 0.0 && gap < DEGENERACY_THRESHOLD * reference {
            align_doublet_with_parity(h, &mut raw.values, &mut raw.vectors, i);
            i += 2;
        } else {
            i += 1;
        }
    }
    let mut states = raw.vectors;
    states.iter_mut().for_each(|s| fix_gauge(s));
    let parities = states.iter().map(|s| parity_label(s)).collect();
    Ok(SpectralResult {
        phi_angle: None,
        energies: raw.values,
        states,
        parities,
        residuals: raw.residuals,
    })
}

/// Rotate states `i, i+1` onto the eigenvectors of Π within their span.
fn align_doublet_with_parity(
    h: &OperatorMatrix,
    values: &mut [f64],
    vectors: &mut [Vec<C64>],
    i: usize,
) {
    let (a, b) = (&vectors[i], &vectors[i + 1]);
    let pa = apply_parity(a);
    let pb = apply_parity(b);
    let m = nalgebra::Matrix2::new(dot(a, &pa), dot(a, &pb), dot(b, &pa), dot(b, &pb));
    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut rotated: Vec<(f64, Vec<C64>)> = (0..2)
        .map(|c| {
            let u = eig.eigenvectors.column(c);
            let v: Vec<C64> = a.iter().zip(b).map(|(x, y)| u[0] * x + u[1] * y).collect();
            let energy = dot(&v, &h.apply(&v)).re / norm(&v).powi(2);
            (energy, v)
        })
        .collect();
    rotated.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (offset, (e, v)) in rotated.into_iter().enumerate() {
        values[i + offset] = e;
        vectors[i + offset] = v;
    }
}

/// Spectrum of a model at one angle.
pub fn spectrum_at(
    model: Model,
    phi: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
    k: usize,
    options: &EigenOptions,
) -> Result<SpectralResult> {
    let h = model_hamiltonian(model, phi, params, basis)?;
    let mut result = lowest_eigenpairs_of(&h, k, options)?;
    result.phi_angle = Some(phi);
    Ok(result)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSweep {
    pub results: Vec<SpectralResult>,
    /// `(grid index, level)` pairs whose overlap with the previous grid
    /// point fell below 0.5.
    pub crossings: Vec<(usize, usize)>,
}

/// Spectra on a φ grid, with the eigenvector phases made continuous.
pub fn spectrum_vs_angle(
    model: Model,
    params: &CircuitParams,
    basis: &TwoModeBasis,
    phi_grid: &[f64],
    k: usize,
    options: &EigenOptions,
) -> Result<SpectrumSweep> {
    if let Some(bad) = phi_grid.iter().find(|p| !(0.0..=PI).contains(*p)) {
        return Err(Error::InvalidParameter(format!(
            "phi = {bad} outside [0, pi]"
        )));
    }
    let mut results = phi_grid
        .par_iter()
        .map(|&phi| spectrum_at(model, phi, params, basis, k, options))
        .collect::<Result<Vec<_>>>()?;
    let crossings = align_gauges(&mut results);
    Ok(SpectrumSweep { results, crossings })
}

/// Rotate each state so its overlap with the previous grid point is real
/// and positive; returns the flagged crossings.
pub fn align_gauges(results: &mut [SpectralResult]) -> Vec<(usize, usize)> {
    let mut crossings = Vec::new();
    for g in 1..results.len() {
        let (done, rest) = results.split_at_mut(g);
        let prev = &done[g - 1];
        let cur = &mut rest[0];
        for (n, state) in cur.states.iter_mut().enumerate() {
            let ov = dot(&prev.states[n], state);
            if ov.norm() < CROSSING_OVERLAP {
                crossings.push((g, n));
                continue;
            }
            let phase = ov.conj() / ov.norm();
            state.iter_mut().for_each(|c| *c *= phase);
        }
    }
    crossings
}

/// Logical-doublet matrix elements of the noise-coupling operators of one mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeNoise {
    /// `|⟨0|sin x̂|1⟩|`
    pub sin_01: f64,
    /// `|⟨0|n̂_x|1⟩|`
    pub n_01: f64,
    /// `|⟨0|cos x̂|1⟩|`
    pub cos_01: f64,
    /// `|⟨0|cos x̂|0⟩ − ⟨1|cos x̂|1⟩|`
    pub cos_diag_diff: f64,
    /// `|⟨0|n̂_x|0⟩ − ⟨1|n̂_x|1⟩|`
    pub n_diag_diff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseElements {
    pub theta: ModeNoise,
    pub phi: ModeNoise,
}

pub fn noise_matrix_elements(
    result: &SpectralResult,
    basis: &TwoModeBasis,
) -> Result<NoiseElements> {
    if result.states.len() < 2 {
        return Err(Error::InvalidParameter("need at least two states".into()));
    }
    let (s0, s1) = (&result.states[0], &result.states[1]);
    let mode_noise =
        |embed: &dyn Fn(&OperatorMatrix) -> OperatorMatrix, spec| -> Result<ModeNoise> {
            let sin = embed(&harmonic_operator(spec, 1, Trig::Sin)?);
            let cos = embed(&harmonic_operator(spec, 1, Trig::Cos)?);
            let n = embed(&number_operator(spec));
            Ok(ModeNoise {
                sin_01: sin.matrix_element(s0, s1).norm(),
                n_01: n.matrix_element(s0, s1).norm(),
                cos_01: cos.matrix_element(s0, s1).norm(),
                cos_diag_diff: (cos.matrix_element(s0, s0) - cos.matrix_element(s1, s1)).norm(),
                n_diag_diff: (n.matrix_element(s0, s0) - n.matrix_element(s1, s1)).norm(),
            })
        };
    Ok(NoiseElements {
        theta: mode_noise(&|op| on_theta(basis, op), &basis.theta)?,
        phi: mode_noise(&|op| on_phi(basis, op), &basis.phi)?,
    })
}

/// A two-mode wavefunction on a `[−π, π)²` grid, rows indexed by θ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSpaceState {
    pub theta_axis: Vec<f64>,
    pub phi_axis: Vec<f64>,
    pub amplitudes: Vec<Vec<C64>>,
}

impl PhaseSpaceState {
    /// `Σ |ψ|² Δθ Δϕ`
    pub fn grid_norm(&self) -> f64 {
        let d = (TAU / self.theta_axis.len() as f64) * (TAU / self.phi_axis.len() as f64);
        self.amplitudes
            .iter()
            .flat_map(|row| row.iter())
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            * d
    }

    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.amplitudes
            .iter()
            .map(|row| row.iter().map(|c| c.norm_sqr()).collect())
            .collect()
    }
}

/// `ψ(θ, ϕ) = (2π)⁻¹ Σ c_{n_θ n_φ} e^{i n_θ θ} e^{i n_φ ϕ}`, normalized on
/// the grid measure. Grids with at least `2 n_cut + 1` points per axis are
/// alias-free, so the normalization is then Parseval's identity.
pub fn to_phase_space(
    state: &[C64],
    basis: &TwoModeBasis,
    theta_points: usize,
    phi_points: usize,
) -> Result<PhaseSpaceState> {
    if state.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: state.len(),
        });
    }
    let theta_axis = crate::hamiltonians::uniform_axis(theta_points);
    let phi_axis = crate::hamiltonians::uniform_axis(phi_points);
    let (dt, dp) = (basis.theta.dim(), basis.phi.dim());
    let waves = |axis: &[f64], mode: &crate::charge_basis::ModeSpec| -> Vec<Vec<C64>> {
        axis.iter()
            .map(|&x| {
                (0..mode.dim())
                    .map(|i| C64::from_polar(1.0, mode.charge(i) as f64 * x))
                    .collect()
            })
            .collect()
    };
    let theta_waves = waves(&theta_axis, &basis.theta);
    let phi_waves = waves(&phi_axis, &basis.phi);
    // partial sums over n_φ first
    let partial: Vec<Vec<C64>> = (0..dt)
        .map(|it| {
            phi_waves
                .iter()
                .map(|w| (0..dp).map(|ip| state[it * dp + ip] * w[ip]).sum())
                .collect()
        })
        .collect();
    let amplitudes: Vec<Vec<C64>> = theta_waves
        .iter()
        .map(|w| {
            (0..phi_points)
                .map(|jp| (0..dt).map(|it| partial[it][jp] * w[it]).sum::<C64>() / TAU)
                .collect()
        })
        .collect();
    let mut grid = PhaseSpaceState {
        theta_axis,
        phi_axis,
        amplitudes,
    };
    let scale = grid.grid_norm().sqrt();
    if scale > 0.0 {
        let charge_norm = norm(state);
        for row in &mut grid.amplitudes {
            row.iter_mut().for_each(|c| *c *= charge_norm / scale);
        }
    }
    Ok(grid)
}

/// Per-angle comparison of the `cos(θ̂−φ̂)` circuit and a sin·sin model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelComparison {
    pub phi: f64,
    pub energies_circuit: Vec<f64>,
    pub energies_sin_sin: Vec<f64>,
    /// `ω₁ − ω₀` in GHz for each model.
    pub splitting_circuit: f64,
    pub splitting_sin_sin: f64,
    /// `ω₂ − ω₀` in GHz for each model.
    pub gap_02_circuit: f64,
    pub gap_02_sin_sin: f64,
    /// `|⟨ψₙ^cos|ψₙ^sin⟩|` for `n = 0, 1, 2`.
    pub overlaps: Vec<f64>,
    /// `‖P_cos P_sin‖_F / √2` over the lowest doublets, basis independent.
    pub doublet_overlap: f64,
}

pub fn compare_models(
    params: &CircuitParams,
    basis: &TwoModeBasis,
    phi_grid: &[f64],
    k: usize,
    variant: SinSinVariant,
    options: &EigenOptions,
) -> Result<Vec<ModelComparison>> {
    if k < 3 {
        return Err(Error::InvalidParameter(
            "model comparison needs k >= 3".into(),
        ));
    }
    phi_grid
        .par_iter()
        .map(|&phi| {
            let c = spectrum_at(Model::Circuit, phi, params, basis, k, options)?;
            let s = spectrum_at(Model::SinSin(variant), phi, params, basis, k, options)?;
            let overlaps = (0..3)
                .map(|n| dot(&c.states[n], &s.states[n]).norm())
                .collect();
            let doublet = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| dot(&c.states[a], &s.states[b]).norm_sqr())
                .sum::<f64>();
            Ok(ModelComparison {
                phi,
                splitting_circuit: c.transition_ghz(1),
                splitting_sin_sin: s.transition_ghz(1),
                gap_02_circuit: c.transition_ghz(2),
                gap_02_sin_sin: s.transition_ghz(2),
                energies_circuit: c.energies,
                energies_sin_sin: s.energies,
                overlaps,
                doublet_overlap: (doublet / 2.0).sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::EigenMethod;
    use crate::hamiltonians::single_qubit_hamiltonian;
    use crate::junction::SquidCoeffs;
    use std::f64::consts::FRAC_PI_2;

    fn basis(n_cut: usize, e_c: f64) -> TwoModeBasis {
        TwoModeBasis::symmetric(n_cut, e_c).unwrap()
    }

    #[test]
    fn gauge_rule() {
        let mut v = vec![C64::new(0.0, 0.5), C64::new(0.0, -0.5), C64::new(0.1, 0.0)];
        fix_gauge(&mut v);
        assert_eq!(v[0], C64::new(0.5, 0.0));
        assert!((v[1] - C64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transmon_limit_has_negative_anharmonicity() {
        let mode = crate::charge_basis::ModeSpec::new(10, 0.3).unwrap();
        let h = single_qubit_hamiltonian(
            &mode,
            &SquidCoeffs {
                alpha: 15.0,
                beta: 0.0,
                epsilon: 0.0,
            },
        )
        .unwrap();
        let dense = EigenOptions {
            method: EigenMethod::Dense,
            ..EigenOptions::default()
        };
        let r = lowest_eigenpairs_of(&h, 3, &dense).unwrap();
        assert!(r.energies[1] - r.energies[0] > r.energies[2] - r.energies[1]);
    }

    #[test]
    fn double_well_single_mode_is_quasi_degenerate() {
        let mode = crate::charge_basis::ModeSpec::new(12, 0.2).unwrap();
        let h = single_qubit_hamiltonian(
            &mode,
            &SquidCoeffs {
                alpha: 0.0,
                beta: 20.0,
                epsilon: 0.0,
            },
        )
        .unwrap();
        let r = lowest_eigenpairs_of(&h, 4, &EigenOptions::default()).unwrap();
        assert!(r.energies[1] - r.energies[0] < 1e-3 * (r.energies[2] - r.energies[0]));
        assert_eq!(r.parities[0].unwrap() * r.parities[1].unwrap(), -1);
    }

    #[test]
    fn decoupled_energies_are_sums() {
        let b = basis(6, 0.4);
        let p = CircuitParams::symmetric(10.0, 10.0, 10.0, 0.4);
        let opts = EigenOptions::default();
        let two = spectrum_at(Model::Circuit, 0.0, &p, &b, 4, &opts).unwrap();
        let dw = single_qubit_hamiltonian(
            &b.theta,
            &SquidCoeffs {
                alpha: 0.0,
                beta: 10.0,
                epsilon: 0.0,
            },
        )
        .unwrap();
        let sw = single_qubit_hamiltonian(
            &b.phi,
            &SquidCoeffs {
                alpha: 10.0,
                beta: 0.0,
                epsilon: 0.0,
            },
        )
        .unwrap();
        let e_dw = lowest_eigenpairs_of(&dw, 3, &opts).unwrap().energies;
        let e_sw = lowest_eigenpairs_of(&sw, 2, &opts).unwrap().energies;
        assert!((two.energies[0] - (e_dw[0] + e_sw[0])).abs() < 1e-9);
        assert!((two.energies[1] - (e_dw[1] + e_sw[0])).abs() < 1e-9);
    }

    #[test]
    fn lanczos_agrees_with_dense_on_circuit() {
        let b = basis(6, 0.4);
        let p = CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4);
        let dense = EigenOptions {
            method: EigenMethod::Dense,
            ..EigenOptions::default()
        };
        for phi in [0.0, 0.5, 1.3] {
            let l = spectrum_at(Model::Circuit, phi, &p, &b, 6, &EigenOptions::default()).unwrap();
            let d = spectrum_at(Model::Circuit, phi, &p, &b, 6, &dense).unwrap();
            for (x, y) in l.energies.iter().zip(&d.energies) {
                assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn phase_space_of_neutral_state_is_flat() {
        let b = basis(3, 0.4);
        let mut state = vec![C64::new(0.0, 0.0); b.dim()];
        state[b.dim() / 2] = C64::new(1.0, 0.0);
        let ps = to_phase_space(&state, &b, 16, 16).unwrap();
        let v0 = ps.amplitudes[0][0];
        assert!(ps
            .amplitudes
            .iter()
            .flatten()
            .all(|c| (c - v0).norm() < 1e-14));
        assert!((v0.re - 1.0 / TAU).abs() < 1e-14);
        assert!((ps.grid_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_space_parseval_without_rescaling() {
        let b = basis(3, 0.4);
        let state: Vec<C64> = (0..b.dim())
            .map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let n = norm(&state);
        let state: Vec<C64> = state.iter().map(|c| c / n).collect();
        // 7 points per axis are alias-free for n_cut = 3
        let ps = to_phase_space(&state, &b, 7, 7).unwrap();
        let direct: f64 = ps.amplitudes[3][2].norm();
        let mut manual = C64::new(0.0, 0.0);
        for (idx, c) in state.iter().enumerate() {
            let (nt, np) = b.charges(idx);
            manual += c * C64::from_polar(
                1.0,
                nt as f64 * ps.theta_axis[3] + np as f64 * ps.phi_axis[2],
            );
        }
        assert!((direct - manual.norm() / TAU).abs() < 1e-12);
    }

    #[test]
    fn noise_parity_selection() {
        let b = basis(8, 0.4);
        let p = CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4);
        let r = spectrum_at(Model::Circuit, 0.0, &p, &b, 3, &EigenOptions::default()).unwrap();
        assert_eq!(r.parities[0].unwrap() * r.parities[1].unwrap(), -1);
        let noise = noise_matrix_elements(&r, &b).unwrap();
        assert!(noise.theta.cos_01 < 1e-12 && noise.phi.cos_01 < 1e-12);
        assert!(noise.theta.sin_01 > 0.5);
    }

    #[test]
    fn sweep_flags_nothing_on_smooth_path() {
        let b = basis(5, 0.4);
        let p = CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4);
        let grid: Vec<f64> = (0..9).map(|i| FRAC_PI_2 * i as f64 / 32.0).collect();
        let sweep =
            spectrum_vs_angle(Model::Circuit, &p, &b, &grid, 3, &EigenOptions::default()).unwrap();
        for g in 1..grid.len() {
            let ov = dot(&sweep.results[g - 1].states[2], &sweep.results[g].states[2]);
            assert!(ov.im.abs() < 1e-12 && ov.re > 0.0);
        }
    }
}
