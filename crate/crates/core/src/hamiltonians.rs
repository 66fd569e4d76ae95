//! Hamiltonians and classical potentials of the rotating two-mode circuit.
//!
//! Parameters are plain frequencies in GHz; every returned operator is in
//! angular units (rad/ns), i.e. multiplied by 2π once here.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::charge_basis::{
    harmonic_operator, joint_harmonic, number_operator, number_squared, on_phi, on_theta, ModeSpec,
    Trig, TwoModeBasis,
};
use crate::error::{Error, Result};
use crate::family::{OperatorFamily, Profile};
use crate::junction::SquidCoeffs;
use crate::operator::OperatorMatrix;

/// Energies of the two-qubit circuit and its coupler, in GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    pub e_c_theta: f64,
    pub e_c_phi: f64,
    /// Capacitive coupling `g n̂_θ n̂_φ`.
    #[serde(default)]
    pub g: f64,
    /// Coupler first harmonic; `None` means `zeta`.
    #[serde(default)]
    pub alpha_g: Option<f64>,
    #[serde(default)]
    pub beta_g: f64,
    #[serde(default)]
    pub epsilon_g: f64,
    /// `sin θ̂` asymmetry of the θ-mode single-well junction pair.
    #[serde(default)]
    pub epsilon_theta: f64,
    /// `sin φ̂` asymmetry of the φ-mode single-well junction pair.
    #[serde(default)]
    pub epsilon_phi: f64,
}

impl CircuitParams {
    /// Identical modes with only the rotation coupling.
    pub fn symmetric(alpha: f64, beta: f64, zeta: f64, e_c: f64) -> Self {
        Self {
            alpha,
            beta,
            zeta,
            e_c_theta: e_c,
            e_c_phi: e_c,
            g: 0.0,
            alpha_g: None,
            beta_g: 0.0,
            epsilon_g: 0.0,
            epsilon_theta: 0.0,
            epsilon_phi: 0.0,
        }
    }

    pub fn alpha_g(&self) -> f64 {
        self.alpha_g.unwrap_or(self.zeta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got {} and {}",
                self.alpha, self.beta
            )));
        }
        if !(self.e_c_theta > 0.0 && self.e_c_phi > 0.0) {
            return Err(Error::InvalidParameter(
                "charging energies must be positive".into(),
            ));
        }
        let all = [
            self.zeta,
            self.g,
            self.alpha_g(),
            self.beta_g,
            self.epsilon_g,
            self.epsilon_theta,
            self.epsilon_phi,
        ];
        if !all
            .iter()
            .chain([self.alpha, self.beta].iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidParameter("energies must be finite".into()));
        }
        Ok(())
    }

    /// Whether the circuit commutes with joint charge inversion.
    pub fn parity_symmetric(&self) -> bool {
        self.epsilon_g == 0.0 && self.epsilon_theta == 0.0 && self.epsilon_phi == 0.0
    }
}

/// The two-mode Hamiltonians that can be built at a rotation angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Rotation through the coupler junction, `cos(θ̂ − φ̂)` coupling.
    Circuit,
    /// Ideal beamsplitter form with `sin θ̂ sin φ̂` coupling.
    SinSin(SinSinVariant),
    /// Rescaled single-coordinate model of the lowest states.
    LowEnergy,
    /// Low-energy model with the coupling-induced renormalization.
    LowEnergyCorrected,
}

/// The θ single-well term of the sin·sin model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SinSinVariant {
    /// `−α sin²φ sin θ̂`
    Sine,
    /// `−α sin²φ cos θ̂`
    Cosine,
}

fn angular(ghz: f64) -> f64 {
    TAU * ghz
}

fn kinetic(mode: &ModeSpec) -> OperatorMatrix {
    number_squared(mode).scale_real(angular(4.0 * mode.e_c))
}

/// `4E_C n̂² − α cos θ̂ + β cos 2θ̂ + ε sin θ̂`
pub fn single_qubit_hamiltonian(mode: &ModeSpec, coeffs: &SquidCoeffs) -> Result<OperatorMatrix> {
    mode.validate()?;
    let cos1 = harmonic_operator(mode, 1, Trig::Cos)?;
    let cos2 = harmonic_operator(mode, 2, Trig::Cos)?;
    let sin1 = harmonic_operator(mode, 1, Trig::Sin)?;
    let k = kinetic(mode);
    OperatorMatrix::linear_combination(&[
        (C64::new(1.0, 0.0), &k),
        (C64::new(-angular(coeffs.alpha), 0.0), &cos1),
        (C64::new(angular(coeffs.beta), 0.0), &cos2),
        (C64::new(angular(coeffs.epsilon), 0.0), &sin1),
    ])
}

fn theta_harmonic(basis: &TwoModeBasis, m: i64, kind: Trig) -> Result<OperatorMatrix> {
    Ok(on_theta(basis, &harmonic_operator(&basis.theta, m, kind)?))
}

fn phi_harmonic(basis: &TwoModeBasis, m: i64, kind: Trig) -> Result<OperatorMatrix> {
    Ok(on_phi(basis, &harmonic_operator(&basis.phi, m, kind)?))
}

/// `2π Σ c_k A_k`, the zero matrix when every coefficient vanishes.
fn combo(dim: usize, terms: &[(f64, &OperatorMatrix)]) -> Result<OperatorMatrix> {
    let terms: Vec<(C64, &OperatorMatrix)> = terms
        .iter()
        .filter(|(c, _)| *c != 0.0)
        .map(|&(c, op)| (C64::new(angular(c), 0.0), op))
        .collect();
    if terms.is_empty() {
        return Ok(OperatorMatrix::zeros(dim));
    }
    OperatorMatrix::linear_combination(&terms)
}

fn kinetic_block(basis: &TwoModeBasis) -> Result<OperatorMatrix> {
    on_theta(basis, &kinetic(&basis.theta)).add(&on_phi(basis, &kinetic(&basis.phi)))
}

/// `g n̂_θ n̂_φ − α_g cos(θ̂−φ̂) + β_g cos(2θ̂−2φ̂) + ε_g sin(θ̂−φ̂)`
pub fn coupler_hamiltonian(params: &CircuitParams, basis: &TwoModeBasis) -> Result<OperatorMatrix> {
    let nn = on_theta(basis, &number_operator(&basis.theta))
        .matmul(&on_phi(basis, &number_operator(&basis.phi)))?;
    let c1 = joint_harmonic(basis, 1, 1, Trig::Cos)?;
    let c2 = joint_harmonic(basis, 2, 2, Trig::Cos)?;
    let s1 = joint_harmonic(basis, 1, 1, Trig::Sin)?;
    let terms = [
        (params.g, &nn),
        (-params.alpha_g(), &c1),
        (params.beta_g, &c2),
        (params.epsilon_g, &s1),
    ];
    combo(basis.dim(), &terms)
}

/// Operator family of the circuit Hamiltonian.
///
/// The coupler junctions enter with the rotation profile `sin 2φ / 2`
/// (so the defaults give `−(ζ/2) sin 2φ cos(θ̂−φ̂)`); the capacitive `g` term
/// is static. The `ε_θ`, `ε_φ` asymmetries follow the single-well profiles.
pub fn circuit_family(params: &CircuitParams, basis: &TwoModeBasis) -> Result<OperatorFamily> {
    params.validate()?;
    let (a, b, d) = (params.alpha, params.beta, basis.dim());
    let cos_t = theta_harmonic(basis, 1, Trig::Cos)?;
    let cos2_t = theta_harmonic(basis, 2, Trig::Cos)?;
    let cos_p = phi_harmonic(basis, 1, Trig::Cos)?;
    let cos2_p = phi_harmonic(basis, 2, Trig::Cos)?;

    let mut cos_sq = combo(d, &[(b, &cos2_t), (-a, &cos_p)])?;
    let mut sin_sq = combo(d, &[(-a, &cos_t), (b, &cos2_p)])?;
    if params.epsilon_phi != 0.0 {
        let s = phi_harmonic(basis, 1, Trig::Sin)?;
        cos_sq = cos_sq.add(&combo(d, &[(params.epsilon_phi, &s)])?)?;
    }
    if params.epsilon_theta != 0.0 {
        let s = theta_harmonic(basis, 1, Trig::Sin)?;
        sin_sq = sin_sq.add(&combo(d, &[(params.epsilon_theta, &s)])?)?;
    }

    let rotating = CircuitParams {
        g: 0.0,
        alpha_g: Some(0.5 * params.alpha_g()),
        beta_g: 0.5 * params.beta_g,
        epsilon_g: 0.5 * params.epsilon_g,
        ..*params
    };
    let mut terms = vec![
        (Profile::Const, kinetic_block(basis)?),
        (Profile::CosSq, cos_sq),
        (Profile::SinSq, sin_sq),
        (Profile::Sin2, coupler_hamiltonian(&rotating, basis)?),
    ];
    if params.g != 0.0 {
        let capacitive = CircuitParams {
            alpha_g: Some(0.0),
            beta_g: 0.0,
            epsilon_g: 0.0,
            ..*params
        };
        terms.push((Profile::Const, coupler_hamiltonian(&capacitive, basis)?));
    }
    OperatorFamily::new(basis.dim(), terms)
}

/// Operator family of the sin·sin model.
pub fn sin_sin_family(
    params: &CircuitParams,
    basis: &TwoModeBasis,
    variant: SinSinVariant,
) -> Result<OperatorFamily> {
    params.validate()?;
    let (a, b, d) = (params.alpha, params.beta, basis.dim());
    let cos2_t = theta_harmonic(basis, 2, Trig::Cos)?;
    let cos_p = phi_harmonic(basis, 1, Trig::Cos)?;
    let cos2_p = phi_harmonic(basis, 2, Trig::Cos)?;
    let single_well = match variant {
        SinSinVariant::Sine => theta_harmonic(basis, 1, Trig::Sin)?,
        SinSinVariant::Cosine => theta_harmonic(basis, 1, Trig::Cos)?,
    };
    let sin_sin =
        theta_harmonic(basis, 1, Trig::Sin)?.matmul(&phi_harmonic(basis, 1, Trig::Sin)?)?;
    OperatorFamily::new(
        basis.dim(),
        vec![
            (Profile::Const, kinetic_block(basis)?),
            (Profile::CosSq, combo(d, &[(b, &cos2_t), (-a, &cos_p)])?),
            (
                Profile::SinSq,
                combo(d, &[(b, &cos2_p), (-a, &single_well)])?,
            ),
            (Profile::Sin2, combo(d, &[(-0.5 * params.zeta, &sin_sin)])?),
        ],
    )
}

/// Family for any model that has a smooth φ dependence.
pub fn model_family(
    model: Model,
    params: &CircuitParams,
    basis: &TwoModeBasis,
) -> Result<OperatorFamily> {
    match model {
        Model::Circuit => circuit_family(params, basis),
        Model::SinSin(v) => sin_sin_family(params, basis, v),
        Model::LowEnergy | Model::LowEnergyCorrected => Err(Error::InvalidParameter(
            "the low-energy model has no smooth operator family".into(),
        )),
    }
}

pub fn circuit_hamiltonian(
    phi: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
) -> Result<OperatorMatrix> {
    Ok(circuit_family(params, basis)?.at(phi))
}

pub fn ideal_sin_sin_hamiltonian(
    phi: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
    variant: SinSinVariant,
) -> Result<OperatorMatrix> {
    Ok(sin_sin_family(params, basis, variant)?.at(phi))
}

/// Analytic `dH/dφ` of the circuit Hamiltonian.
pub fn dh_dphi(phi: f64, params: &CircuitParams, basis: &TwoModeBasis) -> Result<OperatorMatrix> {
    Ok(circuit_family(params, basis)?.derivative(phi))
}

/// Any model at a given angle.
pub fn model_hamiltonian(
    model: Model,
    phi: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
) -> Result<OperatorMatrix> {
    match model {
        Model::LowEnergy => low_energy_hamiltonian(phi, params, basis, false),
        Model::LowEnergyCorrected => low_energy_hamiltonian(phi, params, basis, true),
        _ => Ok(model_family(model, params, basis)?.at(phi)),
    }
}

/// Distance between the two global minima along the square path.
pub fn well_distance(phi: f64) -> f64 {
    let reduced = phi.min((FRAC_PI_2 - phi).abs()).min((PI - phi).abs());
    PI / reduced.cos().abs()
}

/// `r(φ)`, the relative softening of the double-well term.
pub fn r_correction(phi: f64, params: &CircuitParams) -> f64 {
    let d = well_distance(phi);
    params.zeta * (2.0 * phi).sin() / (2.0 * params.beta)
        * (d / TAU).powi(2)
        * (phi.cos() - phi.sin()).powi(2)
}

/// `s(φ)`, the relative stiffening of the single-well term.
pub fn s_correction(phi: f64, params: &CircuitParams) -> f64 {
    let d = well_distance(phi);
    params.zeta * (2.0 * phi).sin() / (2.0 * params.alpha)
        * (PI / d).powi(2)
        * (phi.cos() + phi.sin()).powi(2)
}

/// Charge-basis matrix of `cos(kθ̂)` for real `k`, by exact projection of
/// `cos(kθ)` onto the plane waves over `[−π, π)`.
pub fn fractional_cosine(mode: &ModeSpec, k: f64) -> OperatorMatrix {
    let dim = mode.dim();
    let sinc_pi = |x: f64| if x == 0.0 { PI } else { (x * PI).sin() / x };
    let mut triplets = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let q = (mode.charge(i) - mode.charge(j)) as f64;
            let v = if k.fract() == 0.0 {
                // sin(nπ) does not round to zero
                match (q.abs() == k.abs(), k == 0.0) {
                    (true, true) => 1.0,
                    (true, false) => 0.5,
                    _ => 0.0,
                }
            } else {
                (sinc_pi(k - q) + sinc_pi(k + q)) / TAU
            };
            triplets.push((i, j, C64::new(v, 0.0)));
        }
    }
    OperatorMatrix::from_triplets(dim, triplets)
}

/// `4E_C n̂_Θ² + β(1 − r) cos(2πΘ̂/d) + 4E_C n̂_Φ² − α(1 + s) cos(dΦ̂/π)`,
/// with `r = s = 0` unless `corrected`.
pub fn low_energy_hamiltonian(
    phi: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
    corrected: bool,
) -> Result<OperatorMatrix> {
    params.validate()?;
    let dim = basis.dim();
    let d = well_distance(phi);
    let (r, s) = if corrected {
        (r_correction(phi, params), s_correction(phi, params))
    } else {
        (0.0, 0.0)
    };
    let big_theta = on_theta(basis, &fractional_cosine(&basis.theta, TAU / d));
    let big_phi = on_phi(basis, &fractional_cosine(&basis.phi, d / PI));
    let kin = kinetic_block(basis)?;
    let pot = combo(
        dim,
        &[
            (params.beta * (1.0 - r), &big_theta),
            (-params.alpha * (1.0 + s), &big_phi),
        ],
    )?;
    kin.add(&pot)
}

/// The two predicted global minima `±(θ, ϕ)` of the rotating potential.
pub fn minima_locations(phi: f64) -> [(f64, f64); 2] {
    let p = if phi <= FRAC_PI_4 {
        (FRAC_PI_2, PI * phi.tan() / 2.0)
    } else if phi < 3.0 * FRAC_PI_4 {
        (PI / (2.0 * phi.tan()), FRAC_PI_2)
    } else {
        (-FRAC_PI_2, -PI * phi.tan() / 2.0)
    };
    [p, (-p.0, -p.1)]
}

/// Classical potential surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialModel {
    /// Ideal beamsplitter rotation of `β cos 2θ − α cos ϕ`.
    Rotated,
    Circuit,
    SinSin(SinSinVariant),
    LowEnergy,
    LowEnergyCorrected,
}

/// `U(θ, ϕ)` sampled on uniform `[−π, π)` axes, rows indexed by θ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialGrid {
    pub theta_axis: Vec<f64>,
    pub phi_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn uniform_axis(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -PI + TAU * i as f64 / points as f64)
        .collect()
}

/// Classical potential in GHz at one point.
pub fn potential_value(
    model: PotentialModel,
    phi: f64,
    params: &CircuitParams,
    th: f64,
    ph: f64,
) -> f64 {
    let (a, b, z) = (params.alpha, params.beta, params.zeta);
    let (c2, s2, sin2) = (phi.cos().powi(2), phi.sin().powi(2), (2.0 * phi).sin());
    match model {
        PotentialModel::Rotated => {
            let (s, c) = phi.sin_cos();
            b * (2.0 * (c * th + s * ph)).cos() - a * (c * ph - s * th).cos()
        }
        PotentialModel::Circuit => {
            b * c2 * (2.0 * th).cos() - a * s2 * th.cos() - a * c2 * ph.cos()
                + b * s2 * (2.0 * ph).cos()
                - 0.5 * z * sin2 * (th - ph).cos()
                + params.epsilon_theta * s2 * th.sin()
                + params.epsilon_phi * c2 * ph.sin()
        }
        PotentialModel::SinSin(variant) => {
            let single = match variant {
                SinSinVariant::Sine => th.sin(),
                SinSinVariant::Cosine => th.cos(),
            };
            b * c2 * (2.0 * th).cos() - a * c2 * ph.cos() + b * s2 * (2.0 * ph).cos()
                - a * s2 * single
                - 0.5 * z * sin2 * th.sin() * ph.sin()
        }
        PotentialModel::LowEnergy | PotentialModel::LowEnergyCorrected => {
            let d = well_distance(phi);
            let (r, s) = if model == PotentialModel::LowEnergyCorrected {
                (r_correction(phi, params), s_correction(phi, params))
            } else {
                (0.0, 0.0)
            };
            b * (1.0 - r) * (TAU * th / d).cos() - a * (1.0 + s) * (d * ph / PI).cos()
        }
    }
}

pub fn potential_grid(
    model: PotentialModel,
    phi: f64,
    params: &CircuitParams,
    theta_points: usize,
    phi_points: usize,
) -> PotentialGrid {
    let theta_axis = uniform_axis(theta_points);
    let phi_axis = uniform_axis(phi_points);
    let values = theta_axis
        .iter()
        .map(|&th| {
            phi_axis
                .iter()
                .map(|&ph| potential_value(model, phi, params, th, ph))
                .collect()
        })
        .collect();
    PotentialGrid {
        theta_axis,
        phi_axis,
        values,
    }
}

/// Ideal beamsplitter-rotated potential.
pub fn rotated_potential_grid(phi: f64, params: &CircuitParams, points: usize) -> PotentialGrid {
    potential_grid(PotentialModel::Rotated, phi, params, points, points)
}

/// Periodic distance between two points on the torus.
pub fn torus_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let wrap = |x: f64| {
        let r = (x + PI).rem_euclid(TAU) - PI;
        r.abs()
    };
    wrap(a.0 - b.0).hypot(wrap(a.1 - b.1))
}

impl PotentialGrid {
    /// Grid points that are strict local minima on the periodic grid,
    /// sorted by value (lowest first).
    pub fn local_minima(&self) -> Vec<(f64, f64, f64)> {
        let (n, m) = (self.theta_axis.len(), self.phi_axis.len());
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let v = self.values[i][j];
                let mut is_min = true;
                'nb: for di in [n - 1, 0, 1] {
                    for dj in [m - 1, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        if self.values[(i + di) % n][(j + dj) % m] <= v {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if is_min {
                    out.push((self.theta_axis[i], self.phi_axis[j], v));
                }
            }
        }
        out.sort_by(|a, b| a.2.total_cmp(&b.2));
        out
    }

    /// The grid point with the lowest value.
    pub fn argmin(&self) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f64::INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (self.theta_axis[i], self.phi_axis[j], v);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge_basis::{parity_operator, two_mode_embed};

    fn params() -> CircuitParams {
        CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4)
    }

    fn basis(n_cut: usize) -> TwoModeBasis {
        TwoModeBasis::symmetric(n_cut, 0.4).unwrap()
    }

    #[test]
    fn circuit_at_zero_is_two_free_modes() {
        let b = basis(4);
        let p = params();
        let h = circuit_hamiltonian(0.0, &p, &b).unwrap();
        let mode = b.theta;
        let dw = single_qubit_hamiltonian(
            &mode,
            &SquidCoeffs {
                alpha: 0.0,
                beta: p.beta,
                epsilon: 0.0,
            },
        )
        .unwrap();
        let sw = single_qubit_hamiltonian(
            &mode,
            &SquidCoeffs {
                alpha: p.alpha,
                beta: 0.0,
                epsilon: 0.0,
            },
        )
        .unwrap();
        let id = OperatorMatrix::identity(mode.dim());
        let free = two_mode_embed(&dw, &id)
            .add(&two_mode_embed(&id, &sw))
            .unwrap();
        assert!(h.max_abs_diff(&free).unwrap() < 1e-12);
    }

    #[test]
    fn circuit_at_pi_matches_zero() {
        let b = basis(3);
        let h0 = circuit_hamiltonian(0.0, &params(), &b).unwrap();
        let hpi = circuit_hamiltonian(PI, &params(), &b).unwrap();
        assert!(h0.max_abs_diff(&hpi).unwrap() < 1e-12);
    }

    #[test]
    fn parity_commutes_exactly() {
        let b = basis(4);
        let pi_op = parity_operator(&b).unwrap();
        for k in 0..9 {
            let phi = PI * k as f64 / 8.0;
            let h = circuit_hamiltonian(phi, &params(), &b).unwrap();
            assert_eq!(pi_op.commutator(&h).unwrap().max_abs(), 0.0, "phi = {phi}");
            assert!(h.is_hermitian());
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let b = basis(3);
        let p = params();
        let h = 1e-5;
        for phi in [0.0, 0.3, FRAC_PI_4, 1.2, 2.8] {
            let fd = circuit_hamiltonian(phi + h, &p, &b)
                .unwrap()
                .sub(&circuit_hamiltonian(phi - h, &p, &b).unwrap())
                .unwrap()
                .scale_real(0.5 / h);
            let exact = dh_dphi(phi, &p, &b).unwrap();
            // O(h²) truncation plus rounding of the difference quotient
            assert!(
                exact.max_abs_diff(&fd).unwrap() < 1e-6 * exact.max_abs(),
                "phi = {phi}"
            );
        }
    }

    #[test]
    fn derivative_special_angles() {
        let b = basis(3);
        let p = params();
        let at_zero = dh_dphi(0.0, &p, &b).unwrap();
        let coupling = joint_harmonic(&b, 1, 1, Trig::Cos)
            .unwrap()
            .scale_real(-angular(p.zeta));
        assert!(at_zero.max_abs_diff(&coupling).unwrap() < 1e-12);
        let at_quarter = dh_dphi(FRAC_PI_4, &p, &b).unwrap();
        let c = joint_harmonic(&b, 1, 1, Trig::Cos).unwrap();
        let (i, j, _) = c.iter().find(|(i, j, _)| i != j).unwrap();
        // off-diagonal entries of cos(θ̂−φ̂) are not shared with any other term
        assert!(at_quarter.get(i, j).norm() < 1e-12);
    }

    #[test]
    fn coupler_limits() {
        let b = basis(3);
        let mut p = params();
        p.alpha_g = Some(0.0);
        assert_eq!(
            coupler_hamiltonian(&p, &b).unwrap(),
            OperatorMatrix::zeros(b.dim())
        );
        p.epsilon_g = 0.3;
        let h = coupler_hamiltonian(&p, &b).unwrap();
        let pi_op = parity_operator(&b).unwrap();
        assert!(pi_op.commutator(&h).unwrap().max_abs() > 0.0);
    }

    #[test]
    fn sin_sin_agrees_with_circuit_at_zero() {
        let b = basis(3);
        let h1 = circuit_hamiltonian(0.0, &params(), &b).unwrap();
        for v in [SinSinVariant::Sine, SinSinVariant::Cosine] {
            let h2 = ideal_sin_sin_hamiltonian(0.0, &params(), &b, v).unwrap();
            assert!(h1.max_abs_diff(&h2).unwrap() < 1e-12);
        }
    }

    #[test]
    fn fractional_cosine_reduces_to_harmonics() {
        let mode = ModeSpec::new(4, 0.2).unwrap();
        for m in [1, 2] {
            let exact = harmonic_operator(&mode, m, Trig::Cos).unwrap();
            let frac = fractional_cosine(&mode, m as f64);
            assert!(frac.max_abs_diff(&exact).unwrap() < 1e-15);
        }
    }

    #[test]
    fn fractional_cosine_matches_quadrature() {
        let mode = ModeSpec::new(3, 0.2).unwrap();
        let k = 2.0_f64.sqrt();
        let frac = fractional_cosine(&mode, k);
        let nodes = 20000;
        for i in 0..mode.dim() {
            for j in 0..mode.dim() {
                let q = (mode.charge(i) - mode.charge(j)) as f64;
                // midpoint rule on [−π, π)
                let h = TAU / nodes as f64;
                let quad: f64 = (0..nodes)
                    .map(|n| {
                        let x = -PI + (n as f64 + 0.5) * h;
                        (k * x).cos() * (q * x).cos()
                    })
                    .sum::<f64>()
                    * h
                    / TAU;
                assert!((frac.get(i, j).re - quad).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn low_energy_limits() {
        let b = basis(4);
        let p = params();
        assert_eq!(r_correction(0.0, &p), 0.0);
        assert_eq!(s_correction(0.0, &p), 0.0);
        assert!(r_correction(FRAC_PI_4, &p).abs() < 1e-30);
        let h = low_energy_hamiltonian(0.0, &p, &b, true).unwrap();
        let h0 = circuit_hamiltonian(0.0, &p, &b).unwrap();
        assert!(h.max_abs_diff(&h0).unwrap() < 1e-12);
    }

    #[test]
    fn well_distance_and_minima() {
        assert_eq!(well_distance(0.0), PI);
        assert!((well_distance(FRAC_PI_4) - 2f64.sqrt() * PI).abs() < 1e-14);
        assert!((well_distance(PI) - PI).abs() < 1e-15);
        let m = minima_locations(PI / 8.0);
        assert!((m[0].0 - FRAC_PI_2).abs() < 1e-15 && (m[0].1 - 0.650_645_142_3).abs() < 1e-9);
        let half = minima_locations(FRAC_PI_2);
        assert!(half[0].0.abs() < 1e-15 && half[0].1 == FRAC_PI_2);
    }

    #[test]
    fn rotated_potential_minima() {
        let p = params();
        let g = rotated_potential_grid(0.0, &p, 64);
        let mins = g.local_minima();
        assert_eq!(mins.len(), 2);
        for (th, ph, _) in &mins[..2] {
            assert!((th.abs() - FRAC_PI_2).abs() < 1e-12 && ph.abs() < 1e-12);
        }
        let quarter = rotated_potential_grid(FRAC_PI_2, &p, 64);
        let (th, ph, _) = quarter.argmin();
        assert!(th.abs() < 1e-12 && (ph.abs() - FRAC_PI_2).abs() < 1e-12);
    }
}
