//! Shared fixtures for the criterion benches.

use cos2gate::hamiltonians::circuit_family;
use cos2gate::{CircuitParams, OperatorFamily, TwoModeBasis};

/// Strong-coupling circuit at `E_C = 0.4 GHz` and the given charge cutoff.
pub fn circuit(n_cut: usize) -> (CircuitParams, TwoModeBasis, OperatorFamily) {
    let params = CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4);
    let basis = TwoModeBasis::symmetric(n_cut, 0.4).expect("valid basis");
    let family = circuit_family(&params, &basis).expect("valid circuit");
    (params, basis, family)
}

/// Normalized superposition of the first two basis states.
pub fn start_state(dim: usize) -> Vec<cos2gate::C64> {
    let mut psi = vec![cos2gate::C64::new(0.0, 0.0); dim];
    psi[dim / 2] = cos2gate::C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[dim / 2 + 1] = cos2gate::C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    psi
}
