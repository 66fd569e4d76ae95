use std::f64::consts::PI;

use cos2gate::evolution::{
    average_gate_fidelity, logical_basis, logical_propagator, pauli_z, propagate, wrap_phase,
};
use cos2gate::hamiltonians::circuit_family;
use cos2gate::{
    CircuitParams, ControlSchedule, EigenOptions, GateOptions, Interpolation, Matrix2,
    OperatorFamily, OperatorMatrix, Profile, PropagationOptions, TwoModeBasis, C64,
};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn small_gate() -> (CircuitParams, TwoModeBasis) {
    (
        CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4),
        TwoModeBasis::symmetric(6, 0.4).unwrap(),
    )
}

#[test]
fn eigenstate_only_acquires_phase() {
    let (params, basis) = small_gate();
    let family = circuit_family(&params, &basis).unwrap();
    let logical = logical_basis(&family, 0.0, &EigenOptions::default()).unwrap();
    let t = 7.3;
    let schedule = ControlSchedule::frozen(0.0, t).unwrap();
    let out = propagate(
        &family,
        &schedule,
        &logical.even,
        &[],
        &PropagationOptions::default(),
    )
    .unwrap();
    let overlap = logical
        .even
        .iter()
        .zip(&out.state)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>();
    assert!((overlap.norm() - 1.0).abs() < 1e-8);
    let expected = wrap_phase(-logical.energies.0 * t);
    assert!(wrap_phase(overlap.arg() - expected).abs() < 1e-6);
    assert!(
        (out.dynamical_phase - logical.energies.0 * t).abs()
            < 1e-6 * (logical.energies.0 * t).abs()
    );
}

#[test]
fn zero_hamiltonian_is_identity() {
    let zero = OperatorMatrix::zeros(3);
    let family = OperatorFamily::new(
        3,
        vec![(Profile::Const, zero.clone()), (Profile::Sin2, zero)],
    )
    .unwrap();
    let psi = vec![c(0.6, 0.0), c(0.0, 0.48), c(0.0, -0.64)];
    let schedule = ControlSchedule::linear(4.0).unwrap();
    let out = propagate(
        &family,
        &schedule,
        &psi,
        &[1.0, 2.5],
        &PropagationOptions::default(),
    )
    .unwrap();
    for (a, b) in out.state.iter().zip(&psi) {
        assert!((a - b).norm() < 1e-14);
    }
    assert_eq!(out.snapshots.len(), 2);
    assert_eq!(out.snapshots[1].time, 2.5);
}

/// `H(t) = (ω₀/2)σz + (Ω/2)(cos ωt σx + sin ωt σy)` with `φ = ωt/2`.
fn rabi_family(omega0: f64, rabi: f64) -> OperatorFamily {
    let sz = OperatorMatrix::from_diagonal(&[0.5 * omega0, -0.5 * omega0]);
    let sx = OperatorMatrix::from_triplets(
        2,
        vec![(0, 1, c(0.5 * rabi, 0.0)), (1, 0, c(0.5 * rabi, 0.0))],
    );
    let msx = sx.scale_real(-1.0);
    let sy = OperatorMatrix::from_triplets(
        2,
        vec![(0, 1, c(0.0, -0.5 * rabi)), (1, 0, c(0.0, 0.5 * rabi))],
    );
    OperatorFamily::new(
        2,
        vec![
            (Profile::Const, sz),
            (Profile::CosSq, sx),
            (Profile::SinSq, msx),
            (Profile::Sin2, sy),
        ],
    )
    .unwrap()
}

#[test]
fn rabi_oscillation_matches_closed_form() {
    let (omega0, rabi) = (2.0 * PI * 5.0, 2.0 * PI * 0.25);
    for detuning in [0.0, 2.0 * PI * 0.1] {
        let omega = omega0 + detuning;
        let family = rabi_family(omega0, rabi);
        let total = 6.0;
        let schedule = ControlSchedule::new(
            vec![0.0, total],
            vec![0.0, 0.5 * omega * total],
            Interpolation::Linear,
        )
        .unwrap();
        let times: Vec<f64> = (1..=12).map(|i| 0.5 * i as f64).collect();
        let options = PropagationOptions {
            tolerance: 1e-9,
            initial_step: None,
        };
        let out = propagate(
            &family,
            &schedule,
            &[c(1.0, 0.0), c(0.0, 0.0)],
            &times,
            &options,
        )
        .unwrap();
        let generalized = (rabi * rabi + detuning * detuning).sqrt();
        for snap in &out.snapshots {
            let expected =
                (rabi / generalized).powi(2) * (0.5 * generalized * snap.time).sin().powi(2);
            let p1 = snap.state[1].norm_sqr();
            assert!(
                (p1 - expected).abs() < 1e-6,
                "t = {}: {p1} vs {expected}",
                snap.time
            );
        }
    }
}

#[test]
fn unnormalized_input_is_rejected() {
    let family = rabi_family(1.0, 1.0);
    let schedule = ControlSchedule::linear(1.0).unwrap();
    assert!(propagate(
        &family,
        &schedule,
        &[c(1.0, 0.0), c(1.0, 0.0)],
        &[],
        &PropagationOptions::default()
    )
    .is_err());
}

#[test]
fn fidelity_of_named_maps() {
    let z = pauli_z();
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    assert_eq!(average_gate_fidelity(&z, &z), 1.0);
    assert_eq!(
        average_gate_fidelity(&[[one, zero], [zero, one]], &z),
        1.0 / 3.0
    );
    assert_eq!(average_gate_fidelity(&[[zero; 2]; 2], &z), 0.0);
}

fn scaled(m: &Matrix2, f: C64) -> Matrix2 {
    [[m[0][0] * f, m[0][1] * f], [m[1][0] * f, m[1][1] * f]]
}

proptest! {
    #[test]
    fn fidelity_ignores_global_phase(
        entries in proptest::collection::vec(-1.0f64..1.0, 8),
        chi in 0.0f64..(2.0 * PI),
    ) {
        let m = [
            [c(entries[0], entries[1]), c(entries[2], entries[3])],
            [c(entries[4], entries[5]), c(entries[6], entries[7])],
        ];
        let z = pauli_z();
        let f0 = average_gate_fidelity(&m, &z);
        let f1 = average_gate_fidelity(&scaled(&m, C64::from_polar(1.0, chi)), &z);
        prop_assert!((f0 - f1).abs() < 1e-14);
    }
}

#[test]
fn frozen_schedule_gives_stationary_doublet() {
    let (params, basis) = small_gate();
    let family = circuit_family(&params, &basis).unwrap();
    let logical = logical_basis(&family, 0.0, &EigenOptions::default()).unwrap();
    let t = 40.0;
    let gate = logical_propagator(
        &params,
        &basis,
        &ControlSchedule::frozen(0.0, t).unwrap(),
        &GateOptions::default(),
    )
    .unwrap();
    let m = gate.projected_propagator;
    let delta = (logical.energies.1 - logical.energies.0) * t;
    assert!((m[0][0] - c(1.0, 0.0)).norm() < 1e-7);
    assert!((m[1][1] - C64::from_polar(1.0, -delta)).norm() < 1e-7);
    assert!(m[0][1].norm() < 1e-7 && m[1][0].norm() < 1e-7);
    let raw_expected = (2.0 + (c(1.0, 0.0) - C64::from_polar(1.0, -delta)).norm_sqr()) / 6.0;
    assert!((gate.raw_fidelity - raw_expected).abs() < 1e-7);
    // the frame correction leaves the identity, which is a third of the way to Z
    assert!((gate.fidelity - 1.0 / 3.0).abs() < 1e-7);
    assert!(wrap_phase(gate.frame_phase - delta).abs() < 1e-6);
    assert!(gate.leakage < 1e-8);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let (params, basis) = small_gate();
    let schedule = ControlSchedule::new(
        vec![0.0, 3.0, 5.0],
        vec![0.0, 0.2, 0.3],
        Interpolation::Pchip,
    )
    .unwrap();
    let options = GateOptions {
        snapshot_times: vec![1.0, 4.0],
        ..GateOptions::default()
    };
    let run = || logical_propagator(&params, &basis, &schedule, &options);
    match (run(), run()) {
        (Ok(a), Ok(b)) => assert_eq!(a, b),
        (Err(a), Err(b)) => assert_eq!(a, b),
        _ => panic!("runs disagree"),
    }
}
