use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use cos2gate::adiabatic::{
    adiabatic_frame_hamiltonian, nonadiabatic_elements, optimize_schedule, rate_profile,
    schedule_from_rates,
};
use cos2gate::hamiltonians::circuit_family;
use cos2gate::{
    CircuitParams, ControlSchedule, EigenOptions, OperatorFamily, OperatorMatrix, Profile,
    ScheduleSettings, TwoModeBasis, C64,
};

fn settings(bound_factor: f64) -> ScheduleSettings {
    ScheduleSettings {
        bound_factor,
        phi_points: 65,
        ..ScheduleSettings::default()
    }
}

fn small() -> (CircuitParams, TwoModeBasis) {
    (
        CircuitParams::symmetric(20.0, 20.0, 20.0, 0.4),
        TwoModeBasis::symmetric(7, 0.4).unwrap(),
    )
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Levels `0` and `Δ` rotated into each other at unit angular speed, plus a
/// spectator at `δ` and a distant fourth level. The coupling per unit `φ̇` is exactly one.
fn rotating_toy(gap: f64, spectator: f64) -> OperatorFamily {
    let d = |entries: Vec<(usize, usize, f64)>| {
        OperatorMatrix::from_triplets(
            4,
            entries
                .into_iter()
                .map(|(i, j, v)| (i, j, real(v)))
                .collect(),
        )
    };
    OperatorFamily::new(
        4,
        vec![
            (
                Profile::Const,
                d(vec![(1, 1, spectator), (3, 3, 100.0 * gap)]),
            ),
            (Profile::SinSq, d(vec![(0, 0, gap)])),
            (Profile::CosSq, d(vec![(2, 2, gap)])),
            (
                Profile::Sin2,
                d(vec![(0, 2, -0.5 * gap), (2, 0, -0.5 * gap)]),
            ),
        ],
    )
    .unwrap()
}

#[test]
fn constant_coupling_gives_closed_form_time() {
    let gap = 2.0;
    let family = rotating_toy(gap, 1e-3);
    let s = settings(1e-3);
    let profile = rate_profile(
        &family,
        false,
        &ScheduleSettings { m_count: 3, ..s },
        &EigenOptions::default(),
    )
    .unwrap();
    let schedule = schedule_from_rates(&profile).unwrap();
    let expected = PI * 1.0 / (1e-3 * gap);
    assert!((schedule.total_time - expected).abs() < 1e-8 * expected);
    for i in 0..=20 {
        let t = expected * i as f64 / 20.0;
        assert!((schedule.phi_at(t) - PI * i as f64 / 20.0).abs() < 1e-8);
    }
}

#[test]
fn degenerate_leakage_level_is_gap_closure() {
    // level 2 comes down onto level 1 at φ = π/2
    let fixed = OperatorMatrix::from_diagonal(&[0.0, 1e-3, 1e-3, 50.0]);
    let moving = OperatorMatrix::from_diagonal(&[0.0, 0.0, 2.0, 0.0]);
    let family =
        OperatorFamily::new(4, vec![(Profile::Const, fixed), (Profile::CosSq, moving)]).unwrap();
    let s = ScheduleSettings {
        m_count: 3,
        ..settings(1e-3)
    };
    let err = rate_profile(&family, false, &s, &EigenOptions::default()).unwrap_err();
    assert!(err.to_string().contains("gap closure on path"), "{err}");
}

#[test]
fn doubling_bound_factor_halves_time() {
    let (params, basis) = small();
    let opts = EigenOptions::default();
    let (a, _) = optimize_schedule(&params, &basis, &settings(1e-3), &opts).unwrap();
    let (b, _) = optimize_schedule(&params, &basis, &settings(2e-3), &opts).unwrap();
    assert!((a.total_time - 2.0 * b.total_time).abs() < 1e-12 * a.total_time);
    assert!(a.is_full_rotation() && b.is_full_rotation());
}

#[test]
fn optimized_schedule_respects_bound_at_every_knot() {
    let (params, basis) = small();
    let opts = EigenOptions::default();
    let s = settings(1e-3);
    let (schedule, profile) = optimize_schedule(&params, &basis, &s, &opts).unwrap();
    assert_eq!(schedule.angles[0], 0.0);
    assert_eq!(*schedule.angles.last().unwrap(), PI);
    for (i, &phi) in profile.phi.iter().enumerate().step_by(4) {
        let table = nonadiabatic_elements(phi, &params, &basis, &[0, 1], s.m_count, &opts).unwrap();
        let rate = schedule.knot_rate(i);
        for t in table.retained.iter().filter(|t| t.m >= 2) {
            assert!(
                rate * t.coupling <= 1.0001 * s.bound_factor * t.gap,
                "phi {phi}, pair {:?}",
                (t.n, t.m)
            );
        }
    }
    // monotone between knots too
    let mut prev = 0.0;
    for k in 0..=2000 {
        let phi = schedule.phi_at(schedule.total_time * k as f64 / 2000.0);
        assert!(phi >= prev);
        prev = phi;
    }
}

#[test]
fn schedule_is_mirror_symmetric_within_each_half() {
    let (params, basis) = small();
    let (schedule, _) =
        optimize_schedule(&params, &basis, &settings(1e-3), &EigenOptions::default()).unwrap();
    let t = &schedule.times;
    // 65 knots: π/2 is knot 32, π is knot 64
    let half = t[32];
    for i in 0..=32 {
        assert!((t[i] + t[32 - i] - half).abs() < 1e-6 * half, "knot {i}");
        assert!(
            (t[32 + i] - half - (t[64] - t[64 - i])).abs() < 1e-6 * half,
            "knot {}",
            32 + i
        );
    }
}

#[test]
fn gate_time_decreases_with_coupling() {
    let basis = TwoModeBasis::symmetric(7, 0.4).unwrap();
    let times: Vec<f64> = [5.0, 10.0, 15.0, 20.0]
        .iter()
        .map(|&zeta| {
            let params = CircuitParams::symmetric(20.0, 20.0, zeta, 0.4);
            optimize_schedule(&params, &basis, &settings(1e-3), &EigenOptions::default())
                .unwrap()
                .0
                .total_time
        })
        .collect();
    assert!(times.windows(2).all(|w| w[1] <= w[0]), "{times:?}");
}

#[test]
fn coupling_table_symmetries() {
    let (params, basis) = small();
    let opts = EigenOptions::default();
    let at_zero = nonadiabatic_elements(0.0, &params, &basis, &[0, 1], 6, &opts).unwrap();
    let dh_norm = circuit_family(&params, &basis)
        .unwrap()
        .derivative(0.0)
        .norm_inf();
    let doublet = at_zero
        .retained
        .iter()
        .chain(&at_zero.excluded)
        .find(|t| t.n == 0 && t.m == 1)
        .unwrap();
    assert!(doublet.numerator < 1e-8 * dh_norm);

    let table = nonadiabatic_elements(0.6, &params, &basis, &[0, 1, 2, 3, 4, 5], 6, &opts).unwrap();
    for a in &table.retained {
        let b = table
            .retained
            .iter()
            .find(|b| b.n == a.m && b.m == a.n)
            .unwrap();
        assert!((a.coupling * a.gap - b.coupling * b.gap).abs() < 1e-8 * dh_norm);
    }
}

#[test]
fn leakage_coupling_peaks_inside_the_quarter_turn() {
    let params = CircuitParams::symmetric(20.0, 20.0, 20.0, 0.1);
    let basis = TwoModeBasis::symmetric(15, 0.1).unwrap();
    let opts = EigenOptions::default();
    let grid: Vec<f64> = (0..=16).map(|i| FRAC_PI_2 * i as f64 / 16.0).collect();
    let strongest: Vec<f64> = grid
        .iter()
        .map(|&phi| {
            let table = nonadiabatic_elements(phi, &params, &basis, &[0], 12, &opts).unwrap();
            table
                .retained
                .iter()
                .filter(|t| t.m >= 2)
                .map(|t| t.coupling)
                .fold(0.0, f64::max)
        })
        .collect();
    let (peak, &max) = strongest
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(
        (grid[peak] - FRAC_PI_4).abs() <= PI / 8.0 + 1e-12,
        "peak at {} of {strongest:?}",
        grid[peak]
    );
    assert!(max > 2.0 * strongest[0].max(strongest[16]));
    // mirror image about π/4
    for i in 0..=8 {
        assert!((strongest[i] - strongest[16 - i]).abs() < 1e-6 * max);
    }
}

#[test]
fn adiabatic_frame_matrix() {
    let (params, basis) = small();
    let opts = EigenOptions::default();
    let still = adiabatic_frame_hamiltonian(0.4, 0.0, &params, &basis, 6, &opts).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                assert_eq!(still.matrix[(i, j)].norm(), 0.0);
            }
        }
    }
    let moving = adiabatic_frame_hamiltonian(0.4, 0.05, &params, &basis, 6, &opts).unwrap();
    assert!((&moving.matrix - moving.matrix.adjoint()).camax() < 1e-9 * moving.matrix.camax());

    let s = settings(1e-3);
    let (schedule, profile) = optimize_schedule(&params, &basis, &s, &opts).unwrap();
    let quarter = profile
        .phi
        .iter()
        .position(|&p| (p - FRAC_PI_4).abs() < 1e-12)
        .unwrap();
    let rate = schedule.knot_rate(quarter);
    let frame = adiabatic_frame_hamiltonian(FRAC_PI_4, rate, &params, &basis, 6, &opts).unwrap();
    let gap = (frame.matrix[(2, 2)].re - frame.matrix[(0, 0)].re).abs();
    assert!(frame.matrix[(0, 2)].norm() <= 1.0001 * s.bound_factor * gap);
}

#[test]
fn schedule_file_round_trip() {
    let (params, basis) = small();
    let (schedule, _) =
        optimize_schedule(&params, &basis, &settings(1e-3), &EigenOptions::default()).unwrap();
    let text = schedule.to_text();
    assert!(text.starts_with("# interpolation: hermite"));
    assert_eq!(ControlSchedule::from_text(&text).unwrap(), schedule);
}
