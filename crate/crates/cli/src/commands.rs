//! One function per subcommand. Each reads the resolved config and writes
//! its files through [`Output`].

use std::f64::consts::{PI, TAU};

use cos2gate::adiabatic::{optimize_schedule, RateProfile};
use cos2gate::evolution::logical_propagator;
use cos2gate::hamiltonians::{minima_locations, potential_grid, torus_distance, well_distance};
use cos2gate::junction::{abs_energy, abs_offset, harmonic_amplitudes, squid_coeffs};
use cos2gate::spectral::{
    compare_models, noise_matrix_elements, spectrum_at, spectrum_vs_angle, to_phase_space,
};
use cos2gate::{
    CircuitParams, ControlSchedule, GateOptions, GateResult, JunctionSpec, Matrix2, Model,
    SpectralResult, TwoModeBasis, C64,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, ModelChoice};
use crate::output::{Cell, Output};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StateBasis {
    Phase,
    Charge,
}

fn ghz(angular: f64) -> f64 {
    angular / TAU
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn hamiltonian_model(choice: ModelChoice, config: &ExperimentConfig) -> Result<Model, CliError> {
    choice
        .model(config.sin_sin_variant)
        .ok_or_else(|| CliError::Config("the rotated model defines a potential only".into()))
}

pub fn potential(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let p = &config.potential;
    let params = config.params();
    let model = p.model.potential(config.sin_sin_variant);
    let grids: Vec<_> = p
        .angles_rad
        .par_iter()
        .map(|&phi| potential_grid(model, phi, &params, p.points, p.points))
        .collect();
    let mut rows = Vec::new();
    for (i, (phi, grid)) in p.angles_rad.iter().zip(&grids).enumerate() {
        let notes = vec![
            format!("model: {}", p.model.name()),
            format!("phi_angle_rad: {}", phi),
            "values: potential energy in GHz; rows theta_rad, columns phi_rad".into(),
        ];
        out.grid(
            &format!("potential_{i:02}.csv"),
            &notes,
            ("theta_rad", "phi_rad"),
            &grid.theta_axis,
            &grid.phi_axis,
            &grid.values,
        )?;
        let (th, ph, v) = grid.argmin();
        let predicted = minima_locations(*phi)
            .into_iter()
            .min_by(|a, b| torus_distance((th, ph), *a).total_cmp(&torus_distance((th, ph), *b)))
            .expect("two minima");
        rows.push(vec![
            i.into(),
            (*phi).into(),
            th.into(),
            ph.into(),
            v.into(),
            predicted.0.into(),
            predicted.1.into(),
            torus_distance((th, ph), predicted).into(),
            well_distance(*phi).into(),
        ]);
    }
    let columns = strings(&[
        "index",
        "phi_angle_rad",
        "argmin_theta_rad",
        "argmin_phi_rad",
        "min_potential_ghz",
        "predicted_theta_rad",
        "predicted_phi_rad",
        "distance_rad",
        "well_distance_rad",
    ]);
    out.csv(
        "potential_minima.csv",
        &[format!("model: {}", p.model.name())],
        &columns,
        rows,
    )
}

fn sweep(config: &ExperimentConfig, model: Model) -> Result<Vec<SpectralResult>, CliError> {
    let basis = config.basis()?;
    let grid = config.phi_values();
    Ok(spectrum_vs_angle(
        model,
        &config.params(),
        &basis,
        &grid,
        config.levels,
        &config.eigen,
    )?
    .results)
}

pub fn spectrum(
    config: &ExperimentConfig,
    choice: ModelChoice,
    out: &mut Output,
) -> Result<(), CliError> {
    let model = hamiltonian_model(choice, config)?;
    let results = sweep(config, model)?;
    let k = config.levels;
    let mut columns = vec!["phi".to_string()];
    columns.extend(names("omega_", k));
    columns.extend(strings(&["omega_01", "omega_02", "parity_0", "parity_1"]));
    let rows = results
        .iter()
        .map(|r| {
            let mut row: Vec<Cell> = vec![r.phi_angle.unwrap_or(f64::NAN).into()];
            row.extend(r.energies.iter().map(|e| Cell::Num(ghz(*e))));
            row.push(r.transition_ghz(1).into());
            row.push(r.transition_ghz(2).into());
            row.extend(
                r.parities[..2]
                    .iter()
                    .map(|p| Cell::Int(p.map_or(0, i64::from))),
            );
            row
        })
        .collect();
    let notes = vec![
        format!("model: {}", choice.name()),
        "units: phi in rad; omega_n = E_n/h in GHz; omega_01 = omega_1 - omega_0; parity 0 = unlabeled".into(),
    ];
    out.csv("spectrum.csv", &notes, &columns, rows)
}

pub fn eigenstates(
    config: &ExperimentConfig,
    choice: ModelChoice,
    basis_kind: StateBasis,
    out: &mut Output,
) -> Result<(), CliError> {
    let model = hamiltonian_model(choice, config)?;
    let e = &config.eigenstates;
    let basis = config.basis()?;
    let params = config.params();
    let results = e
        .angles_rad
        .par_iter()
        .map(|&phi| spectrum_at(model, phi, &params, &basis, e.levels.max(2), &config.eigen))
        .collect::<cos2gate::Result<Vec<_>>>()?;
    let tag = choice.name();
    let mut summary = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let phi = e.angles_rad[i];
        for n in 0..e.levels {
            let notes = vec![
                format!("model: {tag}"),
                format!("phi_angle_rad: {phi}"),
                format!("level: {n}"),
                format!("energy_ghz: {}", ghz(r.energies[n])),
            ];
            let name = format!("eigenstate_{tag}_{i:02}_{n}.csv");
            match basis_kind {
                StateBasis::Phase => {
                    let ps = to_phase_space(&r.states[n], &basis, e.grid_points, e.grid_points)?;
                    let mut notes = notes;
                    notes.push(
                        "values: probability density |psi|^2; rows theta_rad, columns phi_rad"
                            .into(),
                    );
                    out.grid(
                        &name,
                        &notes,
                        ("theta_rad", "phi_rad"),
                        &ps.theta_axis,
                        &ps.phi_axis,
                        &ps.probabilities(),
                    )?;
                }
                StateBasis::Charge => {
                    let rows = charge_rows(&r.states[n], &basis);
                    out.csv(
                        &name,
                        &notes,
                        &strings(&["n_theta", "n_phi", "re", "im", "probability"]),
                        rows,
                    )?;
                }
            }
        }
        summary.push(json!({
            "phi_angle_rad": phi,
            "energies_ghz": r.energies.iter().map(|e| ghz(*e)).collect::<Vec<_>>(),
            "parities": r.parities,
            "residuals": r.residuals,
        }));
    }
    out.json(&format!("eigenstates_{tag}.json"), &summary)
}

fn charge_rows(state: &[C64], basis: &TwoModeBasis) -> Vec<Vec<Cell>> {
    state
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let (a, b) = basis.charges(idx);
            vec![
                a.into(),
                b.into(),
                c.re.into(),
                c.im.into(),
                c.norm_sqr().into(),
            ]
        })
        .collect()
}

pub fn matrix_elements(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let basis = config.basis()?;
    let results = sweep(config, Model::Circuit)?;
    let mut columns = strings(&["phi", "omega_01"]);
    for mode in ["theta", "phi"] {
        for q in ["sin_01", "n_01", "cos_01", "cos_diag_diff", "n_diag_diff"] {
            columns.push(format!("{mode}_{q}"));
        }
    }
    let mut rows = Vec::new();
    for r in &results {
        let m = noise_matrix_elements(r, &basis)?;
        let mut row: Vec<Cell> = vec![
            r.phi_angle.unwrap_or(f64::NAN).into(),
            r.transition_ghz(1).into(),
        ];
        for mode in [m.theta, m.phi] {
            row.extend(
                [
                    mode.sin_01,
                    mode.n_01,
                    mode.cos_01,
                    mode.cos_diag_diff,
                    mode.n_diag_diff,
                ]
                .map(Cell::Num),
            );
        }
        rows.push(row);
    }
    let notes = vec![
        "values: |<0|O|1>| and |<0|O|0> - <1|O|1>| between the two lowest states; omega_01 in GHz"
            .into(),
    ];
    out.csv("matrix_elements.csv", &notes, &columns, rows)
}

fn write_schedule(
    config: &ExperimentConfig,
    schedule: &ControlSchedule,
    profile: Option<&RateProfile>,
    out: &mut Output,
) -> Result<(), CliError> {
    let n = config.schedule.samples;
    let rows = (0..n)
        .map(|i| {
            let t = schedule.total_time * i as f64 / (n - 1) as f64;
            vec![
                t.into(),
                schedule.phi_at(t).into(),
                schedule.rate_at(t).into(),
            ]
        })
        .collect();
    let notes = vec![
        format!("interpolation: {}", schedule.interpolation.name()),
        format!("total_time_ns: {}", schedule.total_time),
    ];
    out.csv(
        "schedule.csv",
        &notes,
        &strings(&["time_ns", "phi_rad", "rate_rad_per_ns"]),
        rows,
    )?;
    if let Some(profile) = profile {
        let rows = profile
            .phi
            .iter()
            .zip(&profile.rate)
            .zip(&profile.limiting)
            .map(|((p, r), lim)| {
                let (a, b) = lim.map_or((-1, -1), |(a, b)| (a as i64, b as i64));
                vec![(*p).into(), (*r).into(), a.into(), b.into()]
            })
            .collect();
        let notes = vec![
            "limiting_n, limiting_m: pair that sets the rate; -1 when the ceiling does".into(),
        ];
        out.csv(
            "rate_profile.csv",
            &notes,
            &strings(&["phi_rad", "rate_rad_per_ns", "limiting_n", "limiting_m"]),
            rows,
        )?;
    }
    Ok(())
}

fn schedule_for(
    config: &ExperimentConfig,
) -> Result<(ControlSchedule, Option<RateProfile>), CliError> {
    if let Some(path) = &config.gate.schedule_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        let schedule = ControlSchedule::from_text(&text)
            .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        return Ok((schedule, None));
    }
    let basis = config.basis()?;
    let (schedule, profile) = optimize_schedule(
        &config.params(),
        &basis,
        &config.schedule_settings(),
        &config.eigen,
    )?;
    Ok((schedule, Some(profile)))
}

pub fn schedule(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let (schedule, profile) = schedule_for(config)?;
    write_schedule(config, &schedule, profile.as_ref(), out)?;
    out.text("schedule_knots.csv", &schedule.to_text())?;
    out.json(
        "schedule.json",
        &json!({
            "total_time_ns": schedule.total_time,
            "gate_time_times_ej": schedule.total_time * config.circuit.alpha_ghz,
            "knots": schedule.times.len(),
            "interpolation": schedule.interpolation.name(),
        }),
    )
}

#[derive(Serialize)]
struct GateSummary {
    gate_time_ns: f64,
    gate_time_times_ej: f64,
    fidelity: f64,
    raw_fidelity: f64,
    frame_phase_rad: f64,
    leakage: f64,
    accepted_steps: usize,
    max_norm_drift: f64,
    /// `[re, im]` entries, rows are (even, odd) outputs.
    projected_propagator: [[[f64; 2]; 2]; 2],
    frame_propagator: [[[f64; 2]; 2]; 2],
}

fn split(m: &Matrix2) -> [[[f64; 2]; 2]; 2] {
    m.map(|row| row.map(|c| [c.re, c.im]))
}

fn summary(gate: &GateResult, e_j: f64) -> GateSummary {
    GateSummary {
        gate_time_ns: gate.gate_time,
        gate_time_times_ej: gate.gate_time * e_j,
        fidelity: gate.fidelity,
        raw_fidelity: gate.raw_fidelity,
        frame_phase_rad: gate.frame_phase,
        leakage: gate.leakage,
        accepted_steps: gate.accepted_steps,
        max_norm_drift: gate.max_norm_drift,
        projected_propagator: split(&gate.projected_propagator),
        frame_propagator: split(&gate.frame_propagator),
    }
}

pub fn gate(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let (schedule, profile) = schedule_for(config)?;
    write_schedule(config, &schedule, profile.as_ref(), out)?;
    let n = config.gate.snapshots;
    let snapshot_times: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![schedule.total_time],
        _ => (0..n)
            .map(|i| schedule.total_time * i as f64 / (n - 1) as f64)
            .collect(),
    };
    let options = GateOptions {
        propagation: config.propagation(),
        eigen: config.eigen,
        snapshot_times,
    };
    let basis = config.basis()?;
    let result = logical_propagator(&config.params(), &basis, &schedule, &options)?;
    if let Some(samples) = &result.trajectory_samples {
        let g = config.gate.grid_points;
        let mut index = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            let phi = schedule.phi_at(s.time);
            for (label, state) in [("even", &s.even), ("odd", &s.odd)] {
                let ps = to_phase_space(state, &basis, g, g)?;
                let notes = vec![
                    format!("initial_state: {label}"),
                    format!("time_ns: {}", s.time),
                    format!("phi_angle_rad: {phi}"),
                    "values: probability density |psi|^2; rows theta_rad, columns phi_rad".into(),
                ];
                out.grid(
                    &format!("trajectory_{label}_{i:03}.csv"),
                    &notes,
                    ("theta_rad", "phi_rad"),
                    &ps.theta_axis,
                    &ps.phi_axis,
                    &ps.probabilities(),
                )?;
            }
            index.push(vec![i.into(), s.time.into(), phi.into()]);
        }
        out.csv(
            "trajectory.csv",
            &[],
            &strings(&["index", "time_ns", "phi_rad"]),
            index,
        )?;
    }
    out.json("gate.json", &summary(&result, config.circuit.alpha_ghz))
}

pub fn sweep_zeta(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let s = &config.sweep;
    let e_j = config.circuit.alpha_ghz;
    let points: Vec<(f64, usize, f64)> = s
        .e_c_ghz
        .iter()
        .zip(&s.n_cut)
        .flat_map(|(&e_c, &n_cut)| s.zeta_over_ej.iter().map(move |&r| (e_c, n_cut, r)))
        .collect();
    let gates = points
        .par_iter()
        .map(|&(e_c, n_cut, ratio)| -> Result<GateResult, CliError> {
            let params = CircuitParams {
                zeta: ratio * e_j,
                e_c_theta: e_c,
                e_c_phi: e_c,
                ..config.params()
            };
            let basis = TwoModeBasis::symmetric(n_cut, e_c)?;
            let (schedule, _) =
                optimize_schedule(&params, &basis, &config.schedule_settings(), &config.eigen)?;
            let options = GateOptions {
                propagation: config.propagation(),
                eigen: config.eigen,
                snapshot_times: Vec::new(),
            };
            log::info!(
                "sweep point E_C = {e_c} GHz, zeta/E_J = {ratio}: T = {} ns",
                schedule.total_time
            );
            Ok(logical_propagator(&params, &basis, &schedule, &options)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows = points
        .iter()
        .zip(&gates)
        .map(|(&(e_c, n_cut, ratio), g)| {
            vec![
                e_c.into(),
                n_cut.into(),
                ratio.into(),
                (ratio * e_j).into(),
                g.gate_time.into(),
                (g.gate_time * e_j).into(),
                g.fidelity.into(),
                g.raw_fidelity.into(),
                g.leakage.into(),
            ]
        })
        .collect();
    let columns = strings(&[
        "e_c_ghz",
        "n_cut",
        "zeta_over_ej",
        "zeta_ghz",
        "gate_time_ns",
        "gate_time_times_ej",
        "fidelity",
        "raw_fidelity",
        "leakage",
    ]);
    out.csv(
        "sweep_zeta.csv",
        &[format!("e_j_ghz: {e_j}")],
        &columns,
        rows,
    )
}

/// Local minima of `−α cosθ + β cos2θ + ε sinθ` on a periodic grid.
fn well_count(alpha: f64, beta: f64, epsilon: f64) -> usize {
    let n = 1024;
    let u: Vec<f64> = (0..n)
        .map(|i| {
            let th = -PI + TAU * i as f64 / n as f64;
            -alpha * th.cos() + beta * (2.0 * th).cos() + epsilon * th.sin()
        })
        .collect();
    (0..n)
        .filter(|&i| u[i] < u[(i + n - 1) % n] && u[i] < u[(i + 1) % n])
        .count()
}

pub fn junction(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let j = &config.junction;
    let specs = j
        .transmissions
        .iter()
        .map(|&t| JunctionSpec::new(j.gap_ghz, vec![t], j.m_max))
        .collect::<cos2gate::Result<Vec<_>>>()?;
    let mut columns = vec!["transmission".to_string()];
    columns.extend((1..=j.m_max).map(|m| format!("e_j{m}_ghz")));
    columns.push("offset_ghz".into());
    let mut rows = Vec::new();
    for spec in &specs {
        let amps = harmonic_amplitudes(spec)?;
        let mut row: Vec<Cell> = vec![spec.transmissions[0].into()];
        row.extend(amps.into_iter().map(Cell::Num));
        row.push(abs_offset(spec).into());
        rows.push(row);
    }
    let notes = vec![
        format!("gap_ghz: {}", j.gap_ghz),
        "E(theta) = offset - sum_m (-1)^(m-1) E_Jm cos(m theta)".into(),
    ];
    out.csv("junction_harmonics.csv", &notes, &columns, rows)?;

    let mut columns = vec!["theta_rad".to_string()];
    columns.extend(
        j.transmissions
            .iter()
            .map(|t| format!("abs_energy_ghz_t{t}")),
    );
    let rows = (0..j.theta_points)
        .map(|i| {
            let th = -PI + TAU * i as f64 / (j.theta_points - 1) as f64;
            let mut row: Vec<Cell> = vec![th.into()];
            row.extend(specs.iter().map(|s| Cell::Num(abs_energy(s, th))));
            row
        })
        .collect();
    out.csv("junction_energy.csv", &[], &columns, rows)?;

    let j1 = JunctionSpec::new(j.gap_ghz, j.squid.transmissions_1.clone(), 2)?;
    let j2 = JunctionSpec::new(j.gap_ghz, j.squid.transmissions_2.clone(), 2)?;
    let n = j.squid.flux_points;
    let mut rows = Vec::new();
    for i in 0..n {
        let flux = TAU * i as f64 / (n - 1) as f64;
        let c = squid_coeffs(&j1, &j2, flux)?;
        rows.push(vec![
            flux.into(),
            c.alpha.into(),
            c.beta.into(),
            c.epsilon.into(),
            well_count(c.alpha, c.beta, c.epsilon).into(),
        ]);
    }
    let notes =
        vec!["potential: -alpha cos(theta) + beta cos(2 theta) + epsilon sin(theta)".into()];
    out.csv(
        "squid.csv",
        &notes,
        &strings(&["flux_rad", "alpha_ghz", "beta_ghz", "epsilon_ghz", "wells"]),
        rows,
    )
}

/// Largest level shift between two spectra relative to their spread.
fn relative_shift(a: &[f64], b: &[f64]) -> f64 {
    let spread = (a[a.len() - 1] - a[0]).abs();
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / spread
}

pub fn compare(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let c = &config.compare;
    let basis = config.basis()?;
    let report = compare_models(
        &config.params(),
        &basis,
        &c.angles_rad,
        c.levels,
        config.sin_sin_variant,
        &config.eigen,
    )?;
    let columns = strings(&[
        "phi",
        "splitting_circuit_ghz",
        "splitting_sinsin_ghz",
        "gap_02_circuit_ghz",
        "gap_02_sinsin_ghz",
        "overlap_0",
        "overlap_1",
        "overlap_2",
        "doublet_overlap",
    ]);
    let rows = report
        .iter()
        .map(|r| {
            let mut row: Vec<Cell> = [
                r.phi,
                r.splitting_circuit,
                r.splitting_sin_sin,
                r.gap_02_circuit,
                r.gap_02_sin_sin,
            ]
            .map(Cell::Num)
            .into();
            row.extend(r.overlaps.iter().map(|o| Cell::Num(*o)));
            row.push(r.doublet_overlap.into());
            row
        })
        .collect();
    out.csv("compare_models.csv", &[], &columns, rows)?;

    // angle pairs (φ, π − φ) present in the grid
    let mut mirror = Vec::new();
    for (i, a) in report.iter().enumerate() {
        for b in &report[i + 1..] {
            if (a.phi + b.phi - PI).abs() < 1e-12 && a.phi != b.phi {
                mirror.push(json!({
                    "phi": a.phi,
                    "mirror_phi": b.phi,
                    "circuit_relative_shift": relative_shift(&a.energies_circuit, &b.energies_circuit),
                    "sinsin_relative_shift": relative_shift(&a.energies_sin_sin, &b.energies_sin_sin),
                }));
            }
        }
    }
    out.json(
        "compare_models.json",
        &json!({ "angles": report, "mirror_pairs": mirror }),
    )
}
