//! Time-dependent Schrödinger evolution under `H(φ(t))` and gate metrics.
//!
//! Steps use the fourth-order commutator-free Magnus scheme with two
//! exponentials per step, each applied by a Chebyshev expansion. Step size
//! is controlled by step doubling.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::ControlSchedule;
use crate::charge_basis::TwoModeBasis;
use crate::eigen::{dot, norm, EigenOptions};
use crate::error::{Error, Result};
use crate::family::OperatorFamily;
use crate::hamiltonians::{circuit_family, CircuitParams};
use crate::spectral::lowest_eigenpairs_of;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Largest tolerated deviation of `‖ψ‖` from one.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Magnitude below which Chebyshev coefficients are dropped.
const BESSEL_CUTOFF: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationOptions {
    /// Bound on the sum of local step-doubling error estimates over the run.
    pub tolerance: f64,
    /// First trial step in ns; `None` picks `T/200`.
    pub initial_step: Option<f64>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-2,
            initial_step: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub state: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Propagation {
    pub state: Vec<C64>,
    pub snapshots: Vec<Snapshot>,
    /// `∫ ⟨ψ|H|ψ⟩ dt`, the accumulated dynamical phase in rad.
    pub dynamical_phase: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_norm_drift: f64,
}

/// `J_0(x) … J_K(x)` with `K` the last order above the cutoff, by Miller's
/// backward recursion normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64) -> Vec<f64> {
    if x == 0.0 {
        return vec![1.0];
    }
    let start = (x + 30.0 + 10.0 * x.cbrt()).ceil() as usize;
    let start = start + start % 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().skip(k - 1).for_each(|v| *v *= 1e-250);
        }
    }
    let sum = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.iter_mut().for_each(|v| *v /= sum);
    let mut last = start;
    while last > 0 && (last as f64 > x) && j[last].abs() < BESSEL_CUTOFF {
        last -= 1;
    }
    j.truncate(last + 1);
    j
}

/// Workspace for `exp(−iτA) ψ` with `A` on a family's shared pattern.
struct Exponential<'a> {
    family: &'a OperatorFamily,
    scratch: [Vec<C64>; 3],
    acc: Vec<C64>,
}

impl<'a> Exponential<'a> {
    fn new(family: &'a OperatorFamily) -> Self {
        let d = family.dim();
        Self {
            family,
            scratch: [vec![ZERO; d], vec![ZERO; d], vec![ZERO; d]],
            acc: vec![ZERO; d],
        }
    }

    /// Gershgorin interval of the Hermitian matrix with the given values.
    fn spectral_bounds(&self, values: &[C64], rows: &[usize], cols: &[usize]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..rows.len() - 1 {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for k in rows[i]..rows[i + 1] {
                if cols[k] == i {
                    diag = values[k].re;
                } else {
                    radius += values[k].norm();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    fn apply(&mut self, values: &[C64], tau: f64, psi: &mut [C64]) {
        let (rows, cols) = self.family.pattern();
        let (lo, hi) = self.spectral_bounds(values, rows, cols);
        let center = 0.5 * (lo + hi);
        let radius = 0.5 * (hi - lo);
        let global = C64::from_polar(1.0, -tau * center);
        if radius * tau < 1e-300 {
            psi.iter_mut().for_each(|c| *c *= global);
            return;
        }
        let coeffs = bessel_j_sequence(tau * radius);
        let [t_prev, t_cur, t_next] = &mut self.scratch;
        let acc = &mut self.acc;
        let inv_r = 1.0 / radius;
        // One fused pass per term of T_{k+1} = 2ÂT_k − T_{k−1}, Â = (A − c)/r.
        let term =
            |cur: &[C64], prev: Option<&[C64]>, next: &mut [C64], acc: &mut [C64], w: C64| {
                for i in 0..cur.len() {
                    let mut s = C64::new(0.0, 0.0);
                    for k in rows[i]..rows[i + 1] {
                        s += values[k] * cur[cols[k]];
                    }
                    let y = (s - center * cur[i]) * inv_r;
                    next[i] = match prev {
                        Some(p) => 2.0 * y - p[i],
                        None => y,
                    };
                    acc[i] += w * next[i];
                }
            };
        t_cur.copy_from_slice(psi);
        acc.iter_mut()
            .zip(psi.iter())
            .for_each(|(a, p)| *a = p * coeffs[0]);
        if coeffs.len() > 1 {
            term(t_cur, None, t_prev, acc, C64::new(0.0, -2.0 * coeffs[1]));
            // now t_prev = T_0, t_cur = T_1
            std::mem::swap(t_prev, t_cur);
        }
        let mut phase = C64::new(0.0, -1.0);
        for &jk in coeffs.iter().skip(2) {
            phase *= C64::new(0.0, -1.0);
            term(t_cur, Some(t_prev), t_next, acc, phase * (2.0 * jk));
            std::mem::swap(t_prev, t_cur);
            std::mem::swap(t_cur, t_next);
        }
        psi.iter_mut()
            .zip(acc.iter())
            .for_each(|(p, a)| *p = global * a);
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;
const A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const C1: f64 = 0.5 - SQRT3 / 6.0;
const C2: f64 = 0.5 + SQRT3 / 6.0;

struct Stepper<'a> {
    family: &'a OperatorFamily,
    schedule: &'a ControlSchedule,
    exp: Exponential<'a>,
    h1: Vec<C64>,
    h2: Vec<C64>,
    mix: Vec<C64>,
}

impl<'a> Stepper<'a> {
    fn new(family: &'a OperatorFamily, schedule: &'a ControlSchedule) -> Self {
        let nnz = family.nnz();
        Self {
            family,
            schedule,
            exp: Exponential::new(family),
            h1: vec![ZERO; nnz],
            h2: vec![ZERO; nnz],
            mix: vec![ZERO; nnz],
        }
    }

    fn step(&mut self, t: f64, h: f64, psi: &mut [C64]) {
        self.family
            .values_at(self.schedule.phi_at(t + C1 * h), &mut self.h1);
        self.family
            .values_at(self.schedule.phi_at(t + C2 * h), &mut self.h2);
        for (w1, w2) in [(A2, A1), (A1, A2)] {
            self.mix
                .iter_mut()
                .zip(self.h1.iter().zip(&self.h2))
                .for_each(|(m, (a, b))| *m = w1 * a + w2 * b);
            self.exp.apply(&self.mix, h, psi);
        }
    }

    fn energy(&mut self, t: f64, psi: &[C64]) -> f64 {
        self.family
            .values_at(self.schedule.phi_at(t), &mut self.mix);
        let mut hpsi = vec![ZERO; psi.len()];
        self.family.matvec_values(&self.mix, psi, &mut hpsi);
        dot(psi, &hpsi).re
    }
}

/// Integrate `i dψ/dt = H(φ(t)) ψ` over the schedule. Snapshots are taken
/// exactly at the requested times inside `[0, T]`.
pub fn propagate(
    family: &OperatorFamily,
    schedule: &ControlSchedule,
    initial: &[C64],
    snapshot_times: &[f64],
    options: &PropagationOptions,
) -> Result<Propagation> {
    if initial.len() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            found: initial.len(),
        });
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n0 = norm(initial);
    if (n0 - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "initial state norm {n0} is not 1"
        )));
    }
    let total = schedule.total_time;

    // Knots and snapshot times are breakpoints that steps land on exactly.
    let mut stops: Vec<f64> = schedule
        .times
        .iter()
        .copied()
        .chain(
            snapshot_times
                .iter()
                .copied()
                .filter(|&s| (0.0..=total).contains(&s)),
        )
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let mut wanted: Vec<f64> = snapshot_times.to_vec();
    wanted.sort_by(f64::total_cmp);
    wanted.dedup();
    wanted.retain(|s| (0.0..=total).contains(s));

    let mut stepper = Stepper::new(family, schedule);
    let mut psi = initial.to_vec();
    let mut big = vec![ZERO; psi.len()];
    let mut result = Propagation {
        state: Vec::new(),
        snapshots: Vec::new(),
        dynamical_phase: 0.0,
        accepted_steps: 0,
        rejected_steps: 0,
        max_norm_drift: 0.0,
    };
    let mut next_snapshot = 0;
    let take_snapshots = |t: f64, psi: &[C64], result: &mut Propagation, next: &mut usize| {
        while *next < wanted.len() && wanted[*next] <= t {
            result.snapshots.push(Snapshot {
                time: wanted[*next],
                state: psi.to_vec(),
            });
            *next += 1;
        }
    };
    take_snapshots(0.0, &psi, &mut result, &mut next_snapshot);

    let mut t = 0.0;
    let mut h = options.initial_step.unwrap_or(total / 200.0).min(total);
    let mut energy_start = stepper.energy(0.0, &psi);
    let mut stop_idx = 1;
    while t < total && stop_idx < stops.len() {
        let target = stops[stop_idx];
        let mut step = h.min(target - t);
        let lands = step >= target - t;
        if lands {
            step = target - t;
        }
        if step < 1e-12 * total.max(1.0) && !lands {
            return Err(Error::StepUnderflow { time: t, step });
        }
        big.copy_from_slice(&psi);
        stepper.step(t, step, &mut big);
        let mut half = psi.clone();
        stepper.step(t, 0.5 * step, &mut half);
        let energy_mid = stepper.energy(t + 0.5 * step, &half);
        stepper.step(t + 0.5 * step, 0.5 * step, &mut half);
        let err = half
            .iter()
            .zip(&big)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let allowed = options.tolerance * step / total;
        if err <= allowed || step < 1e-12 * total.max(1.0) {
            let energy_end = stepper.energy(t + step, &half);
            result.dynamical_phase += step / 6.0 * (energy_start + 4.0 * energy_mid + energy_end);
            energy_start = energy_end;
            psi = half;
            t = if lands { target } else { t + step };
            if lands {
                stop_idx += 1;
            }
            result.accepted_steps += 1;
            let drift = (norm(&psi) - 1.0).abs();
            result.max_norm_drift = result.max_norm_drift.max(drift);
            if drift > NORM_TOLERANCE {
                return Err(Error::NormDrift { time: t, drift });
            }
            take_snapshots(t, &psi, &mut result, &mut next_snapshot);
        } else {
            result.rejected_steps += 1;
        }
        let factor = if err == 0.0 {
            4.0
        } else {
            (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 4.0)
        };
        // Keep the natural step when the last one was clipped to a breakpoint.
        h = if lands && err <= allowed {
            h.max(step * factor)
        } else {
            step * factor
        };
        if h < 1e-12 * total.max(1.0) {
            return Err(Error::StepUnderflow { time: t, step: h });
        }
    }
    take_snapshots(total, &psi, &mut result, &mut next_snapshot);
    result.state = psi;
    Ok(result)
}

/// 2×2 complex matrix stored row-major.
pub type Matrix2 = [[C64; 2]; 2];

/// `[Tr(M†M) + |Tr(U†M)|²] / 6`.
pub fn average_gate_fidelity(m: &Matrix2, target: &Matrix2) -> f64 {
    let mut tr_mm = 0.0;
    let mut tr_um = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            tr_mm += m[i][j].norm_sqr();
            tr_um += target[i][j].conj() * m[i][j];
        }
    }
    (tr_mm + tr_um.norm_sqr()) / 6.0
}

pub fn pauli_z() -> Matrix2 {
    [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(-1.0, 0.0)]]
}

/// `1 − Tr(M†M)/2`, clamped at zero.
pub fn leakage(m: &Matrix2) -> f64 {
    let tr: f64 = m.iter().flatten().map(|c| c.norm_sqr()).sum();
    (1.0 - 0.5 * tr).max(0.0)
}

/// Multiply by the global phase that makes `M₀₀` real and non-negative.
pub fn remove_global_phase(m: &Matrix2) -> Matrix2 {
    let m00 = m[0][0];
    let phase = if m00.norm() > 0.0 {
        m00.conj() / m00.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    [
        [m[0][0] * phase, m[0][1] * phase],
        [m[1][0] * phase, m[1][1] * phase],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogicalBasis {
    pub even: Vec<C64>,
    pub odd: Vec<C64>,
    /// `(ω_even, ω_odd)` in rad/ns.
    pub energies: (f64, f64),
}

/// Parity-labeled lowest doublet of `H(φ)`.
pub fn logical_basis(
    family: &OperatorFamily,
    phi: f64,
    options: &EigenOptions,
) -> Result<LogicalBasis> {
    let spectrum = lowest_eigenpairs_of(&family.at(phi), 3, options)?;
    let find = |label: i8| {
        (0..2)
            .find(|&i| spectrum.parities[i] == Some(label))
            .ok_or_else(|| Error::InvalidParameter("lowest doublet has no definite parity".into()))
    };
    let (e, o) = (find(1)?, find(-1)?);
    Ok(LogicalBasis {
        even: spectrum.states[e].clone(),
        odd: spectrum.states[o].clone(),
        energies: (spectrum.energies[e], spectrum.energies[o]),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateOptions {
    pub propagation: PropagationOptions,
    pub eigen: EigenOptions,
    /// Times at which both logical trajectories are recorded.
    pub snapshot_times: Vec<f64>,
}

impl Default for GateOptions {
    fn default() -> Self {
        Self {
            propagation: PropagationOptions::default(),
            eigen: EigenOptions::default(),
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub even: Vec<C64>,
    pub odd: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateResult {
    /// `⟨L_i| U(T) |L_j⟩` in the (even, odd) basis, `M₀₀` real non-negative.
    pub projected_propagator: Matrix2,
    /// Fidelity to Z after removing each logical state's dynamical phase.
    pub fidelity: f64,
    /// Fidelity to Z of the propagator as integrated.
    pub raw_fidelity: f64,
    /// Relative dynamical phase `∫(⟨H⟩_odd − ⟨H⟩_even) dt`, rad.
    pub frame_phase: f64,
    /// `projected_propagator` with the dynamical phases removed.
    pub frame_propagator: Matrix2,
    pub leakage: f64,
    pub gate_time: f64,
    pub accepted_steps: usize,
    pub max_norm_drift: f64,
    pub trajectory_samples: Option<Vec<TrajectorySample>>,
}

/// Propagate both logical states through the schedule and assemble the
/// projected propagator.
pub fn logical_propagator(
    params: &CircuitParams,
    basis: &TwoModeBasis,
    schedule: &ControlSchedule,
    options: &GateOptions,
) -> Result<GateResult> {
    let family = circuit_family(params, basis)?;
    logical_propagator_of(&family, schedule, options)
}

pub fn logical_propagator_of(
    family: &OperatorFamily,
    schedule: &ControlSchedule,
    options: &GateOptions,
) -> Result<GateResult> {
    let logical = logical_basis(family, 0.0, &options.eigen)?;
    let run = |state: &[C64]| {
        propagate(
            family,
            schedule,
            state,
            &options.snapshot_times,
            &options.propagation,
        )
    };
    let (even, odd) = rayon::join(|| run(&logical.even), || run(&logical.odd));
    let (even, odd) = (even?, odd?);

    let inputs = [&even, &odd];
    let outputs = [&logical.even, &logical.odd];
    let mut m = [[ZERO; 2]; 2];
    for (i, out) in outputs.iter().enumerate() {
        for (j, run) in inputs.iter().enumerate() {
            m[i][j] = dot(out, &run.state);
        }
    }
    let retained = (0..2)
        .map(|j| m[0][j].norm_sqr() + m[1][j].norm_sqr())
        .fold(f64::INFINITY, f64::min);
    if retained < 0.9 {
        return Err(Error::BasisMismatch { overlap: retained });
    }
    let phases = [even.dynamical_phase, odd.dynamical_phase];
    let mut framed = m;
    for row in framed.iter_mut() {
        for (j, c) in row.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, phases[j]);
        }
    }
    let m = remove_global_phase(&m);
    let framed = remove_global_phase(&framed);
    let z = pauli_z();

    let trajectory_samples = (!options.snapshot_times.is_empty()).then(|| {
        even.snapshots
            .iter()
            .zip(&odd.snapshots)
            .map(|(e, o)| TrajectorySample {
                time: e.time,
                even: e.state.clone(),
                odd: o.state.clone(),
            })
            .collect()
    });
    Ok(GateResult {
        projected_propagator: m,
        fidelity: average_gate_fidelity(&framed, &z).clamp(0.0, 1.0),
        raw_fidelity: average_gate_fidelity(&m, &z).clamp(0.0, 1.0),
        frame_phase: wrap_phase(phases[1] - phases[0]),
        frame_propagator: framed,
        leakage: leakage(&m),
        gate_time: schedule.total_time,
        accepted_steps: even.accepted_steps.max(odd.accepted_steps),
        max_norm_drift: even.max_norm_drift.max(odd.max_norm_drift),
        trajectory_samples,
    })
}

/// Reduce an angle to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Profile;
    use crate::operator::OperatorMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bessel_sequence_matches_known_values() {
        let j = bessel_j_sequence(1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(50.0);
        assert!((j[0] - 0.055_812_327_669_251_86).abs() < 1e-14);
        assert!(j.len() > 50 && j.len() < 120);
    }

    #[test]
    fn fidelity_closed_forms() {
        let z = pauli_z();
        let id = [[c(1.0, 0.0), ZERO], [ZERO, c(1.0, 0.0)]];
        assert_eq!(average_gate_fidelity(&z, &z), 1.0);
        assert_eq!(average_gate_fidelity(&id, &z), 1.0 / 3.0);
        assert_eq!(average_gate_fidelity(&[[ZERO; 2]; 2], &z), 0.0);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_exponential_of_diagonal() {
        let d = OperatorMatrix::from_diagonal(&[-3.0, 0.5, 7.0]);
        let fam = OperatorFamily::new(3, vec![(Profile::Const, d)]).unwrap();
        let mut values = vec![ZERO; fam.nnz()];
        fam.values_at(0.0, &mut values);
        let mut exp = Exponential::new(&fam);
        let mut psi = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)];
        exp.apply(&values, 2.3, &mut psi);
        let expected = [
            C64::from_polar(1.0, 3.0 * 2.3),
            c(0.0, 1.0) * C64::from_polar(1.0, -0.5 * 2.3),
            c(0.5, 0.5) * C64::from_polar(1.0, -7.0 * 2.3),
        ];
        for (a, b) in psi.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
