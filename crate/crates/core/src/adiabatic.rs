//! Locally adiabatic rotation schedules and non-adiabatic diagnostics.
//!
//! The sweep rate at each angle is the largest `φ̇` for which every
//! transition out of the logical doublet satisfies
//! `φ̇ |⟨ψₙ|∂_φ H|ψₘ⟩| / |ωₙ − ωₘ| ≤ b |ωₙ − ωₘ|`, with `b` the bound factor.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charge_basis::TwoModeBasis;
use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::family::OperatorFamily;
use crate::hamiltonians::{circuit_family, CircuitParams};
use crate::spectral::{lowest_eigenpairs_of, SpectralResult, DEGENERACY_THRESHOLD};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSettings {
    /// `b` in `φ̇ G ≤ b |ωₙ − ωₘ|`.
    pub bound_factor: f64,
    /// Uniform φ samples on `[0, π]`, endpoints included.
    pub phi_points: usize,
    /// Number of instantaneous states `m` ranges over.
    pub m_count: usize,
    /// Sweep rate used where every coupling vanishes, rad/ns.
    pub rate_ceiling: f64,
}

impl Default for ScheduleSettings {
    fn default() -> Self {
        Self {
            bound_factor: 1e-3,
            phi_points: 129,
            m_count: 12,
            rate_ceiling: 10.0,
        }
    }
}

impl ScheduleSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.bound_factor > 0.0 && self.bound_factor.is_finite()) {
            return Err(Error::InvalidParameter(
                "bound_factor must be positive".into(),
            ));
        }
        if self.phi_points < 64 {
            return Err(Error::InvalidParameter(format!(
                "phi grid needs at least 64 points, got {}",
                self.phi_points
            )));
        }
        if self.m_count < 3 {
            return Err(Error::InvalidParameter("m_count must be at least 3".into()));
        }
        if !(self.rate_ceiling > 0.0) {
            return Err(Error::InvalidParameter(
                "rate_ceiling must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One `(n, m)` pair of the non-adiabatic coupling table. Energies in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub n: usize,
    pub m: usize,
    /// `|ωₙ − ωₘ|`
    pub gap: f64,
    /// `|⟨ψₙ|∂_φ H|ψₘ⟩|`
    pub numerator: f64,
    /// `numerator / gap`, the transition amplitude per unit `φ̇`.
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonadiabaticTable {
    pub phi: f64,
    pub retained: Vec<Transition>,
    /// Quasi-degenerate pairs; `coupling` is left at zero.
    pub excluded: Vec<Transition>,
}

/// Coupling table from an existing spectrum and `∂_φ H`.
pub fn nonadiabatic_table(
    spectrum: &SpectralResult,
    dh: &crate::operator::OperatorMatrix,
    n_list: &[usize],
    m_count: usize,
) -> Result<NonadiabaticTable> {
    let k = spectrum.energies.len();
    let m_count = m_count.min(k);
    let w = &spectrum.energies;
    let reference = if k >= 3 { w[2] - w[0] } else { w[k - 1] - w[0] };
    let residual = spectrum.residuals.iter().copied().fold(0.0, f64::max);
    let mut table = NonadiabaticTable {
        phi: spectrum.phi_angle.unwrap_or(f64::NAN),
        retained: Vec::new(),
        excluded: Vec::new(),
    };
    let dh_states: Vec<Vec<C64>> = (0..m_count)
        .map(|m| dh.apply(&spectrum.states[m]))
        .collect();
    for &n in n_list {
        if n >= m_count {
            return Err(Error::InvalidParameter(format!(
                "state {n} not among the {m_count} computed"
            )));
        }
        for m in (0..m_count).filter(|&m| m != n) {
            let gap = (w[n] - w[m]).abs();
            let numerator = crate::eigen::dot(&spectrum.states[n], &dh_states[m]).norm();
            let mut t = Transition {
                n,
                m,
                gap,
                numerator,
                coupling: 0.0,
            };
            if gap <= DEGENERACY_THRESHOLD * reference {
                table.excluded.push(t);
                continue;
            }
            if gap < 10.0 * residual {
                return Err(Error::UnresolvedGap {
                    n,
                    m,
                    gap,
                    residual,
                });
            }
            t.coupling = numerator / gap;
            table.retained.push(t);
        }
    }
    Ok(table)
}

/// Coupling table of the circuit Hamiltonian at one angle.
pub fn nonadiabatic_elements(
    phi: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
    n_list: &[usize],
    m_count: usize,
    options: &EigenOptions,
) -> Result<NonadiabaticTable> {
    let family = circuit_family(params, basis)?;
    Ok(family_table(&family, phi, n_list, m_count, options)?.0)
}

fn family_table(
    family: &OperatorFamily,
    phi: f64,
    n_list: &[usize],
    m_count: usize,
    options: &EigenOptions,
) -> Result<(NonadiabaticTable, f64)> {
    let mut spectrum = lowest_eigenpairs_of(&family.at(phi), m_count, options)?;
    spectrum.phi_angle = Some(phi);
    let dh = family.derivative(phi);
    Ok((
        nonadiabatic_table(&spectrum, &dh, n_list, m_count)?,
        dh.norm_inf(),
    ))
}

/// The doublet pair drops out of the bound; its coupling must vanish by parity.
fn check_doublet_selection(table: &NonadiabaticTable, dh_norm: f64) -> Result<()> {
    let pair = table
        .retained
        .iter()
        .chain(&table.excluded)
        .find(|t| t.n == 0 && t.m == 1);
    match pair {
        Some(t) if t.numerator >= 1e-8 * dh_norm => Err(Error::DoubletCoupling {
            phi: table.phi,
            numerator: t.numerator,
            norm: dh_norm,
        }),
        _ => Ok(()),
    }
}

/// The largest rate allowed by the retained transitions out of the
/// doublet, capped at `ceiling`.
pub fn allowed_rate(table: &NonadiabaticTable, bound_factor: f64, ceiling: f64) -> Result<f64> {
    // A leakage level degenerate with the doublet closes the gap.
    if table.excluded.iter().any(|t| t.m >= 2 && t.n < 2) {
        return Err(Error::GapClosure { phi: table.phi });
    }
    let mut rate = ceiling;
    for t in table.retained.iter().filter(|t| t.m >= 2) {
        if t.gap == 0.0 {
            return Err(Error::GapClosure { phi: table.phi });
        }
        if t.numerator > 0.0 {
            // b·gap / (numerator / gap)
            rate = rate.min(bound_factor * t.gap * t.gap / t.numerator);
        }
    }
    if !(rate > 0.0) {
        return Err(Error::GapClosure { phi: table.phi });
    }
    Ok(rate)
}

/// How a schedule interpolates between its knots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Cubic Hermite with the knot rates given explicitly.
    Hermite,
    /// Monotone piecewise cubic Hermite with Fritsch–Carlson rates.
    Pchip,
    Linear,
}

impl Interpolation {
    pub fn name(self) -> &'static str {
        match self {
            Interpolation::Hermite => "hermite",
            Interpolation::Pchip => "pchip",
            Interpolation::Linear => "linear",
        }
    }
}

/// Sampled rotation angle `φ(t)`, times in ns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSchedule {
    pub times: Vec<f64>,
    pub angles: Vec<f64>,
    pub interpolation: Interpolation,
    pub total_time: f64,
    /// `dφ/dt` at the knots for the cubic rules, rad/ns.
    pub knot_rates: Vec<f64>,
}

fn check_knots(times: &[f64], angles: &[f64]) -> Result<()> {
    if times.len() != angles.len() || times.len() < 2 {
        return Err(Error::InvalidSchedule(
            "need at least two (time, angle) knots".into(),
        ));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidSchedule(
            "schedule must start at t = 0".into(),
        ));
    }
    if times.iter().chain(angles).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSchedule("non-finite knot".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule(
            "times must be strictly increasing".into(),
        ));
    }
    if angles.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSchedule(
            "angles must be non-decreasing".into(),
        ));
    }
    Ok(())
}

impl ControlSchedule {
    /// Linear or PCHIP schedule through the knots.
    pub fn new(times: Vec<f64>, angles: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        check_knots(&times, &angles)?;
        let knot_rates = match interpolation {
            Interpolation::Pchip => pchip_slopes(&times, &angles),
            Interpolation::Linear => Vec::new(),
            Interpolation::Hermite => {
                return Err(Error::InvalidSchedule(
                    "hermite schedules need knot rates".into(),
                ));
            }
        };
        Ok(Self {
            total_time: *times.last().unwrap(),
            times,
            angles,
            interpolation,
            knot_rates,
        })
    }

    /// Cubic Hermite schedule with prescribed knot rates. Each segment must
    /// satisfy the Fritsch–Carlson condition `α² + β² ≤ 9` so `φ` stays
    /// monotone.
    pub fn hermite(times: Vec<f64>, angles: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        check_knots(&times, &angles)?;
        if rates.len() != times.len() || rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidSchedule(
                "need one finite non-negative rate per knot".into(),
            ));
        }
        for i in 0..times.len() - 1 {
            let secant = (angles[i + 1] - angles[i]) / (times[i + 1] - times[i]);
            let (a, b) = if secant == 0.0 {
                if rates[i] != 0.0 || rates[i + 1] != 0.0 {
                    return Err(Error::InvalidSchedule(format!(
                        "nonzero rate on flat segment {i}"
                    )));
                }
                (0.0, 0.0)
            } else {
                (rates[i] / secant, rates[i + 1] / secant)
            };
            if a * a + b * b > 9.0 * (1.0 + 1e-12) {
                return Err(Error::InvalidSchedule(format!(
                    "knot rates break monotonicity on segment {i}"
                )));
            }
        }
        Ok(Self {
            total_time: *times.last().unwrap(),
            times,
            angles,
            interpolation: Interpolation::Hermite,
            knot_rates: rates,
        })
    }

    /// `φ ≡ phi` for a duration.
    pub fn frozen(phi: f64, duration: f64) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![phi, phi], Interpolation::Linear)
    }

    /// Constant-rate sweep from 0 to π.
    pub fn linear(duration: f64) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![0.0, PI], Interpolation::Linear)
    }

    /// Whether the schedule runs the full rotation `0 → π`.
    pub fn is_full_rotation(&self) -> bool {
        self.angles[0] == 0.0 && *self.angles.last().unwrap() == PI
    }

    fn segment(&self, t: f64) -> usize {
        let t = t.clamp(0.0, self.total_time);
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.times.len() - 2),
        }
    }

    /// `φ(t)`, clamped to the end values outside `[0, T]`.
    pub fn phi_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.angles[0];
        }
        if t >= self.total_time {
            return *self.angles.last().unwrap();
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (p0, p1) = (self.angles[i], self.angles[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        match self.interpolation {
            Interpolation::Linear => p0 + s * (p1 - p0),
            Interpolation::Pchip | Interpolation::Hermite => {
                let (d0, d1) = (self.knot_rates[i], self.knot_rates[i + 1]);
                let s2 = s * s;
                let s3 = s2 * s;
                (2.0 * s3 - 3.0 * s2 + 1.0) * p0
                    + (s3 - 2.0 * s2 + s) * h * d0
                    + (-2.0 * s3 + 3.0 * s2) * p1
                    + (s3 - s2) * h * d1
            }
        }
    }

    /// `dφ/dt`
    pub fn rate_at(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.total_time {
            return 0.0;
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (p0, p1) = (self.angles[i], self.angles[i + 1]);
        let h = t1 - t0;
        match self.interpolation {
            Interpolation::Linear => (p1 - p0) / h,
            Interpolation::Pchip | Interpolation::Hermite => {
                let s = (t - t0) / h;
                let (d0, d1) = (self.knot_rates[i], self.knot_rates[i + 1]);
                let s2 = s * s;
                ((6.0 * s2 - 6.0 * s) * p0 + (6.0 * s - 6.0 * s2) * p1) / h
                    + (3.0 * s2 - 4.0 * s + 1.0) * d0
                    + (3.0 * s2 - 2.0 * s) * d1
            }
        }
    }

    /// Rate at knot `i`.
    pub fn knot_rate(&self, i: usize) -> f64 {
        match self.interpolation {
            Interpolation::Pchip | Interpolation::Hermite => self.knot_rates[i],
            Interpolation::Linear => self.rate_at(self.times[i]),
        }
    }

    /// Text table with a header naming the interpolation. Hermite schedules
    /// carry a third column with the knot rates.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# interpolation: {}", self.interpolation.name()).unwrap();
        writeln!(out, "# total_time_ns: {}", self.total_time).unwrap();
        if self.interpolation == Interpolation::Hermite {
            writeln!(out, "time_ns,phi_rad,rate_rad_per_ns").unwrap();
            for ((t, p), r) in self.times.iter().zip(&self.angles).zip(&self.knot_rates) {
                writeln!(out, "{t},{p},{r}").unwrap();
            }
        } else {
            writeln!(out, "time_ns,phi_rad").unwrap();
            for (t, p) in self.times.iter().zip(&self.angles) {
                writeln!(out, "{t},{p}").unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut interpolation = None;
        let mut columns: Option<usize> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(rule) = comment.trim().strip_prefix("interpolation:") {
                    interpolation = Some(match rule.trim() {
                        "hermite" => Interpolation::Hermite,
                        "pchip" => Interpolation::Pchip,
                        "linear" => Interpolation::Linear,
                        other => {
                            return Err(Error::Parse(format!("unknown interpolation '{other}'")))
                        }
                    });
                }
                continue;
            }
            let Some(width) = columns else {
                columns = Some(match line {
                    "time_ns,phi_rad" => 2,
                    "time_ns,phi_rad,rate_rad_per_ns" => 3,
                    _ => {
                        return Err(Error::Parse(format!(
                            "line {}: expected column header",
                            lineno + 1
                        )))
                    }
                });
                continue;
            };
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if row.len() != width {
                return Err(Error::Parse(format!(
                    "line {}: expected {width} columns, found {}",
                    lineno + 1,
                    row.len()
                )));
            }
            rows.push(row);
        }
        let interpolation =
            interpolation.ok_or_else(|| Error::Parse("missing interpolation header".into()))?;
        let width = columns.ok_or_else(|| Error::Parse("missing column header".into()))?;
        let times = rows.iter().map(|r| r[0]).collect();
        let angles = rows.iter().map(|r| r[1]).collect();
        match (interpolation, width) {
            (Interpolation::Hermite, 3) => {
                Self::hermite(times, angles, rows.iter().map(|r| r[2]).collect())
            }
            (Interpolation::Hermite, _) => {
                Err(Error::Parse("hermite schedules need a rate column".into()))
            }
            (_, 2) => Self::new(times, angles, interpolation),
            _ => Err(Error::Parse(
                "rate column is only valid for hermite schedules".into(),
            )),
        }
    }
}

/// Fritsch–Carlson derivative estimates at the knots.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Per-angle rate samples of an optimized schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateProfile {
    pub phi: Vec<f64>,
    /// Allowed rate `φ̇_max(φ)` in rad/ns.
    pub rate: Vec<f64>,
    /// The limiting `(n, m)` pair at each angle, if any coupling was nonzero.
    pub limiting: Vec<Option<(usize, usize)>>,
}

/// Uniform grid of `points` angles on `[0, π]`.
pub fn phi_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i + 1 == points {
                PI
            } else {
                PI * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Allowed sweep rate on the φ grid. With `parity_symmetric` the doublet
/// coupling is checked against the selection rule at every angle.
pub fn rate_profile(
    family: &OperatorFamily,
    parity_symmetric: bool,
    settings: &ScheduleSettings,
    options: &EigenOptions,
) -> Result<RateProfile> {
    settings.validate()?;
    let phi = phi_grid(settings.phi_points);
    let samples = phi
        .par_iter()
        .map(|&p| {
            let (table, dh_norm) = family_table(family, p, &[0, 1], settings.m_count, options)?;
            if parity_symmetric {
                check_doublet_selection(&table, dh_norm)?;
            }
            let rate = allowed_rate(&table, settings.bound_factor, settings.rate_ceiling)?;
            let limiting = table
                .retained
                .iter()
                .filter(|t| t.m >= 2 && t.numerator > 0.0)
                .min_by(|a, b| {
                    (a.gap * a.gap / a.numerator).total_cmp(&(b.gap * b.gap / b.numerator))
                })
                .map(|t| (t.n, t.m));
            Ok((rate, limiting))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rate, limiting) = samples.into_iter().unzip();
    Ok(RateProfile {
        phi,
        rate,
        limiting,
    })
}

/// Schedule from a rate profile: `t(φ) = ∫ dφ/φ̇_max` by the trapezoid
/// rule, with `φ(t)` cubic Hermite through the samples and `dφ/dt = φ̇_max`
/// at every knot. Trapezoid steps make `α + β = 2` on every segment, so the
/// interpolant is monotone.
pub fn schedule_from_rates(profile: &RateProfile) -> Result<ControlSchedule> {
    let mut times = vec![0.0];
    for i in 1..profile.phi.len() {
        let dphi = profile.phi[i] - profile.phi[i - 1];
        let dt = 0.5 * dphi * (1.0 / profile.rate[i - 1] + 1.0 / profile.rate[i]);
        times.push(times[i - 1] + dt);
    }
    ControlSchedule::hermite(times, profile.phi.clone(), profile.rate.clone())
}

/// Minimal-time schedule of the circuit Hamiltonian under the bound.
pub fn optimize_schedule(
    params: &CircuitParams,
    basis: &TwoModeBasis,
    settings: &ScheduleSettings,
    options: &EigenOptions,
) -> Result<(ControlSchedule, RateProfile)> {
    let family = circuit_family(params, basis)?;
    let symmetric =
        params.parity_symmetric() && basis.theta.n_offset == 0.0 && basis.phi.n_offset == 0.0;
    let profile = rate_profile(&family, symmetric, settings, options)?;
    Ok((schedule_from_rates(&profile)?, profile))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticFrame {
    pub matrix: DMatrix<C64>,
    pub excluded: Vec<(usize, usize)>,
}

/// `k × k` Hamiltonian in the instantaneous eigenbasis: diagonal `ωₙ`,
/// off-diagonal `−i φ̇ ⟨ψₙ|∂_φ H|ψₘ⟩ / (ωₙ − ωₘ)`. Quasi-degenerate pairs
/// are left at zero and listed.
pub fn adiabatic_frame_hamiltonian(
    phi: f64,
    phi_rate: f64,
    params: &CircuitParams,
    basis: &TwoModeBasis,
    k: usize,
    options: &EigenOptions,
) -> Result<AdiabaticFrame> {
    let family = circuit_family(params, basis)?;
    let mut spectrum = lowest_eigenpairs_of(&family.at(phi), k, options)?;
    spectrum.phi_angle = Some(phi);
    let dh = family.derivative(phi);
    let all: Vec<usize> = (0..k).collect();
    let table = nonadiabatic_table(&spectrum, &dh, &all, k)?;
    let mut matrix = DMatrix::<C64>::zeros(k, k);
    for n in 0..k {
        matrix[(n, n)] = C64::new(spectrum.energies[n], 0.0);
    }
    let dh_states: Vec<Vec<C64>> = spectrum.states.iter().map(|s| dh.apply(s)).collect();
    for t in &table.retained {
        let element = crate::eigen::dot(&spectrum.states[t.n], &dh_states[t.m]);
        let denom = spectrum.energies[t.n] - spectrum.energies[t.m];
        matrix[(t.n, t.m)] = C64::new(0.0, -phi_rate) * element / denom;
    }
    Ok(AdiabaticFrame {
        matrix,
        excluded: table.excluded.iter().map(|t| (t.n, t.m)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_lines_and_stays_monotone() {
        let t = vec![0.0, 1.0, 2.5, 3.0, 7.0];
        let p: Vec<f64> = t.iter().map(|x| 0.3 * x).collect();
        let s = ControlSchedule::new(t, p, Interpolation::Pchip).unwrap();
        for i in 0..=70 {
            let x = 0.1 * i as f64;
            assert!((s.phi_at(x) - 0.3 * x).abs() < 1e-14);
            assert!((s.rate_at(x) - 0.3).abs() < 1e-12);
        }
        let steps = ControlSchedule::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 0.0, 1.0, 1.0],
            Interpolation::Pchip,
        )
        .unwrap();
        let mut prev = -1.0;
        for i in 0..=300 {
            let v = steps.phi_at(0.01 * i as f64);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(
            ControlSchedule::new(vec![0.0, 1.0], vec![1.0, 0.5], Interpolation::Linear).is_err()
        );
        assert!(
            ControlSchedule::new(vec![0.0, 0.0], vec![0.0, 1.0], Interpolation::Linear).is_err()
        );
        assert!(
            ControlSchedule::new(vec![1.0, 2.0], vec![0.0, 1.0], Interpolation::Linear).is_err()
        );
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t: Vec<f64> = (0..10).map(|i| (i as f64).powf(1.3) * 0.7).collect();
        let p: Vec<f64> = (0..10).map(|i| PI * (i as f64 / 9.0).powi(2)).collect();
        let s = ControlSchedule::new(t, p, Interpolation::Pchip).unwrap();
        let back = ControlSchedule::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
        assert!(ControlSchedule::from_text("time_ns,phi_rad\n0,0\n1,1\n").is_err());

        let h =
            ControlSchedule::hermite(vec![0.0, 1.5, 2.0], vec![0.0, 1.0, PI], vec![0.5, 1.1, 4.0])
                .unwrap();
        assert_eq!(ControlSchedule::from_text(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn hermite_rates_hold_at_knots() {
        let h = ControlSchedule::hermite(
            vec![0.0, 1.0, 3.0],
            vec![0.0, 1.0, 2.0],
            vec![0.2, 1.4, 0.3],
        )
        .unwrap();
        for (i, r) in [0.2, 1.4, 0.3].into_iter().enumerate() {
            assert!((h.rate_at(h.times[i]) - r).abs() < 1e-12);
        }
        assert!(ControlSchedule::hermite(vec![0.0, 1.0], vec![0.0, 1.0], vec![3.0, 1.0]).is_err());
    }

    #[test]
    fn constant_rate_gives_uniform_schedule() {
        let n = 65;
        let phi = phi_grid(n);
        let (g, gap, b) = (2.0, 3.0, 1e-3);
        // rate = b·gap/G
        let profile = RateProfile {
            rate: vec![b * gap / g; n],
            limiting: vec![None; n],
            phi,
        };
        let s = schedule_from_rates(&profile).unwrap();
        let expected = PI * g / (b * gap);
        assert!((s.total_time - expected).abs() < 1e-9 * expected);
        assert!((s.phi_at(0.5 * expected) - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn allowed_rate_uses_leakage_pairs_only() {
        let table = NonadiabaticTable {
            phi: 0.1,
            retained: vec![
                Transition {
                    n: 0,
                    m: 1,
                    gap: 1e-3,
                    numerator: 1.0,
                    coupling: 1e3,
                },
                Transition {
                    n: 0,
                    m: 2,
                    gap: 2.0,
                    numerator: 4.0,
                    coupling: 2.0,
                },
            ],
            excluded: vec![],
        };
        let r = allowed_rate(&table, 1e-3, 100.0).unwrap();
        assert!((r - 1e-3).abs() < 1e-15);
        let closed = NonadiabaticTable {
            retained: vec![Transition {
                n: 0,
                m: 2,
                gap: 0.0,
                numerator: 1.0,
                coupling: 0.0,
            }],
            ..table.clone()
        };
        let err = allowed_rate(&closed, 1e-3, 100.0).unwrap_err();
        assert!(err.to_string().contains("gap closure on path"));
        let free = NonadiabaticTable {
            retained: vec![],
            ..table
        };
        assert_eq!(allowed_rate(&free, 1e-3, 7.0).unwrap(), 7.0);
    }
}
