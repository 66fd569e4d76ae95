//! Semiconductor junctions: Andreev bound state energy, its Fourier
//! harmonics, and the SQUID potential coefficients.
//!
//! Energies here are plain frequencies in GHz (E/h).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A junction with one or more transport channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    /// Superconducting gap Δ in GHz.
    pub gap: f64,
    /// Channel transmission probabilities in `[0, 1]`.
    pub transmissions: Vec<f64>,
    /// Number of harmonics returned.
    pub m_max: usize,
    /// Initial truncation of the Taylor series in the transmission.
    pub n_max: usize,
}

pub const DEFAULT_N_MAX: usize = 200;

/// Relative size of the series tail at which the sum is accepted.
pub const SERIES_TOLERANCE: f64 = 1e-12;

/// Doublings of `n_max` tried before reporting non-convergence.
const MAX_DOUBLINGS: u32 = 6;

impl JunctionSpec {
    pub fn new(gap: f64, transmissions: Vec<f64>, m_max: usize) -> Result<Self> {
        let spec = Self {
            gap,
            transmissions,
            m_max,
            n_max: DEFAULT_N_MAX.max(m_max),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gap must be positive, got {}",
                self.gap
            )));
        }
        if let Some(t) = self
            .transmissions
            .iter()
            .find(|t| !(0.0..=1.0).contains(*t))
        {
            return Err(Error::InvalidParameter(format!(
                "transmission {t} outside [0, 1]"
            )));
        }
        if self.m_max < 1 {
            return Err(Error::InvalidParameter("m_max must be at least 1".into()));
        }
        if self.n_max < self.m_max {
            return Err(Error::InvalidParameter(format!(
                "n_max ({}) must be at least m_max ({})",
                self.n_max, self.m_max
            )));
        }
        Ok(())
    }
}

/// How the harmonic amplitudes are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicMethod {
    /// Taylor series in the transmission, failing if it does not converge.
    Series,
    /// Direct Fourier projection of the ABS energy.
    Quadrature,
    /// Series, with the quadrature used for channels where it fails.
    Auto,
}

/// `−Δ Σ_j sqrt(1 − T_j sin²(θ/2))`
pub fn abs_energy(junction: &JunctionSpec, theta: f64) -> f64 {
    let s2 = (0.5 * theta).sin().powi(2);
    -junction.gap
        * junction
            .transmissions
            .iter()
            .map(|t| (1.0 - t * s2).max(0.0).sqrt())
            .sum::<f64>()
}

/// Harmonic amplitudes `E_J1 … E_Jm_max` with the automatic method.
pub fn harmonic_amplitudes(junction: &JunctionSpec) -> Result<Vec<f64>> {
    harmonic_amplitudes_with(junction, HarmonicMethod::Auto)
}

pub fn harmonic_amplitudes_with(
    junction: &JunctionSpec,
    method: HarmonicMethod,
) -> Result<Vec<f64>> {
    junction.validate()?;
    let mut total = vec![0.0; junction.m_max];
    for &t in &junction.transmissions {
        let per_channel = match method {
            HarmonicMethod::Series => channel_series(t, junction.m_max, junction.n_max)?,
            HarmonicMethod::Quadrature => channel_quadrature(t, junction.m_max),
            HarmonicMethod::Auto => match channel_series(t, junction.m_max, junction.n_max) {
                Ok(v) => v,
                Err(Error::SeriesNotConverged { harmonic, tail, .. }) => {
                    log::debug!("series for T = {t} stalled at m = {harmonic} (tail {tail:e}); using quadrature");
                    channel_quadrature(t, junction.m_max)
                }
                Err(e) => return Err(e),
            },
        };
        for (acc, v) in total.iter_mut().zip(per_channel) {
            *acc += junction.gap * v;
        }
    }
    Ok(total)
}

/// Constant term of the Fourier expansion of [`abs_energy`].
pub fn abs_offset(junction: &JunctionSpec) -> f64 {
    let nodes = panel_nodes();
    junction
        .transmissions
        .iter()
        .map(|&t| -junction.gap * project(t, 0, &nodes))
        .sum()
}

/// Series amplitudes of one channel in units of Δ, for `m = 1..=m_max`.
fn channel_series(t: f64, m_max: usize, n_max: usize) -> Result<Vec<f64>> {
    (1..=m_max)
        .map(|m| {
            let mut n_cap = n_max.max(m);
            let mut last = Error::SeriesNotConverged {
                harmonic: m,
                tail: f64::INFINITY,
                n_max: n_cap,
            };
            for _ in 0..=MAX_DOUBLINGS {
                match series_term_sum(t, m, n_cap) {
                    Ok(v) => return Ok(v),
                    Err(e) => last = e,
                }
                n_cap *= 2;
            }
            Err(last)
        })
        .collect()
}

/// `Σ_{n=m}^{n_max} 2 binom(1/2, n) binom(2n, n−m) (−1)^{n+1} tⁿ / 4ⁿ`
fn series_term_sum(t: f64, m: usize, n_max: usize) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    // |binom(1/2, n)| up to n = m, then updated alongside c_n = binom(2n, n−m)/4ⁿ · tⁿ
    let mut binom_half = 1.0_f64;
    for k in 0..m {
        binom_half *= (0.5 - k as f64) / (k as f64 + 1.0);
    }
    let mut weight = (t / 4.0).powi(m as i32);
    let mut sum = 0.0;
    let mut prev_term = 0.0;
    let mut term = 0.0;
    for n in m..=n_max {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        prev_term = term;
        term = 2.0 * binom_half * sign * weight;
        sum += term;
        let nf = n as f64;
        let mf = m as f64;
        binom_half *= (0.5 - nf) / (nf + 1.0);
        weight *=
            t * (2.0 * nf + 2.0) * (2.0 * nf + 1.0) / (4.0 * (nf + 1.0 - mf) * (nf + 1.0 + mf));
    }
    if sum == 0.0 {
        return Ok(0.0);
    }
    // all terms share one sign; bound the tail by a geometric continuation
    let ratio = if prev_term != 0.0 {
        term / prev_term
    } else {
        0.0
    };
    let tail = if ratio < 1.0 {
        term * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    let rel = (tail / sum).abs();
    if rel < SERIES_TOLERANCE {
        Ok(sum)
    } else {
        Err(Error::SeriesNotConverged {
            harmonic: m,
            tail: rel,
            n_max,
        })
    }
}

/// Quadrature amplitudes of one channel in units of Δ.
fn channel_quadrature(t: f64, m_max: usize) -> Vec<f64> {
    let nodes = panel_nodes();
    (1..=m_max)
        .map(|m| {
            // E(θ) = offset − Σ (−1)^{m−1} E_Jm cos mθ, and E = −Δ·sqrt(...)
            let a_m = project(t, m, &nodes);
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            sign * a_m
        })
        .collect()
}

const PANELS: usize = 64;
const GL_ORDER: usize = 16;

/// Composite Gauss–Legendre nodes and weights on `[0, π]`.
fn panel_nodes() -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(GL_ORDER);
    let h = PI / PANELS as f64;
    let mut out = Vec::with_capacity(PANELS * GL_ORDER);
    for p in 0..PANELS {
        let mid = (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}

/// `(2/π) ∫₀^π sqrt(1 − t sin²(θ/2)) cos(mθ) dθ`; the half-period keeps
/// the integrand smooth even at `t = 1`.
fn project(t: f64, m: usize, nodes: &[(f64, f64)]) -> f64 {
    let scale = if m == 0 { 1.0 / PI } else { 2.0 / PI };
    scale
        * nodes
            .iter()
            .map(|&(x, w)| {
                let s2 = (0.5 * x).sin().powi(2);
                w * (1.0 - t * s2).max(0.0).sqrt() * (m as f64 * x).cos()
            })
            .sum::<f64>()
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Coefficients of `−α cosθ + β cos2θ + ε sinθ` for a two-junction SQUID.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquidCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

/// SQUID coefficients at external flux `flux` (radians).
pub fn squid_coeffs(j1: &JunctionSpec, j2: &JunctionSpec, flux: f64) -> Result<SquidCoeffs> {
    let first = two_harmonics(j1)?;
    let second = two_harmonics(j2)?;
    let (s, c) = flux.sin_cos();
    // sin(π) is 1.2e-16 in floating point; the sweet spot is meant exactly
    let sin_flux = if flux.rem_euclid(PI) == 0.0 || (flux.rem_euclid(PI) - PI).abs() < 1e-15 {
        0.0
    } else {
        s
    };
    Ok(SquidCoeffs {
        alpha: first[0] + second[0] * c,
        beta: first[1] + second[1] * (2.0 * flux).cos(),
        epsilon: second[1] * sin_flux,
    })
}

fn two_harmonics(junction: &JunctionSpec) -> Result<[f64; 2]> {
    let mut spec = junction.clone();
    spec.m_max = spec.m_max.max(2);
    spec.n_max = spec.n_max.max(spec.m_max);
    let v = harmonic_amplitudes(&spec)?;
    Ok([v[0], v[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn junction(t: &[f64], m_max: usize) -> JunctionSpec {
        JunctionSpec::new(1.0, t.to_vec(), m_max).unwrap()
    }

    #[test]
    fn abs_energy_examples() {
        assert_eq!(abs_energy(&junction(&[1.0], 2), 0.0), -1.0);
        assert!(abs_energy(&junction(&[1.0], 2), PI).abs() < 1e-15);
        let half = abs_energy(&junction(&[0.5], 2), PI);
        assert!((half + 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_junctions() {
        assert!(JunctionSpec::new(0.0, vec![0.5], 2).is_err());
        assert!(JunctionSpec::new(1.0, vec![1.2], 2).is_err());
        assert!(JunctionSpec::new(1.0, vec![0.5], 0).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn small_transmission_leading_order() {
        let t = 1e-4;
        let e = harmonic_amplitudes(&junction(&[t], 1)).unwrap();
        // sqrt(1 − t s²) ≈ 1 − t s²/2, s² = (1 − cosθ)/2
        assert!((e[0] - t / 4.0).abs() < t * t);
    }

    #[test]
    fn zero_transmission_gives_zero() {
        let e = harmonic_amplitudes_with(&junction(&[0.0], 4), HarmonicMethod::Series).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ballistic_limit_uses_quadrature() {
        let j = junction(&[1.0], 3);
        assert!(matches!(
            harmonic_amplitudes_with(&j, HarmonicMethod::Series),
            Err(Error::SeriesNotConverged { .. })
        ));
        let e = harmonic_amplitudes(&j).unwrap();
        for (m, v) in e.iter().enumerate() {
            let m = (m + 1) as f64;
            let exact = 4.0 / (PI * (4.0 * m * m - 1.0));
            assert!((v - exact).abs() < 1e-12, "m={m}: {v} vs {exact}");
        }
    }

    #[test]
    fn series_matches_quadrature_below_unit_transmission() {
        for t in [0.3, 0.7, 0.95] {
            let j = junction(&[t], 6);
            let s = harmonic_amplitudes_with(&j, HarmonicMethod::Series).unwrap();
            let q = harmonic_amplitudes_with(&j, HarmonicMethod::Quadrature).unwrap();
            for (a, b) in s.iter().zip(&q) {
                assert!((a - b).abs() <= 1e-8 * a.abs(), "T={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn squid_sweet_spot() {
        let j1 = junction(&[0.8], 2);
        let j2 = junction(&[0.6], 2);
        let e1 = harmonic_amplitudes(&j1).unwrap();
        let e2 = harmonic_amplitudes(&j2).unwrap();
        let c = squid_coeffs(&j1, &j2, PI).unwrap();
        assert!((c.alpha - (e1[0] - e2[0])).abs() < 1e-14);
        assert!((c.beta - (e1[1] + e2[1])).abs() < 1e-14);
        assert_eq!(c.epsilon, 0.0);
        let same = squid_coeffs(&j1, &j1, PI).unwrap();
        assert!(same.alpha.abs() < 1e-15);
        let zero = squid_coeffs(&j1, &j2, 0.0).unwrap();
        assert!((zero.alpha - (e1[0] + e2[0])).abs() < 1e-14);
        assert_eq!(zero.epsilon, 0.0);
    }

    proptest! {
        #[test]
        fn amplitudes_positive_and_monotone(t in 0.01f64..0.98, dt in 0.001f64..0.02) {
            let lo = harmonic_amplitudes(&junction(&[t], 4)).unwrap();
            let hi = harmonic_amplitudes(&junction(&[t + dt], 4)).unwrap();
            for (a, b) in lo.iter().zip(&hi) {
                prop_assert!(*a > 0.0);
                prop_assert!(b > a);
            }
        }
    }
}
