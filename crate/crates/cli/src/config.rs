//! Experiment configuration: strict JSON with units in the key names.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::path::Path;

use cos2gate::adiabatic::ScheduleSettings;
use cos2gate::{
    CircuitParams, EigenOptions, JunctionSpec, ModeSpec, Model, PotentialModel, PropagationOptions,
    SinSinVariant, TwoModeBasis,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub circuit: CircuitConfig,
    pub basis: BasisConfig,
    pub sin_sin_variant: SinSinVariant,
    pub phi_grid: PhiGridConfig,
    /// Levels solved for on the φ grid.
    pub levels: usize,
    pub eigen: EigenOptions,
    pub potential: PotentialConfig,
    pub eigenstates: EigenstatesConfig,
    pub schedule: ScheduleConfig,
    pub gate: GateConfig,
    pub sweep: SweepConfig,
    pub junction: JunctionConfig,
    pub compare: CompareConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    pub alpha_ghz: f64,
    pub beta_ghz: f64,
    pub zeta_ghz: f64,
    pub e_c_theta_ghz: f64,
    pub e_c_phi_ghz: f64,
    pub g_ghz: f64,
    /// Defaults to `zeta_ghz` when absent.
    pub alpha_g_ghz: Option<f64>,
    pub beta_g_ghz: f64,
    pub epsilon_g_ghz: f64,
    pub epsilon_theta_ghz: f64,
    pub epsilon_phi_ghz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub n_cut_theta: usize,
    pub n_cut_phi: usize,
    pub n_offset_theta: f64,
    pub n_offset_phi: f64,
}

/// Uniform grid of rotation angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGridConfig {
    pub points: usize,
    pub start_rad: f64,
    pub stop_rad: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Circuit,
    Sinsin,
    Lowenergy,
    LowenergyCorrected,
    /// Ideal rotation of the single- and double-well potentials; potentials only.
    Rotated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub model: ModelChoice,
    pub angles_rad: Vec<f64>,
    /// Grid points per axis on `[−π, π)`.
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenstatesConfig {
    pub angles_rad: Vec<f64>,
    pub levels: usize,
    /// Phase-space grid points per axis.
    pub grid_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub bound_factor: f64,
    pub phi_points: usize,
    pub m_count: usize,
    pub rate_ceiling_rad_per_ns: f64,
    /// Uniform time samples written to `schedule.csv`.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    pub tolerance: f64,
    pub initial_step_ns: Option<f64>,
    /// Evenly spaced trajectory snapshots, endpoints included; 0 disables.
    pub snapshots: usize,
    pub grid_points: usize,
    /// Schedule file written by `schedule`; optimized afresh when absent.
    pub schedule_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `ζ / E_J` with `E_J = alpha_ghz`.
    pub zeta_over_ej: Vec<f64>,
    pub e_c_ghz: Vec<f64>,
    /// Charge cutoff used with each entry of `e_c_ghz`.
    pub n_cut: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JunctionConfig {
    pub gap_ghz: f64,
    /// Single-channel transmissions tabulated in `junction_harmonics.csv`.
    pub transmissions: Vec<f64>,
    pub m_max: usize,
    pub theta_points: usize,
    pub squid: SquidConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SquidConfig {
    pub transmissions_1: Vec<f64>,
    pub transmissions_2: Vec<f64>,
    /// Flux samples on `[0, 2π]`.
    pub flux_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub angles_rad: Vec<f64>,
    pub levels: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitConfig::default(),
            basis: BasisConfig::default(),
            sin_sin_variant: SinSinVariant::Sine,
            phi_grid: PhiGridConfig::default(),
            levels: 6,
            eigen: EigenOptions::default(),
            potential: PotentialConfig::default(),
            eigenstates: EigenstatesConfig::default(),
            schedule: ScheduleConfig::default(),
            gate: GateConfig::default(),
            sweep: SweepConfig::default(),
            junction: JunctionConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            alpha_ghz: 20.0,
            beta_ghz: 20.0,
            zeta_ghz: 20.0,
            e_c_theta_ghz: 0.4,
            e_c_phi_ghz: 0.4,
            g_ghz: 0.0,
            alpha_g_ghz: None,
            beta_g_ghz: 0.0,
            epsilon_g_ghz: 0.0,
            epsilon_theta_ghz: 0.0,
            epsilon_phi_ghz: 0.0,
        }
    }
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            n_cut_theta: 12,
            n_cut_phi: 12,
            n_offset_theta: 0.0,
            n_offset_phi: 0.0,
        }
    }
}

impl Default for PhiGridConfig {
    fn default() -> Self {
        Self {
            points: 33,
            start_rad: 0.0,
            stop_rad: PI,
        }
    }
}

fn quarter_turn_angles() -> Vec<f64> {
    vec![0.0, FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2]
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            model: ModelChoice::Circuit,
            angles_rad: quarter_turn_angles(),
            points: 128,
        }
    }
}

impl Default for EigenstatesConfig {
    fn default() -> Self {
        Self {
            angles_rad: vec![0.0, FRAC_PI_4, FRAC_PI_2],
            levels: 2,
            grid_points: 64,
        }
    }
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let s = ScheduleSettings::default();
        Self {
            bound_factor: s.bound_factor,
            phi_points: s.phi_points,
            m_count: s.m_count,
            rate_ceiling_rad_per_ns: s.rate_ceiling,
            samples: 401,
        }
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        let p = PropagationOptions::default();
        Self {
            tolerance: p.tolerance,
            initial_step_ns: p.initial_step,
            snapshots: 0,
            grid_points: 64,
            schedule_path: None,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            zeta_over_ej: vec![0.25, 0.5, 0.75, 1.0],
            e_c_ghz: vec![0.1, 0.4],
            n_cut: vec![15, 12],
        }
    }
}

impl Default for JunctionConfig {
    fn default() -> Self {
        Self {
            gap_ghz: 40.0,
            transmissions: vec![0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 1.0],
            m_max: 4,
            theta_points: 257,
            squid: SquidConfig::default(),
        }
    }
}

impl Default for SquidConfig {
    fn default() -> Self {
        Self {
            transmissions_1: vec![0.9],
            transmissions_2: vec![0.9],
            flux_points: 65,
        }
    }
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            angles_rad: vec![0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4, PI],
            levels: 6,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_angles(name: &str, angles: &[f64]) -> Result<(), CliError> {
    if angles.is_empty() {
        return Err(invalid(format!("{name} must not be empty")));
    }
    match angles.iter().find(|a| !(0.0..=PI).contains(*a)) {
        Some(a) => Err(invalid(format!("{name}: angle {a} outside [0, pi]"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    /// Read a config file (or start from defaults), apply `key=value`
    /// overrides on dotted paths, then deserialize strictly.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: Self = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.basis().map_err(|e| invalid(e.to_string()))?;
        let g = &self.phi_grid;
        if g.points < 2 {
            return Err(invalid("phi_grid.points must be at least 2"));
        }
        if !(0.0 <= g.start_rad && g.start_rad < g.stop_rad && g.stop_rad <= PI) {
            return Err(invalid("phi_grid needs 0 <= start_rad < stop_rad <= pi"));
        }
        if self.levels < 3 {
            return Err(invalid("levels must be at least 3"));
        }
        check_angles("potential.angles_rad", &self.potential.angles_rad)?;
        check_angles("eigenstates.angles_rad", &self.eigenstates.angles_rad)?;
        check_angles("compare.angles_rad", &self.compare.angles_rad)?;
        if self.potential.points < 4
            || self.eigenstates.grid_points < 4
            || self.gate.grid_points < 4
        {
            return Err(invalid("phase-space grids need at least 4 points per axis"));
        }
        if self.eigenstates.levels < 1 {
            return Err(invalid("eigenstates.levels must be at least 1"));
        }
        if self.compare.levels < 3 {
            return Err(invalid("compare.levels must be at least 3"));
        }
        self.schedule_settings()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if self.schedule.samples < 2 {
            return Err(invalid("schedule.samples must be at least 2"));
        }
        if !(self.gate.tolerance > 0.0) {
            return Err(invalid("gate.tolerance must be positive"));
        }
        if let Some(h) = self.gate.initial_step_ns {
            if !(h > 0.0) {
                return Err(invalid("gate.initial_step_ns must be positive"));
            }
        }
        let s = &self.sweep;
        if s.e_c_ghz.len() != s.n_cut.len() {
            return Err(invalid(
                "sweep.e_c_ghz and sweep.n_cut must have the same length",
            ));
        }
        if s.zeta_over_ej.iter().any(|r| !(*r > 0.0)) || s.e_c_ghz.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid(
                "sweep ratios and charging energies must be positive",
            ));
        }
        let j = &self.junction;
        JunctionSpec::new(j.gap_ghz, j.transmissions.clone(), j.m_max)
            .map_err(|e| invalid(e.to_string()))?;
        for t in [&j.squid.transmissions_1, &j.squid.transmissions_2] {
            JunctionSpec::new(j.gap_ghz, t.clone(), 2).map_err(|e| invalid(e.to_string()))?;
        }
        if j.theta_points < 4 || j.squid.flux_points < 2 {
            return Err(invalid("junction grids are too small"));
        }
        Ok(())
    }

    pub fn params(&self) -> CircuitParams {
        let c = &self.circuit;
        CircuitParams {
            alpha: c.alpha_ghz,
            beta: c.beta_ghz,
            zeta: c.zeta_ghz,
            e_c_theta: c.e_c_theta_ghz,
            e_c_phi: c.e_c_phi_ghz,
            g: c.g_ghz,
            alpha_g: c.alpha_g_ghz,
            beta_g: c.beta_g_ghz,
            epsilon_g: c.epsilon_g_ghz,
            epsilon_theta: c.epsilon_theta_ghz,
            epsilon_phi: c.epsilon_phi_ghz,
        }
    }

    pub fn basis(&self) -> cos2gate::Result<TwoModeBasis> {
        let b = &self.basis;
        Ok(TwoModeBasis::new(
            ModeSpec::with_offset(b.n_cut_theta, self.circuit.e_c_theta_ghz, b.n_offset_theta)?,
            ModeSpec::with_offset(b.n_cut_phi, self.circuit.e_c_phi_ghz, b.n_offset_phi)?,
        ))
    }

    pub fn phi_values(&self) -> Vec<f64> {
        let g = &self.phi_grid;
        (0..g.points)
            .map(|i| {
                if i + 1 == g.points {
                    g.stop_rad
                } else {
                    g.start_rad + (g.stop_rad - g.start_rad) * i as f64 / (g.points - 1) as f64
                }
            })
            .collect()
    }

    pub fn schedule_settings(&self) -> ScheduleSettings {
        ScheduleSettings {
            bound_factor: self.schedule.bound_factor,
            phi_points: self.schedule.phi_points,
            m_count: self.schedule.m_count,
            rate_ceiling: self.schedule.rate_ceiling_rad_per_ns,
        }
    }

    pub fn propagation(&self) -> PropagationOptions {
        PropagationOptions {
            tolerance: self.gate.tolerance,
            initial_step: self.gate.initial_step_ns,
        }
    }
}

impl ModelChoice {
    /// The Hamiltonian for this choice; `Rotated` has none.
    pub fn model(self, variant: SinSinVariant) -> Option<Model> {
        match self {
            Self::Circuit => Some(Model::Circuit),
            Self::Sinsin => Some(Model::SinSin(variant)),
            Self::Lowenergy => Some(Model::LowEnergy),
            Self::LowenergyCorrected => Some(Model::LowEnergyCorrected),
            Self::Rotated => None,
        }
    }

    pub fn potential(self, variant: SinSinVariant) -> PotentialModel {
        match self {
            Self::Circuit => PotentialModel::Circuit,
            Self::Sinsin => PotentialModel::SinSin(variant),
            Self::Lowenergy => PotentialModel::LowEnergy,
            Self::LowenergyCorrected => PotentialModel::LowEnergyCorrected,
            Self::Rotated => PotentialModel::Rotated,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Circuit => "circuit",
            Self::Sinsin => "sinsin",
            Self::Lowenergy => "lowenergy",
            Self::LowenergyCorrected => "lowenergy-corrected",
            Self::Rotated => "rotated",
        }
    }
}

/// `a.b.c=value`; the value is parsed as JSON, falling back to a string.
fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{spec}` is not key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(invalid(format!("override `{spec}` has an empty key")));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| {
            invalid(format!(
                "override `{path}`: `{key}` is not inside an object"
            ))
        })?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| {
        invalid(format!(
            "override `{path}` does not address an object field"
        ))
    })?;
    obj.insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}
