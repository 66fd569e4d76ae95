//! Charge-basis simulation of the coupled cos(2θ) qubit adiabatic Z gate.

pub mod adiabatic;
pub mod charge_basis;
pub mod eigen;
pub mod error;
pub mod evolution;
pub mod family;
pub mod hamiltonians;
pub mod junction;
pub mod operator;
pub mod spectral;

pub use adiabatic::{
    ControlSchedule, Interpolation, NonadiabaticTable, RateProfile, ScheduleSettings, Transition,
};
pub use charge_basis::{ModeSpec, Trig, TwoModeBasis};
pub use eigen::{EigenMethod, EigenOptions};
pub use error::{Error, Result};
pub use evolution::{GateOptions, GateResult, Matrix2, PropagationOptions};
pub use family::{OperatorFamily, Profile};
pub use hamiltonians::{CircuitParams, Model, PotentialGrid, PotentialModel, SinSinVariant};
pub use junction::{JunctionSpec, SquidCoeffs};
pub use operator::OperatorMatrix;
pub use spectral::{
    ModelComparison, NoiseElements, PhaseSpaceState, SpectralResult, SpectrumSweep,
};

pub use num_complex::Complex64 as C64;
