//! Design and simulation of an integrated color-qubit gate.
//!
//! A micro-ring SFWM source heralds single photons in a nearly pure
//! temporal mode; a DFG waveguide pumped by two pulses rotates them between
//! two frequency bands. The crate models the full chain:
//!
//! * [`material`], [`dispersion`] — Sellmeier media, effective-index mode
//!   solving and imported `n_eff` tables;
//! * [`phasematch`] — mismatch functions, the geometry search and the
//!   simultaneous re-phasematching solve;
//! * [`spectra`] — the heralding joint spectral amplitude and the
//!   conversion mapping function on frequency grids;
//! * [`schmidt`] — Schmidt decomposition, purity and Schmidt number;
//! * [`gate`] — coupling angles, block rotations and output fidelity;
//! * [`pipeline`], [`sweep`], [`commands`] — staged evaluation, parameter
//!   sweeps and the command-line operations.
//!
//! Units: lengths in µm, time in ps, angular frequency in rad/ps, powers in
//! mW. The numerical core is generic over the floating-point type; the
//! aliases below fix it to `f64`.

pub mod commands;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod gate;
pub mod interp;
pub mod linalg;
pub mod material;
pub mod optimize;
pub mod phasematch;
pub mod pipeline;
pub mod quadrature;
pub mod scalar;
pub mod schmidt;
pub mod spectra;
pub mod sweep;

pub use config::DeviceConfig;
pub use error::{Error, Result};
pub use pipeline::{evaluate, DispersionChoice, PointEvaluation};
pub use scalar::Real;
pub use sweep::{run_sweep, SweepPlan, SweepResult};

pub type WaveguideGeometry = material::WaveguideGeometry<f64>;
pub type DispersionModel = dispersion::DispersionModel<f64>;
pub type NeffTable = dispersion::NeffTable<f64>;
pub type DesignWavelengths = phasematch::DesignWavelengths<f64>;
pub type JointAmplitude = spectra::JointAmplitude<f64>;
pub type SpectralGrid = spectra::SpectralGrid<f64>;
pub type Axis = spectra::Axis<f64>;
pub type SchmidtDecomposition = schmidt::SchmidtDecomposition<f64>;
pub type GateParameters = gate::GateParameters<f64>;
pub type QubitOutput = gate::QubitOutput<f64>;
pub type HeraldedOutput = gate::HeraldedOutput<f64>;
