//! Simulation and analysis of a spin qubit coupled to a structured,
//! quasi-static dephasing bath.
//!
//! The crate covers the state algebra ([`quantum`]), the bath ([`bath`]),
//! finite-pulse evolution ([`pulse`]), the experiment protocols built on top
//! ([`protocols`]), post-processing ([`analysis`]), and the text/CSV/JSON
//! surfaces used by the command-line tool ([`dsl`], [`config`], [`runner`], [`output`]).

pub mod analysis;
pub mod bath;
pub mod config;
pub mod dsl;
pub mod error;
pub mod output;
pub mod protocols;
pub mod pulse;
pub mod quantum;
pub mod runner;

pub use bath::{paper_default_spectrum, BathSpectrum, Detuning, Mode, PolarizationModel};
pub use error::{Error, Result};
pub use pulse::{Axis, EnsembleMethod, PulseSegment, PulseSequence, SignalModel};
pub use quantum::{BlochVector, DensityMatrix, Rotation};
pub use config::{ExperimentConfig, ExperimentKind, GridSpec};
pub use runner::{run_experiment, ExperimentResult};
