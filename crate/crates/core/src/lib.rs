//! Randomized benchmarking and cycle benchmarking for qutrit processors.
//!
//! The crate covers the full stack: qutrit linear algebra, the single-qutrit
//! Clifford group and Pauli frame, compilation into native pulses, a noisy
//! density-matrix simulator, benchmarking protocols and decay fitting.

pub mod algebra;
pub mod compiler;
pub mod error;
pub mod estimator;
pub mod groups;
pub mod noise;
pub mod protocols;
pub mod table_file;

pub use algebra::{DensityMatrix, MeasurementCounts, QuditMatrix, C64};
pub use compiler::{CompileStats, GateKind, NativeGate, NativeSequence, Subspace};
pub use error::{Error, Result};
pub use estimator::{DecayFit, FitModel, FitOptions, FitPoint, LeakageFit};
pub use groups::{CliffordElement, CliffordTable, LevelPair, PauliLabel};
pub use noise::{ChannelSpec, Circuit, Executor, NoiseModel, NoisePreset, Simulator};
pub use protocols::{
    Basis, CbExperimentPlan, CbResult, CycleGate, DecayPoint, DecayRecord, InterleavedGate,
    RbExperimentPlan, RbVariant,
};
pub use table_file::TableFile;
