//! Dense statevector simulation of dormant two-qubit entanglement.
//!
//! The crate is split along the lines of the physics:
//!
//! * [`state`]: the numerical substrate (amplitudes, single-qubit bases, CX,
//!   qubit permutations, projective measurement).
//! * [`dormant`]: constructors for the `psi3`, `psiN` and locked `psi3L`
//!   families and enumeration of controller outcomes.
//! * [`analysis`]: density matrices, partial trace, the PPT test, and
//!   conditional-probability reports.
//! * [`chsh`]: CHSH observables, sign patterns, rotation sweeps and the
//!   three-level classification.
//! * [`channel`]: the n-party collective channel with consensus-gated
//!   activation and teleportation over the activated pair.

pub mod analysis;
pub mod channel;
pub mod chsh;
pub mod dormant;
pub mod error;
pub mod state;

pub use analysis::{
    conditional_report, conditional_report_with, lockless_deviation, no_signalling_check, ppt_min_eigenvalue,
    CorrelationReport, DensityMatrix,
};

pub use channel::{plan_resources, ChannelSession, ClassicalMessage, Party, ResourcePlan, Role, SessionStatus};
pub use chsh::{
    classify, rotation_sweep, ChshResult, ChshSetting, EntanglementLevel, PatternSet, SignPattern, SweepSummary,
};
pub use dormant::{
    activation_table, build_psi3, build_psi3l, build_psi_n, destruction_check, ActivationRow, ActivationTable,
    DormantFamily, FamilyKind,
};
pub use error::{Error, Result};
pub use state::{BellState, MeasurementRecord, PermutationMap, StateVector, Unitary1Q};

/// Absolute tolerance for probabilities and density-matrix entries.
pub const PROB_TOL: f64 = 1e-10;
/// Absolute tolerance for amplitudes and unitarity.
pub const AMP_TOL: f64 = 1e-12;
/// Largest register the dense backend accepts.
pub const MAX_QUBITS: usize = 20;
