//! Probability-state simulator for interferometer experiments.
//!
//! Two engines evaluate the same [`Apparatus`]: [`analytic`] propagates
//! amplitudes exactly and enumerates every detector branch, while
//! [`particle`] runs seeded trials that each end in one definite outcome.
//! [`stats`] compares the two, and [`dsl`] reads and writes the `.gmc`
//! experiment format.

pub mod analytic;
pub mod apparatus;
pub mod builtins;
pub mod device;
pub mod dsl;
pub mod error;
pub mod format;
pub mod matrix;
pub mod particle;
pub mod scan;
pub mod state;
pub mod stats;

pub use analytic::{enumerate_outcomes, BranchTree, OutcomeDistribution};
pub use apparatus::{Apparatus, Detector, DetectorBank, Stage, UNDETECTED};
pub use device::{DeviceKind, DeviceOp};
pub use dsl::{parse, serialize, ExperimentDoc, ParseError};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use particle::{run_ensemble, sample_trial, EnsembleReport, TrialEvent, TrialRecord};
pub use state::{Amplitude, BranchAmplitude, Observable, ProbabilityState, TensorSplit};
pub use stats::{compare, Verdict};
