//! Spectral recovery by annihilating polynomials.
//!
//! Given measurements `y_l = A B^l x` of an element `x` whose spectrum is a
//! finite set `F`, the minimal annihilating polynomial of the sequence has
//! its nonzero roots in `h(F)`, where `h` is the scalar symbol through which
//! `B` acts on a spectral point. Inverting `h` gives `F`; a linear solve
//! then gives the coefficients. The same driver covers off-grid Prony,
//! exponential sums with polynomial amplitudes, sparse dynamical sampling
//! and time-frequency channel identification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annihilator;
pub mod channel;
pub mod classic;
pub mod confluent;
pub mod dynamical;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod problem;
pub mod recovery;
pub mod shift;

pub use annihilator::{
    build_block_hankel, minimal_annihilator, AnnihilatorResult, MeasurementRecord, RecoveryConfig, RootCluster,
    SpuriousPolicy,
};
pub use channel::{ChannelInstance, ChannelModel, ChannelPath, ChannelProbeSetup, TfShift};
pub use classic::{ClassicInstance, Frequency};
pub use confluent::{ConfluentInstance, PolynomialMode};
pub use dynamical::{DynamicalInstance, DynamicalProblem, EigenChain, GeneralizedEigenbasis};
pub use error::{PronyError, Result};
pub use numerics::{ComplexMatrix, ComplexPolynomial, C64};
pub use problem::{Problem, Report, RunOptions};
pub use recovery::{
    recover_coefficients, recover_spectrum, run_recovery, validate_symbol, Mode, Recovery, SparseSignalModel,
    SpectralInstance, SymbolChecks, ValidationReport, Warning,
};
pub use shift::{ShiftCombination, ShiftTerm};
