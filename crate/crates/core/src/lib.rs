//! Maintains an approximate maximum eigenvalue and eigenvector of a positive
//! semi-definite matrix under rank-one decremental updates `A ← A − vvᵀ`.
//!
//! Layers, bottom up:
//! - [`sparse`] and [`operator`]: sparse storage and the implicit operator
//!   `scale·(A_0 − Σ v_i v_iᵀ)` with touched-non-zero accounting.
//! - [`power`]: the multi-copy static power method.
//! - [`tracker`]: witness maintenance for normalized operators.
//! - [`eigen`]: the scale-free tracker with epochs and the SDP view.
//! - [`checkpsd`]: PSD certification by deflation.
//! - [`oracle`]: dense Jacobi eigensolver and level profiles for verification.
//! - [`stream`]: seeded PSD-preserving update streams.

#![no_std]

extern crate alloc;

pub mod checkpsd;
pub mod eigen;
pub mod error;
pub mod operator;
pub mod oracle;
pub mod params;
pub mod power;
pub mod rng;
pub mod sparse;
pub mod stream;
pub mod tracker;

pub use checkpsd::{check_psd, check_psd_with, CheckConfig, CheckOutcome, NotPsdReason, PsdVerdict};
pub use eigen::{EigenEstimate, EigenSnapshot, EigenTracker, SdpSolution};
pub use error::{Error, Result};
pub use operator::{quad_form_increment, DynamicOperator, SymOperator};
pub use oracle::{exact_spectrum, spectrum_profile, ExactSpectrum, SpectrumProfile};
pub use power::{power_method, power_method_with, CandidateSet, PowerConfig, PowerOutcome};
pub use sparse::{SparseSymMatrix, SparseVector};
pub use stream::{generate, Stream, StreamMode, StreamSpec};
pub use tracker::{TrackerState, TrackerStats, UpdateResult};
