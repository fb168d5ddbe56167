//! Shared-point KZG multiproofs for data availability sampling.
//!
//! The crate is organised bottom-up:
//!
//! - [`poly`]: scalar-field polynomials and evaluation domains
//! - [`kzg`]: setup, commitments and single-point openings
//! - [`multiproof`] / [`transcript`]: aggregated openings on a shared
//!   micro-domain and their Fiat-Shamir challenge
//! - [`grid`]: erasure-coded row grid and micro-domain grouping
//! - [`wire`]: byte layouts of stored objects and storage accounting
//! - [`dasnet`]: simulated DHT, publishers, light clients, experiments

pub mod dasnet;
pub mod error;
pub mod grid;
pub mod kzg;
pub mod multiproof;
pub mod poly;
pub mod transcript;
pub mod wire;

pub use dasnet::{
    effective_samples, publish, required_samples, run_experiment, ConfigMode, LightClient, MetricsRecord,
    RetrievalOutcome, SamplingPlan, SimDht,
};
pub use error::{Error, Result, WireError};
pub use grid::{
    build_grid, build_opened_group, coordinate_to_group, partition_micro_domains, Coordinate, DataGrid, GridDims,
    GroupId, GroupLayout,
};
pub use kzg::{
    commit, open_single, verify_batch_independent, verify_single, Commitment, OpCounters, OpeningProof, SingleOpening,
    Srs,
};
pub use multiproof::{open_generic, open_shared, verify_shared, AggregatedProof, OpenedGroup};
pub use poly::{div_rem, evaluate, interpolate, vanishing_poly, EvaluationDomain, MicroDomain, Polynomial, Scalar};
pub use transcript::{derive_batch_rho, derive_gamma, Challenge, Transcript};
pub use wire::{decode_mcell, encode_mcell, storage_report, BaselineCell, GCellBlock, MCell, StorageReport};
