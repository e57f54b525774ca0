//! Top-k socio-spatial co-engaged location selection (SSLS) over geo-social
//! check-in data.
//!
//! Given a query user in a location-based social network, an SSLS query picks
//! the `k` of her check-in locations that maximize a blended score of
//! socio-spatial *relevance* (how strongly the locations engage her friends)
//! and socio-spatial *diversity* (how different the selected locations are,
//! socially and geographically).
//!
//! The crate provides:
//!
//! - [`graph`]: SNAP-style loaders for friendship edges and check-ins, a
//!   deterministic snapshot format, and per-user [`context::QueryContext`]
//!   construction.
//! - [`scoring`]: relevance / diversity scores and the set score `F(S)`,
//!   with incremental update support for the solvers.
//! - [`solver`]: the branch-and-bound `Exact` solver with its two pruning
//!   bounds, the relaxed `Approximate` solver, the relevance-bound `Exact+`
//!   solver and its two-root `Fast` variant.
//! - [`baselines`]: a brute-force oracle plus GMC, GNE and adaptive-SOS
//!   baselines.
//! - [`metrics`]: precision, mean-of-minimum-diversity, social coverage and
//!   social entropy.
//! - [`synth`]: seeded synthetic instance generation for tests and benches.

pub mod baselines;
pub mod context;
pub mod graph;
pub mod metrics;
pub mod scoring;
pub mod solver;
pub mod synth;

pub use context::{DistanceMetric, Params, QueryContext};
pub use graph::SocioSpatialGraph;
pub use scoring::{ScoreTable, SetScore};
pub use solver::{Algorithm, SelectionResult, Telemetry};

use thiserror::Error;

/// Identifier of a user in the social graph.
pub type UserId = u64;
/// Identifier of a location (POI).
pub type LocationId = u64;

/// Errors produced while loading data or answering queries.
#[derive(Debug, Error)]
pub enum SslsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("location {location}: {msg}")]
    Data { location: LocationId, msg: String },
    #[error("user {0} not found")]
    UserNotFound(UserId),
    #[error("query ineligible: {0}")]
    Ineligible(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SslsError>;
