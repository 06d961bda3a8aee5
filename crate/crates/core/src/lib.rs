//! Two-sided matching markets partitioned into communities.
//!
//! The crate covers the domain model ([`market`]), men-optimal deferred
//! acceptance and brute-force enumerators ([`algorithms`]), property
//! verifiers for stability, Pareto optimality and integration monotonicity
//! ([`properties`]), random market generators ([`random`]), gains-from-
//! integration statistics ([`analytics`]), worked fixtures ([`fixtures`]) and
//! the Monte Carlo campaign runner behind the `integra` CLI ([`experiment`]).

pub mod algorithms;
pub mod analytics;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod format;
pub mod market;
pub mod par;
pub mod properties;
pub mod random;

pub use error::{Error, Result};
pub use market::{AgentId, Community, ExtendedMarket, Matching, MatchingScheme, Population, RankMode, Side};
