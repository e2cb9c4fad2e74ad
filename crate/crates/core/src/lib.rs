//! Joint bit and power loading for an OFDM secondary user that shares
//! spectrum with co-channel and adjacent-channel primary users. Interference
//! limits hold with a prescribed probability under Rayleigh fading and are
//! turned into deterministic power caps.
//!
//! The pipeline is [`scenario`] → [`channel`] → [`constraints`] →
//! [`solver`] → [`discretizer`], with [`kkt`] and [`oracle`] as independent
//! checks and [`experiments`] as the Monte Carlo driver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ber;
pub mod channel;
pub mod constraints;
pub mod discretizer;
pub mod error;
pub mod experiments;
pub mod kkt;
pub mod oracle;
pub mod quadrature;
pub mod scenario;
pub mod solver;

pub use ber::BerThreshold;
pub use channel::{AciFactors, ChannelRealization};
pub use constraints::{ConstraintCaps, FeasibilityReport};
pub use discretizer::Allocation;
pub use error::{ConfigError, Error, Result};
pub use experiments::{
    AggregateStats, OracleComparison, PreparedScenario, RuntimeScaling, SweepRow,
};
pub use kkt::{KktReport, KktTolerances};
pub use oracle::{BitDomain, OracleOptions, OracleResult};
pub use scenario::{PuDescriptor, PuKind, ScenarioConfig, SweepParam};
pub use solver::{ContinuousSolution, LoadingProblem, Regime};
