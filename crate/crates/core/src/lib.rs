//! Optimal liquidity provision in a limit order market with small spreads.
//!
//! A provider posts limit orders on both sides of the book, earns the spread
//! when exogenous market orders arrive, and keeps its monetary position inside
//! the band `[β̲_t, β̄_t]`. The crate simulates this market, builds the
//! reflected inventory policy and its price-impact variant, keeps the
//! self-financing books, and checks the policy against a frictionless shadow
//! market, the small-spread welfare expansion, and an exact dynamic program on
//! tiny discretised instances.

pub mod accounting;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod market;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod shadow;
pub mod stats;
pub mod utility;

pub use config::{Coefficient, ModelConfig, Side};
pub use error::{Error, Result};
pub use grid::{build_time_grid, MarketCoefficients, TimeGrid};
pub use market::{MarketPath, MarketSetup};
pub use utility::{ExponentialMixture, UtilityFunction, UtilitySpec};
