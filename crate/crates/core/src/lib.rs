//! Exact and overflow-safe computation for the extended occupancy problem.
//!
//! `n` balls are allocated uniformly at random to `m` bins and each ball
//! independently occupies its bin with probability `theta` (otherwise it falls
//! through). The crate covers the occupancy number `K_n`, the excess hitting
//! time `T_k` (negative occupancy), the spillage `n_eff - K_n`, the
//! noncentral Stirling numbers underlying all three, the pure-birth Markov
//! chain view, mixture identities and resampling coverage.

pub mod chain;
pub mod coverage;
pub mod dist;
pub mod error;
pub mod exact;
pub mod identities;
pub mod scaled;
pub mod stirling;

pub use error::{Error, Result};
pub use exact::ExactReal;
pub use scaled::ScaledFloat;
