//! Average Age of Information for broadcast and unicast downlink status
//! updates over short-packet links.
//!
//! * [`fbl`]: block error rate, capacity and special functions.
//! * [`analytic`]: closed-form per-UE and system AoI for every strategy.
//! * [`sim`]: discrete-event simulator used as an independent check.
//! * [`selector`]: broadcast/unicast selection thresholds.
//! * [`dynamic`]: Monte Carlo over PPP-distributed UEs.

pub mod analytic;
pub mod dynamic;
pub mod error;
pub mod fbl;
mod numeric;
pub mod seeding;
pub mod selector;
pub mod sim;
pub mod stats;
pub mod system;

pub use error::{AoiError, Result};
pub use fbl::{BlockErrorRate, DispersionForm, LinkBudget};
pub use stats::{AoiEstimate, Interval};
pub use system::{StrategyKind, SystemConfig};
