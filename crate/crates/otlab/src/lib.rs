//! otlab: a simulation laboratory for building 1-out-of-2 oblivious
//! transfer from a flawed all-or-nothing OT.
//!
//! The underlying primitive delivers a message with probability 1/2 and
//! has one known flaw: a dishonest sender can force non-delivery without
//! detection in any single run. That flaw demolishes the classic Crepeau
//! reduction ([`crepeau`]) but can be contained: an element choosing
//! subroutine ([`ech`]) and a share-splitting reduction ([`ot12`]) keep
//! both parties' cheating probabilities below any target `epsilon` with
//! parameters derived in [`params`].
//!
//! Everything is deterministic given a seed. The [`sim`] harness runs
//! seeded campaigns, estimates event rates with Wilson intervals and
//! checks them against the closed-form bounds.

pub mod crepeau;
pub mod ech;
pub mod error;
pub mod ot12;
pub mod params;
pub mod primitive;
pub mod rng;
pub mod sim;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// An analytic bound together with whether its side conditions hold at
/// the evaluated parameters. Values are reported raw (they may exceed
/// one); comparisons against measurements clamp at one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub applicable: bool,
}
