//! Exact-arithmetic toolkit for two-bidder FedEx auctions: the disjointness
//! reduction, Lagrangian flow certificates, an exact LP oracle, Myerson
//! ironing, and a two-party protocol harness with bit accounting.

pub mod duality;
pub mod error;
pub mod lp;
pub mod mechanisms;
pub mod myerson;
pub mod numerics;
pub mod properties;
pub mod protocol;
pub mod reduction;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
