//! Identifier and quantity types shared across the crate.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

/// Index of a node within its [`NetworkGraph`](crate::network::NetworkGraph).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub usize);

/// Index of a link within its [`NetworkGraph`](crate::network::NetworkGraph).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LinkId(pub usize);

/// Identifier of a service chain request: source access point ordinal plus a
/// per-source sequence number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct SfcId {
    pub source: u32,
    pub seq: u32,
}

impl fmt::Display for SfcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}.{}", self.source, self.seq)
    }
}

/// Discrete simulation time, in slots.
pub type TimeSlot = u64;

/// Bandwidth stored in thousandths of a GB/s.
///
/// Keeping the quantity integral makes reserve/release arithmetic on the
/// ledger exact: releasing a hold restores the residual bit for bit.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
pub struct Bandwidth(u64);

impl Bandwidth {
    pub const ZERO: Bandwidth = Bandwidth(0);

    /// Converts from GB/s, rounding to the nearest thousandth.
    pub fn from_gbps(gbps: f64) -> Bandwidth {
        Bandwidth((gbps * 1000.0).round() as u64)
    }

    pub fn from_milli(milli: u64) -> Bandwidth {
        Bandwidth(milli)
    }

    pub fn as_gbps(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn as_milli(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, rhs: Bandwidth) -> Option<Bandwidth> {
        self.0.checked_sub(rhs.0).map(Bandwidth)
    }
}

impl Add for Bandwidth {
    type Output = Bandwidth;

    fn add(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0 + rhs.0)
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GB/s", self.as_gbps())
    }
}
