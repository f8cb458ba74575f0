//! Physical quantities used throughout the placement model.
//!
//! Latency and bandwidth are kept as integers internally (microseconds and
//! kbit/s) so that sums and bound checks are exact. On the wire they are
//! fractional milliseconds and Mbps.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One-way latency. Serialized as fractional milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Latency(i64);

impl Latency {
    pub const ZERO: Latency = Latency(0);

    pub fn from_ms(ms: f64) -> Self {
        Latency((ms * 1000.0).round() as i64)
    }

    pub const fn from_micros(us: i64) -> Self {
        Latency(us)
    }

    pub const fn as_micros(self) -> i64 {
        self.0
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Add for Latency {
    type Output = Latency;
    fn add(self, rhs: Latency) -> Latency {
        Latency(self.0 + rhs.0)
    }
}

impl AddAssign for Latency {
    fn add_assign(&mut self, rhs: Latency) {
        self.0 += rhs.0;
    }
}

impl Sum for Latency {
    fn sum<I: Iterator<Item = Latency>>(iter: I) -> Latency {
        iter.fold(Latency::ZERO, Add::add)
    }
}

impl fmt::Display for Latency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_ms())
    }
}

impl Serialize for Latency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_ms())
    }
}

impl<'de> Deserialize<'de> for Latency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ms = f64::deserialize(d)?;
        if !ms.is_finite() {
            return Err(serde::de::Error::custom("latency must be finite"));
        }
        Ok(Latency::from_ms(ms))
    }
}

/// Link bit rate. Serialized as fractional Mbps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bandwidth(i64);

impl Bandwidth {
    pub const ZERO: Bandwidth = Bandwidth(0);

    pub fn from_mbps(mbps: f64) -> Self {
        Bandwidth((mbps * 1000.0).round() as i64)
    }

    pub const fn from_kbps(kbps: i64) -> Self {
        Bandwidth(kbps)
    }

    pub const fn as_kbps(self) -> i64 {
        self.0
    }

    pub fn as_mbps(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Add for Bandwidth {
    type Output = Bandwidth;
    fn add(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0 + rhs.0)
    }
}

impl AddAssign for Bandwidth {
    fn add_assign(&mut self, rhs: Bandwidth) {
        self.0 += rhs.0;
    }
}

impl Sub for Bandwidth {
    type Output = Bandwidth;
    fn sub(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0 - rhs.0)
    }
}

impl SubAssign for Bandwidth {
    fn sub_assign(&mut self, rhs: Bandwidth) {
        self.0 -= rhs.0;
    }
}

impl Sum for Bandwidth {
    fn sum<I: Iterator<Item = Bandwidth>>(iter: I) -> Bandwidth {
        iter.fold(Bandwidth::ZERO, Add::add)
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_mbps())
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_mbps())
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mbps = f64::deserialize(d)?;
        if !mbps.is_finite() {
            return Err(serde::de::Error::custom("bandwidth must be finite"));
        }
        Ok(Bandwidth::from_mbps(mbps))
    }
}

/// CPU (millicores) and memory (MiB) of a compute resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ComputeCapacity {
    pub cpu: u64,
    pub memory: u64,
}

impl ComputeCapacity {
    pub const ZERO: ComputeCapacity = ComputeCapacity { cpu: 0, memory: 0 };

    pub const fn new(cpu: u64, memory: u64) -> Self {
        ComputeCapacity { cpu, memory }
    }

    /// Componentwise `self <= other`.
    pub fn fits_within(&self, other: &ComputeCapacity) -> bool {
        self.cpu <= other.cpu && self.memory <= other.memory
    }

    pub fn saturating_sub(&self, other: &ComputeCapacity) -> ComputeCapacity {
        ComputeCapacity {
            cpu: self.cpu.saturating_sub(other.cpu),
            memory: self.memory.saturating_sub(other.memory),
        }
    }

    pub fn checked_sub(&self, other: &ComputeCapacity) -> Option<ComputeCapacity> {
        Some(ComputeCapacity {
            cpu: self.cpu.checked_sub(other.cpu)?,
            memory: self.memory.checked_sub(other.memory)?,
        })
    }
}

impl Add for ComputeCapacity {
    type Output = ComputeCapacity;
    fn add(self, rhs: ComputeCapacity) -> ComputeCapacity {
        ComputeCapacity {
            cpu: self.cpu + rhs.cpu,
            memory: self.memory + rhs.memory,
        }
    }
}

impl AddAssign for ComputeCapacity {
    fn add_assign(&mut self, rhs: ComputeCapacity) {
        self.cpu += rhs.cpu;
        self.memory += rhs.memory;
    }
}

impl Sum for ComputeCapacity {
    fn sum<I: Iterator<Item = ComputeCapacity>>(iter: I) -> ComputeCapacity {
        iter.fold(ComputeCapacity::ZERO, Add::add)
    }
}

impl fmt::Display for ComputeCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} m / {} MiB", self.cpu, self.memory)
    }
}
