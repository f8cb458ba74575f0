//! Simulated clock and the deployment timeline markers.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point or span on the simulated clock, in whole milliseconds.
/// Serialized as fractional seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms)
    }

    pub fn from_secs(s: f64) -> Self {
        SimTime((s * 1000.0).round() as u64)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, ms) = (self.0 / 1000, self.0 % 1000);
        if ms == 0 {
            write!(f, "{s}")
        } else {
            let frac = format!("{ms:03}");
            write!(f, "{s}.{}", frac.trim_end_matches('0'))
        }
    }
}

impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_secs())
    }
}

impl<'de> Deserialize<'de> for SimTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(d)?;
        if !secs.is_finite() || secs < 0.0 {
            return Err(serde::de::Error::custom("simulated time must be a non-negative number"));
        }
        Ok(SimTime::from_secs(secs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Marker {
    #[serde(rename = "t0")]
    T0,
    #[serde(rename = "placement-complete")]
    PlacementComplete,
    #[serde(rename = "deployer-handoff")]
    DeployerHandoff,
    #[serde(rename = "pods-started")]
    PodsStarted,
    #[serde(rename = "t1")]
    T1,
    #[serde(rename = "t2")]
    T2,
    #[serde(rename = "t3")]
    T3,
    #[serde(rename = "t4")]
    T4,
    #[serde(rename = "t5")]
    T5,
    #[serde(rename = "t6")]
    T6,
    #[serde(rename = "t7")]
    T7,
}

impl Marker {
    pub const ALL: [Marker; 11] = [
        Marker::T0,
        Marker::PlacementComplete,
        Marker::DeployerHandoff,
        Marker::PodsStarted,
        Marker::T1,
        Marker::T2,
        Marker::T3,
        Marker::T4,
        Marker::T5,
        Marker::T6,
        Marker::T7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Marker::T0 => "t0",
            Marker::PlacementComplete => "placement-complete",
            Marker::DeployerHandoff => "deployer-handoff",
            Marker::PodsStarted => "pods-started",
            Marker::T1 => "t1",
            Marker::T2 => "t2",
            Marker::T3 => "t3",
            Marker::T4 => "t4",
            Marker::T5 => "t5",
            Marker::T6 => "t6",
            Marker::T7 => "t7",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Marker::T0 => "workflow start",
            Marker::PlacementComplete => "placement complete",
            Marker::DeployerHandoff => "deployer handoff complete",
            Marker::PodsStarted => "CNF pods started",
            Marker::T1 => "all CNFs allocated",
            Marker::T2 => "radio units configured",
            Marker::T3 => "OAI load finished",
            Marker::T4 => "processing started",
            Marker::T5 => "vRU-CN tunnel up",
            Marker::T6 => "UE tunnel up, traffic started",
            Marker::T7 => "traffic ended",
        }
    }

    pub fn parse(s: &str) -> Option<Marker> {
        Marker::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Offsets of each marker from `t0`. Only the first four are observed
/// timings; `t2`..`t7` are presentation defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineConfig {
    pub placement_complete: SimTime,
    pub deployer_handoff: SimTime,
    pub pods_started: SimTime,
    pub t1: SimTime,
    pub t2: SimTime,
    pub t3: SimTime,
    pub t4: SimTime,
    pub t5: SimTime,
    pub t6: SimTime,
    pub t7: SimTime,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        let s = SimTime::from_millis;
        TimelineConfig {
            placement_complete: s(1_200),
            deployer_handoff: s(31_500),
            pods_started: s(34_000),
            t1: s(70_000),
            t2: s(75_000),
            t3: s(80_000),
            t4: s(90_000),
            t5: s(95_000),
            t6: s(100_000),
            t7: s(160_000),
        }
    }
}

impl TimelineConfig {
    pub fn offset(&self, marker: Marker) -> SimTime {
        match marker {
            Marker::T0 => SimTime::ZERO,
            Marker::PlacementComplete => self.placement_complete,
            Marker::DeployerHandoff => self.deployer_handoff,
            Marker::PodsStarted => self.pods_started,
            Marker::T1 => self.t1,
            Marker::T2 => self.t2,
            Marker::T3 => self.t3,
            Marker::T4 => self.t4,
            Marker::T5 => self.t5,
            Marker::T6 => self.t6,
            Marker::T7 => self.t7,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        Marker::ALL
            .windows(2)
            .filter(|w| self.offset(w[0]) >= self.offset(w[1]))
            .map(|w| format!("marker {} must come after {}", w[1], w[0]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub marker: Marker,
    /// Offset from the deployment's `t0`.
    pub at: SimTime,
    pub detail: String,
}

/// Line-oriented export, one `<sim_seconds> <marker> <detail>` per entry.
pub fn export_timeline(entries: &[TimelineEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("{} {} {}\n", e.at, e.marker, e.detail))
        .collect()
}
