//! sEMG channel identifiers and a fixed four-channel container.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Electrode sites used by the interface.
///
/// Biceps/triceps drive the stiffness estimate, trapezius/pectoralis major
/// drive the position estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelId {
    Biceps,
    Triceps,
    Trapezius,
    #[serde(rename = "pectoralis")]
    PectoralisMajor,
}

impl ChannelId {
    pub const ALL: [ChannelId; 4] = [
        ChannelId::Biceps,
        ChannelId::Triceps,
        ChannelId::Trapezius,
        ChannelId::PectoralisMajor,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        match self {
            ChannelId::Biceps => 0,
            ChannelId::Triceps => 1,
            ChannelId::Trapezius => 2,
            ChannelId::PectoralisMajor => 3,
        }
    }

    /// Short lowercase name used in CSV headers and JSON keys.
    pub const fn name(self) -> &'static str {
        match self {
            ChannelId::Biceps => "biceps",
            ChannelId::Triceps => "triceps",
            ChannelId::Trapezius => "trapezius",
            ChannelId::PectoralisMajor => "pectoralis",
        }
    }

    pub const fn is_position_channel(self) -> bool {
        matches!(self, ChannelId::Trapezius | ChannelId::PectoralisMajor)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "biceps" => Ok(ChannelId::Biceps),
            "triceps" => Ok(ChannelId::Triceps),
            "trapezius" => Ok(ChannelId::Trapezius),
            "pectoralis" | "pectoralis_major" => Ok(ChannelId::PectoralisMajor),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

/// One value per channel. Serializes as a JSON/TOML map keyed by channel
/// name.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelMap<T> {
    pub biceps: T,
    pub triceps: T,
    pub trapezius: T,
    pub pectoralis: T,
}

impl<T: Copy> ChannelMap<T> {
    pub const fn splat(v: T) -> Self {
        Self {
            biceps: v,
            triceps: v,
            trapezius: v,
            pectoralis: v,
        }
    }

    pub fn from_fn(mut f: impl FnMut(ChannelId) -> T) -> Self {
        Self {
            biceps: f(ChannelId::Biceps),
            triceps: f(ChannelId::Triceps),
            trapezius: f(ChannelId::Trapezius),
            pectoralis: f(ChannelId::PectoralisMajor),
        }
    }

    pub fn map<U: Copy>(&self, mut f: impl FnMut(ChannelId, T) -> U) -> ChannelMap<U> {
        ChannelMap::from_fn(|ch| f(ch, self[ch]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChannelId, T)> + '_ {
        ChannelId::ALL.into_iter().map(move |ch| (ch, self[ch]))
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.biceps, self.triceps, self.trapezius, self.pectoralis]
    }
}

impl<T> Index<ChannelId> for ChannelMap<T> {
    type Output = T;

    fn index(&self, ch: ChannelId) -> &T {
        match ch {
            ChannelId::Biceps => &self.biceps,
            ChannelId::Triceps => &self.triceps,
            ChannelId::Trapezius => &self.trapezius,
            ChannelId::PectoralisMajor => &self.pectoralis,
        }
    }
}

impl<T> IndexMut<ChannelId> for ChannelMap<T> {
    fn index_mut(&mut self, ch: ChannelId) -> &mut T {
        match ch {
            ChannelId::Biceps => &mut self.biceps,
            ChannelId::Triceps => &mut self.triceps,
            ChannelId::Trapezius => &mut self.trapezius,
            ChannelId::PectoralisMajor => &mut self.pectoralis,
        }
    }
}
