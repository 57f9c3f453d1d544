//! Illumination plan: which LEDs light each exposure and where their
//! patches sit in the recovered spectrum.

use serde::{Deserialize, Serialize};

/// One LED within an exposure group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedEntry {
    /// Index of the LED in the panel's row-major enumeration.
    pub led_index: usize,
    /// Patch center displacement from the spectrum center, in integer
    /// frequency pixels as (rows, cols).
    pub spectral_offset: (i64, i64),
    /// Magnitude of the illumination direction sine.
    pub illumination_na: f64,
    /// True when `illumination_na` exceeds the objective NA.
    pub is_dark_field: bool,
}

/// N exposure groups of M LEDs each; every LED appears in exactly one
/// group. Sequential FPM is the M = 1 case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlluminationPlan {
    pub groups: Vec<Vec<LedEntry>>,
}

impl IlluminationPlan {
    /// One group per LED, in the order given.
    pub fn singleton_groups(entries: Vec<LedEntry>) -> Self {
        Self {
            groups: entries.into_iter().map(|e| vec![e]).collect(),
        }
    }

    /// Groups of `m` consecutive LEDs (the last group may be shorter).
    pub fn chunked_groups(entries: Vec<LedEntry>, m: usize) -> Self {
        assert!(m >= 1, "group size must be at least 1");
        Self {
            groups: entries
                .chunks(m)
                .map(|chunk| chunk.to_vec())
                .collect(),
        }
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_leds(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// A frame is dark-field when every LED lighting it is dark-field.
    pub fn is_dark_field_frame(&self, n: usize) -> bool {
        !self.groups[n].is_empty() && self.groups[n].iter().all(|e| e.is_dark_field)
    }

    /// All entries in (group, member) order.
    pub fn entries(&self) -> impl Iterator<Item = &LedEntry> {
        self.groups.iter().flatten()
    }
}
