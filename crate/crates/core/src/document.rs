//! Schedule documents, shared by multischedules and per-variant native schedules.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlexRayConfig, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub config: FlexRayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    /// Set on native schedules only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<usize>,
    pub slots: Vec<SlotRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub index: usize,
    pub nodes: Vec<NodeId>,
    pub placements: Vec<PlacementRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub signal: String,
    pub first_cycle: u32,
    pub offset_bits: u32,
    /// Job cycles within the hyperperiod. Derived from `first_cycle` and the
    /// period when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<Vec<u32>>,
}

impl ScheduleDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Finds the slot and record placing `signal`, if any.
    pub fn find(&self, signal: &str) -> Option<(&SlotRecord, &PlacementRecord)> {
        self.slots
            .iter()
            .find_map(|slot| slot.placements.iter().find(|p| p.signal == signal).map(|p| (slot, p)))
    }
}
