//! Pinned expectations for verification runs.
//!
//! A golden file is a JSON array of entries. Each entry names a check, the status it must
//! report and optionally an interval that the measured constant must fall in.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::CheckStatus;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenEntry {
    pub id: String,
    pub expected: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenMismatch {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldenSet {
    pub entries: Vec<GoldenEntry>,
}

impl GoldenSet {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn get(&self, id: &str) -> Option<&GoldenEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Compares one measurement against its entry.
    pub fn check(&self, id: &str, status: CheckStatus, value: f64) -> Result<Option<GoldenMismatch>> {
        let e = self.get(id).ok_or_else(|| Error::Config(format!("no golden entry for '{id}'")))?;
        let mut reasons = Vec::new();
        if e.expected != status {
            reasons.push(format!("status {status:?}, expected {:?}", e.expected));
        }
        if let Some([lo, hi]) = e.interval {
            if !(value >= lo && value <= hi) {
                reasons.push(format!("value {value} outside [{lo}, {hi}]"));
            }
        }
        Ok((!reasons.is_empty()).then(|| GoldenMismatch { id: id.to_string(), reason: reasons.join("; ") }))
    }
}
