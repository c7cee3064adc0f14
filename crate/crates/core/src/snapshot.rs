//! Versioned JSON snapshots of a family. Γ and Π are not stored; they are
//! rebuilt on load and checked against the optional stored digest.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charmat::{build_cache, CharCache};
use crate::model::{BlockFamily, FamilyError, ObjectSet, Universe};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("malformed snapshot: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("block `{block}` refers to object index {index}, universe has {len}")]
    IndexOutOfRange {
        block: String,
        index: usize,
        len: usize,
    },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("digest mismatch: stored {stored}, rebuilt {rebuilt}")]
    DigestMismatch { stored: String, rebuilt: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub name: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub universe: Vec<String>,
    pub blocks: Vec<BlockRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

impl Snapshot {
    pub fn of_family(family: &BlockFamily) -> Self {
        Snapshot {
            version: SNAPSHOT_VERSION,
            universe: family
                .universe()
                .labels()
                .iter()
                .map(|l| l.to_string())
                .collect(),
            blocks: family
                .blocks()
                .iter()
                .map(|b| BlockRecord {
                    name: b.name.clone(),
                    members: b.members.iter().collect(),
                })
                .collect(),
            digest: None,
        }
    }

    pub fn of_cache(cache: &CharCache) -> Self {
        Snapshot {
            digest: Some(cache.digest()),
            ..Snapshot::of_family(cache.family())
        }
    }

    pub fn family(&self) -> Result<BlockFamily, SnapshotError> {
        if self.version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version(self.version));
        }
        let universe = Arc::new(Universe::new(self.universe.iter().cloned())?);
        let n = universe.len();
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            if let Some(&index) = b.members.iter().find(|&&i| i >= n) {
                return Err(SnapshotError::IndexOutOfRange {
                    block: b.name.clone(),
                    index,
                    len: n,
                });
            }
            blocks.push((
                b.name.clone(),
                ObjectSet::from_indices(n, b.members.iter().copied()),
            ));
        }
        Ok(BlockFamily::new(universe, blocks)?)
    }

    /// Rebuilds the cache and, when a digest is stored, checks it.
    pub fn cache(&self) -> Result<CharCache, SnapshotError> {
        let cache = build_cache(&self.family()?);
        if let Some(stored) = &self.digest {
            let rebuilt = cache.digest();
            if &rebuilt != stored {
                return Err(SnapshotError::DigestMismatch {
                    stored: stored.clone(),
                    rebuilt,
                });
            }
        }
        Ok(cache)
    }
}

pub fn save_cache(cache: &CharCache) -> String {
    serde_json::to_string_pretty(&Snapshot::of_cache(cache)).expect("snapshot serializes")
}

pub fn load_cache(text: &str) -> Result<CharCache, SnapshotError> {
    serde_json::from_str::<Snapshot>(text)?.cache()
}
