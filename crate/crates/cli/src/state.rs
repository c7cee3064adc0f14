//! Session state: the original family, the applied update history and a
//! snapshot of the current family with its digest.

use std::sync::Arc;

use covmat::dynamic::{apply_script, parse_script, ScriptError};
use covmat::snapshot::{Snapshot, SnapshotError};
use covmat::{build_cache, BlockFamily, CharCache, Delta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("malformed state file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported state version {0}")]
    Version(u32),
    #[error("{which} family: {source}")]
    Snapshot {
        which: &'static str,
        source: SnapshotError,
    },
    #[error("history does not replay: {0}")]
    Replay(#[from] ScriptError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateFile {
    version: u32,
    #[serde(default)]
    sources: Vec<String>,
    original: Snapshot,
    #[serde(default)]
    history: Vec<String>,
    current: Snapshot,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub sources: Vec<String>,
    pub original: Arc<BlockFamily>,
    /// Applied updates in script syntax, one elementary step per line.
    pub history: Vec<String>,
    pub cache: CharCache,
}

impl Session {
    pub fn new(family: BlockFamily, source: impl Into<String>) -> Self {
        let cache = build_cache(&family);
        Session {
            sources: vec![source.into()],
            original: Arc::new(family),
            history: Vec::new(),
            cache,
        }
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            version: STATE_VERSION,
            sources: self.sources.clone(),
            original: Snapshot::of_family(&self.original),
            history: self.history.clone(),
            current: Snapshot::of_cache(&self.cache),
        };
        serde_json::to_string_pretty(&file).expect("state serializes") + "\n"
    }

    /// Loads a state file, rebuilding the current cache and checking its
    /// stored digest. History is not replayed here; see [`Session::replay`].
    pub fn from_json(text: &str) -> Result<Self, StateError> {
        let file: StateFile = serde_json::from_str(text)?;
        if file.version != STATE_VERSION {
            return Err(StateError::Version(file.version));
        }
        let original = file
            .original
            .family()
            .map_err(|source| StateError::Snapshot {
                which: "original",
                source,
            })?;
        let cache = file
            .current
            .cache()
            .map_err(|source| StateError::Snapshot {
                which: "current",
                source,
            })?;
        Ok(Session {
            sources: file.sources,
            original: Arc::new(original),
            history: file.history,
            cache,
        })
    }

    /// Applies every history line to a fresh cache of the original family.
    pub fn replay(&self) -> Result<CharCache, StateError> {
        let script = parse_script(&self.history.join("\n"))?;
        Ok(apply_script(&build_cache(&self.original), &script)?)
    }

    pub fn record(&mut self, deltas: &[Delta], next: CharCache, source: Option<String>) {
        for d in deltas {
            self.history
                .extend(d.to_string().lines().map(str::to_string));
        }
        self.sources.extend(source);
        self.cache = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use covmat::dynamic::apply;
    use covmat::parse_family;

    const FOUR: &str =
        "universe: x1 x2 x3 x4\nblock C1: x1 x4\nblock C2: x1 x2 x4\nblock C3: x3 x4\n";

    #[test]
    fn round_trip_and_replay() {
        let mut s = Session::new(parse_family(FOUR).unwrap(), "four.cov");
        let d = Delta::DeleteBlocks(vec!["C3".into()]);
        let next = apply(&s.cache, &d).unwrap();
        s.record(&[d], next, Some("edit.delta".into()));
        let back = Session::from_json(&s.to_json()).unwrap();
        assert_eq!(back.cache, s.cache);
        assert_eq!(back.history, vec!["del-block C3".to_string()]);
        assert_eq!(back.replay().unwrap(), back.cache);
        assert_eq!(back.sources, ["four.cov", "edit.delta"]);
    }

    #[test]
    fn corrupted_digest_is_detected() {
        let s = Session::new(parse_family(FOUR).unwrap(), "four.cov");
        let text = s.to_json();
        let digest = s.cache.digest();
        let bad = text.replace(&digest, &"0".repeat(digest.len()));
        assert!(matches!(
            Session::from_json(&bad),
            Err(StateError::Snapshot {
                which: "current",
                source: SnapshotError::DigestMismatch { .. }
            })
        ));
    }
}
