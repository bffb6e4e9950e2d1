//! File-backed storage for harmonization rules, queryable by source and
//! target data element.
//!
//! Layout under the store root:
//!
//! ```text
//! rules/<sha256-of-canonical-form>.rule.json
//! index.json            # (source, target) -> hash, kept sorted
//! ```
//!
//! One rule is stored per (source, target) pair; putting a second rule for
//! the same pair overwrites the first and reports that it did. The index is
//! exactly reconstructible by scanning the rules directory. Single writer,
//! many readers; concurrent writers are out of contract.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::sha256_hex;
use crate::rules::{deserialize_rule, serialize_rule, ElementRef, HarmonizationRule};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

fn storage(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> StoreError {
    let path = path.into();
    move |source| StoreError::Storage { path, source }
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    source: ElementRef,
    target: ElementRef,
    hash: String,
}

#[derive(Serialize, Deserialize)]
struct IndexDoc {
    rules: Vec<IndexEntry>,
}

/// Outcome of a put: the stored rule's content hash and whether an earlier
/// rule for the same (source, target) pair was replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutOutcome {
    pub hash: String,
    pub overwrote: bool,
}

/// A rule store rooted at a directory.
#[derive(Debug)]
pub struct RuleStore {
    root: PathBuf,
    index: BTreeMap<(ElementRef, ElementRef), String>,
}

impl RuleStore {
    /// Open (creating if necessary) a store at `root`. An existing
    /// `index.json` is loaded; otherwise the index is rebuilt by scanning
    /// the rules directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let rules_dir = root.join("rules");
        fs::create_dir_all(&rules_dir).map_err(storage(&rules_dir))?;
        let index_path = root.join("index.json");
        let index = if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(storage(&index_path))?;
            let doc: IndexDoc = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                path: index_path.clone(),
                reason: e.to_string(),
            })?;
            doc.rules
                .into_iter()
                .map(|e| ((e.source, e.target), e.hash))
                .collect()
        } else {
            Self::scan(&rules_dir)?
        };
        Ok(Self { root, index })
    }

    /// Rebuild the pair index from the rule files on disk.
    pub fn rebuild_index(&mut self) -> Result<(), StoreError> {
        self.index = Self::scan(&self.rules_dir())?;
        self.write_index()
    }

    fn scan(rules_dir: &Path) -> Result<BTreeMap<(ElementRef, ElementRef), String>, StoreError> {
        let mut index = BTreeMap::new();
        let entries = fs::read_dir(rules_dir).map_err(storage(rules_dir))?;
        let mut paths: Vec<PathBuf> = entries
            .collect::<Result<Vec<_>, _>>()
            .map_err(storage(rules_dir))?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".rule.json")))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(storage(&path))?;
            let rule = deserialize_rule(&text).map_err(|e| StoreError::Corrupt {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            let hash = sha256_hex(serialize_rule(&rule).as_bytes());
            index.insert((rule.source().clone(), rule.target().clone()), hash);
        }
        Ok(index)
    }

    fn rules_dir(&self) -> PathBuf {
        self.root.join("rules")
    }

    fn rule_path(&self, hash: &str) -> PathBuf {
        self.rules_dir().join(format!("{hash}.rule.json"))
    }

    fn write_index(&self) -> Result<(), StoreError> {
        let doc = IndexDoc {
            rules: self
                .index
                .iter()
                .map(|((source, target), hash)| IndexEntry {
                    source: source.clone(),
                    target: target.clone(),
                    hash: hash.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("index serialization");
        text.push('\n');
        let path = self.root.join("index.json");
        fs::write(&path, text).map_err(storage(&path))
    }

    /// Persist `rule` in canonical form, replacing any earlier rule for the
    /// same (source, target) pair.
    pub fn put(&mut self, rule: &HarmonizationRule) -> Result<PutOutcome, StoreError> {
        let text = serialize_rule(rule);
        let hash = sha256_hex(text.as_bytes());
        let path = self.rule_path(&hash);
        if !path.exists() {
            fs::write(&path, &text).map_err(storage(&path))?;
        }
        let key = (rule.source().clone(), rule.target().clone());
        let previous = self.index.insert(key, hash.clone());
        if let Some(old_hash) = &previous {
            // Drop the replaced file unless another pair still references it.
            if *old_hash != hash && !self.index.values().any(|h| h == old_hash) {
                let old_path = self.rule_path(old_hash);
                if old_path.exists() {
                    fs::remove_file(&old_path).map_err(storage(&old_path))?;
                }
            }
        }
        self.write_index()?;
        Ok(PutOutcome {
            hash,
            overwrote: previous.is_some(),
        })
    }

    /// The stored rule for (source, target), if any.
    pub fn get(
        &self,
        source: &ElementRef,
        target: &ElementRef,
    ) -> Result<Option<HarmonizationRule>, StoreError> {
        match self.index.get(&(source.clone(), target.clone())) {
            Some(hash) => Ok(Some(self.load(hash)?)),
            None => Ok(None),
        }
    }

    fn load(&self, hash: &str) -> Result<HarmonizationRule, StoreError> {
        let path = self.rule_path(hash);
        let text = fs::read_to_string(&path).map_err(storage(&path))?;
        deserialize_rule(&text).map_err(|e| StoreError::Corrupt {
            path,
            reason: e.to_string(),
        })
    }

    /// All rules matching the given constraints, ordered by
    /// (source, target) lexicographically. With no constraints this lists
    /// the whole store.
    pub fn query(
        &self,
        source: Option<&ElementRef>,
        target: Option<&ElementRef>,
    ) -> Result<Vec<HarmonizationRule>, StoreError> {
        let mut rules = Vec::new();
        for ((s, t), hash) in &self.index {
            if source.is_some_and(|want| want != s) {
                continue;
            }
            if target.is_some_and(|want| want != t) {
                continue;
            }
            rules.push(self.load(hash)?);
        }
        Ok(rules)
    }

    /// Every stored rule in deterministic order.
    pub fn all(&self) -> Result<Vec<HarmonizationRule>, StoreError> {
        self.query(None, None)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}
