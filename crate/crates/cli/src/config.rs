//! Settings file: flat `key = value` pairs, overridden by command-line flags.
//!
//! ```toml
//! seed = 7
//! target = 30000
//! minhash = "20,2"
//! partitioner = "label-propagation"   # single | label-propagation | file
//! partitions = 10
//! partition_file = "parts.tsv"
//! histogram_buckets = 1               # or "auto"
//! answer_cap = 50000000
//! atom_cap = 12
//! partition_cap = 100000
//!
//! [[histogram]]
//! predicate = "http://example.org/knows"
//! direction = "out"
//! buckets = 4
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub target: Option<usize>,
    pub minhash: Option<String>,
    pub partitioner: Option<String>,
    pub partitions: Option<u32>,
    pub partition_file: Option<PathBuf>,
    pub histogram_buckets: Option<BucketSetting>,
    #[serde(default)]
    pub histogram: Vec<HistogramOverride>,
    pub answer_cap: Option<u64>,
    pub atom_cap: Option<usize>,
    pub partition_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BucketSetting {
    Count(u32),
    Auto(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramOverride {
    pub predicate: String,
    pub direction: String,
    pub buckets: BucketSetting,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Parses `m,n`.
pub fn parse_minhash(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--minhash expects m,n with positive integers, got {text:?}"));
    let (m, n) = text.split_once(',').ok_or_else(bad)?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if m == 0 || n == 0 {
        return Err(bad());
    }
    Ok((m, n))
}
