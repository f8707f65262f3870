//! Deterministic train/test assignment from a stable hash of the source name.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidParameter(format!(
                "unknown split {s:?} (expected train|test)"
            ))),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// A source is in the test set when its hash falls below `fraction * 2^64`.
    /// Membership never depends on which other sources exist.
    TestFraction(f64),
    /// The `n` sources with the smallest hashes form the test set.
    TestCount(usize),
}

impl Default for SplitRule {
    fn default() -> Self {
        SplitRule::TestFraction(0.1)
    }
}

impl SplitRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitRule::TestFraction(f) if !(f > 0.0 && f < 1.0) => Err(Error::InvalidParameter(
                format!("test fraction {f} not in (0, 1)"),
            )),
            _ => Ok(()),
        }
    }

    /// Assigns every name; the result is parallel to `names`.
    pub fn assign<S: AsRef<str>>(&self, names: &[S]) -> Vec<Split> {
        match *self {
            SplitRule::TestFraction(f) => names
                .iter()
                .map(|n| {
                    let unit = stable_hash(n.as_ref()) as f64 / 2f64.powi(64);
                    if unit < f {
                        Split::Test
                    } else {
                        Split::Train
                    }
                })
                .collect(),
            SplitRule::TestCount(count) => {
                let mut ranked: Vec<(u64, &str)> = names
                    .iter()
                    .map(|n| (stable_hash(n.as_ref()), n.as_ref()))
                    .collect();
                ranked.sort();
                let test: HashSet<&str> = ranked.iter().take(count).map(|(_, n)| *n).collect();
                names
                    .iter()
                    .map(|n| {
                        if test.contains(n.as_ref()) {
                            Split::Test
                        } else {
                            Split::Train
                        }
                    })
                    .collect()
            }
        }
    }
}

/// First eight bytes of SHA-256, big-endian.
pub fn stable_hash(name: &str) -> u64 {
    let d = Sha256::digest(name.as_bytes());
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}
