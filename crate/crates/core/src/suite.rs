//! TMAC suites: a hash, an epoch and a time step, plus the MAC itself.
//!
//! Suite names follow `TMAC-<HASH>[-<EPOCH>-<STEP>]`, e.g. `TMAC-SHA256-UNIX-30`.
//! The short form `TMAC-<HASH>` means the Unix epoch with a 30 second step.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hmac::{hmac, HashAlgorithm, HashFunction, SecretKey};
use crate::totp::{time_counter, totp, TimeCounter, TimeParams};

const PREFIX: &str = "TMAC";

/// Named epochs usable in suite names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Epoch {
    #[default]
    Unix,
}

impl Epoch {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "UNIX" => Ok(Epoch::Unix),
            other => Err(Error::UnsupportedEpoch(other.to_owned())),
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Epoch::Unix => "UNIX",
        }
    }

    /// Seconds since the Unix epoch.
    pub const fn timestamp(self) -> u64 {
        match self {
            Epoch::Unix => 0,
        }
    }
}

/// A fully specified TMAC instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TmacSuite {
    hash: HashAlgorithm,
    epoch: Epoch,
    time: TimeParams,
}

impl TmacSuite {
    pub fn new(hash: HashAlgorithm, epoch: Epoch, step: u64) -> Result<Self> {
        Ok(TmacSuite { hash, epoch, time: TimeParams::new(epoch.timestamp(), step)? })
    }

    /// `TMAC-SHA256-UNIX-30`.
    pub fn sha256() -> Self {
        Self::with_defaults(HashAlgorithm::Sha256)
    }

    pub fn with_defaults(hash: HashAlgorithm) -> Self {
        TmacSuite { hash, epoch: Epoch::Unix, time: TimeParams::unix_default() }
    }

    pub fn hash(&self) -> HashAlgorithm {
        self.hash
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn time_params(&self) -> &TimeParams {
        &self.time
    }

    /// MAC length in bytes.
    pub fn mac_len(&self) -> usize {
        self.hash.output_len()
    }

    /// The full canonical form, always including epoch and step.
    pub fn canonical_name(&self) -> String {
        format_suite_name(self)
    }

    pub fn counter_at(&self, now: u64) -> Result<TimeCounter> {
        time_counter(&self.time, now)
    }

    /// The derived key for one time window.
    pub fn window_key(&self, key: &SecretKey, counter: TimeCounter) -> WindowKey {
        WindowKey { hash: self.hash, counter, key: totp(&self.hash, key, counter) }
    }

    /// MAC of `msg` under the window key for `now`.
    pub fn tmac(&self, key: &SecretKey, msg: &[u8], now: u64) -> Result<Vec<u8>> {
        Ok(self.tmac_at(key, msg, self.counter_at(now)?))
    }

    pub fn tmac_at(&self, key: &SecretKey, msg: &[u8], counter: TimeCounter) -> Vec<u8> {
        self.window_key(key, counter).mac(msg)
    }
}

impl Default for TmacSuite {
    fn default() -> Self {
        Self::sha256()
    }
}

impl fmt::Display for TmacSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_suite_name(self))
    }
}

impl FromStr for TmacSuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_suite_name(s)
    }
}

/// Convenience wrapper for [`TmacSuite::tmac`].
pub fn tmac(suite: &TmacSuite, key: &SecretKey, msg: &[u8], now: u64) -> Result<Vec<u8>> {
    suite.tmac(key, msg, now)
}

/// Key material for a single time window. Holding one avoids re-deriving the
/// window key for every message signed in that window.
#[derive(Debug, Clone)]
pub struct WindowKey {
    hash: HashAlgorithm,
    counter: TimeCounter,
    key: SecretKey,
}

impl WindowKey {
    pub fn counter(&self) -> TimeCounter {
        self.counter
    }

    pub fn mac(&self, msg: &[u8]) -> Vec<u8> {
        hmac(&self.hash, self.key.as_bytes(), msg)
    }
}

pub fn format_suite_name(suite: &TmacSuite) -> String {
    format!("{PREFIX}-{}-{}-{}", suite.hash, suite.epoch.as_str(), suite.time.step())
}

pub fn parse_suite_name(name: &str) -> Result<TmacSuite> {
    let malformed = |reason| Error::MalformedSuiteName { name: name.to_owned(), reason };

    let mut parts = name.split('-');
    if parts.next() != Some(PREFIX) {
        return Err(malformed("missing TMAC prefix"));
    }
    let fields: Vec<&str> = parts.collect();
    if fields.iter().any(|f| f.is_empty() || !f.bytes().all(|b| b.is_ascii_alphanumeric())) {
        return Err(malformed("fields must be non-empty and alphanumeric"));
    }

    match fields.as_slice() {
        [hash] => Ok(TmacSuite::with_defaults(HashAlgorithm::from_name(hash)?)),
        [hash, epoch, step] => {
            let hash = HashAlgorithm::from_name(hash)?;
            let epoch = Epoch::from_name(epoch)?;
            let step = parse_step(step).ok_or_else(|| malformed("step must be a positive decimal without leading zeros"))?;
            TmacSuite::new(hash, epoch, step)
        }
        _ => Err(malformed("expected TMAC-<HASH> or TMAC-<HASH>-<EPOCH>-<STEP>")),
    }
}

fn parse_step(step: &str) -> Option<u64> {
    if !step.bytes().all(|b| b.is_ascii_digit()) || step.starts_with('0') {
        return None;
    }
    step.parse().ok()
}
