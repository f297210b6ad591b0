//! Time counters and the full-width time-based key derivation.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::hmac::{hmac_with_key, HashFunction, SecretKey};

/// Default time step in seconds.
pub const DEFAULT_TIME_STEP: u64 = 30;

/// Epoch and step of the time counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeParams {
    epoch: u64,
    step: u64,
}

impl TimeParams {
    pub fn new(epoch: u64, step: u64) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidTimeStep);
        }
        Ok(TimeParams { epoch, step })
    }

    /// Unix epoch with a 30 second step.
    pub const fn unix_default() -> Self {
        TimeParams { epoch: 0, step: DEFAULT_TIME_STEP }
    }

    pub const fn epoch(&self) -> u64 {
        self.epoch
    }

    pub const fn step(&self) -> u64 {
        self.step
    }

    /// `floor((now - epoch) / step)`.
    pub fn counter_at(&self, now: u64) -> Result<TimeCounter> {
        time_counter(self, now)
    }

    /// First timestamp belonging to `counter`.
    pub fn window_start(&self, counter: TimeCounter) -> Result<u64> {
        counter
            .0
            .checked_mul(self.step)
            .and_then(|t| t.checked_add(self.epoch))
            .ok_or(Error::CounterOverflow)
    }
}

impl Default for TimeParams {
    fn default() -> Self {
        Self::unix_default()
    }
}

/// Quantized time index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeCounter(pub u64);

impl TimeCounter {
    pub const fn value(self) -> u64 {
        self.0
    }

    /// 8-byte big-endian encoding used as the HMAC message.
    pub const fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub fn checked_sub(self, n: u64) -> Option<TimeCounter> {
        self.0.checked_sub(n).map(TimeCounter)
    }
}

impl std::fmt::Display for TimeCounter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn time_counter(params: &TimeParams, now: u64) -> Result<TimeCounter> {
    let elapsed = now
        .checked_sub(params.epoch)
        .ok_or(Error::TimeBeforeEpoch { now, epoch: params.epoch })?;
    Ok(TimeCounter(elapsed / params.step))
}

/// Derives the per-window key `HMAC(K, counter)`. No truncation is applied.
pub fn totp<H: HashFunction + ?Sized>(hash: &H, key: &SecretKey, counter: TimeCounter) -> SecretKey {
    // HMAC output is never empty for a real hash, so this cannot fail.
    SecretKey::new(hmac_with_key(hash, key, &counter.to_be_bytes()))
        .expect("hash output is non-empty")
}

/// Source of the current time in whole seconds since the Unix epoch.
pub trait ClockSource: Send + Sync {
    fn now(&self) -> u64;
}

/// Wall clock.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl ClockSource for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// A clock that always reports the same instant.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub u64);

impl ClockSource for FixedClock {
    fn now(&self) -> u64 {
        self.0
    }
}

impl<C: ClockSource + ?Sized> ClockSource for &C {
    fn now(&self) -> u64 {
        (**self).now()
    }
}
