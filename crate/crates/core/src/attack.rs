//! Birthday-bound arithmetic and small-scale collision experiments on
//! truncated TMACs.

use std::collections::HashSet;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hmac::SecretKey;
use crate::sim::SimClock;
use crate::suite::TmacSuite;
use crate::totp::{ClockSource, TimeCounter};

/// `k(0.5, m) / sqrt(m)`, rounded as it is usually quoted.
pub const BIRTHDAY_CONSTANT: f64 = 1.1774;

/// Julian year.
pub const SECONDS_PER_YEAR: f64 = 31_557_600.0;

/// Reference hashrate of a fast SHA-256 mining ASIC, hashes per second.
pub const REFERENCE_HASHRATE: f64 = 7722e9;

/// Largest space evaluated by the exact product.
pub const EXACT_MAX_SPACE: u64 = 1 << 24;

fn domain(msg: impl Into<String>) -> Error {
    Error::DomainError(msg.into())
}

/// Probability that `k` uniform draws from `m` values contain a repeat:
/// `1 - m! / ((m - k)! m^k)`, evaluated as `1 - prod_{i<k} (1 - i/m)` in log space.
pub fn collision_probability_exact(m: u64, k: u64) -> Result<f64> {
    if m < 1 {
        return Err(domain("space size must be at least 1"));
    }
    if m > EXACT_MAX_SPACE {
        return Err(domain(format!("space size {m} exceeds the exact-evaluation limit {EXACT_MAX_SPACE}")));
    }
    if k > m {
        return Err(domain(format!("{k} draws exceed the space size {m}")));
    }
    let m_f = m as f64;
    let log_no_collision: f64 = (1..k).map(|i| (-(i as f64) / m_f).ln_1p()).sum();
    Ok(-log_no_collision.exp_m1())
}

/// Exact collision probability for a `bits`-bit digest (`m = 2^bits`).
pub fn collision_probability_exact_bits(bits: u32, k: u64) -> Result<f64> {
    if bits >= 64 {
        return Err(domain("bit width too large for exact evaluation"));
    }
    collision_probability_exact(1u64 << bits, k)
}

/// `1 - exp(-k^2 / 2m)`.
pub fn collision_probability_approx(m: f64, k: f64) -> Result<f64> {
    if m.is_nan() || m < 1.0 || !m.is_finite() {
        return Err(domain("space size must be a finite value of at least 1"));
    }
    if k.is_nan() || k < 0.0 {
        return Err(domain("draw count must be non-negative"));
    }
    Ok(-(-(k * k) / (2.0 * m)).exp_m1())
}

/// Draws needed for collision probability `p`: `sqrt(2m ln(1/(1-p)))`.
pub fn trials_for_probability(p: f64, m: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("probability must lie strictly between 0 and 1"));
    }
    if m.is_nan() || m < 1.0 || !m.is_finite() {
        return Err(domain("space size must be a finite value of at least 1"));
    }
    Ok((-2.0 * m * (-p).ln_1p()).sqrt())
}

/// Seconds for a `bits`-bit birthday attack at `hashrate`: `1.1774 * 2^(c/2) / d`.
pub fn attack_time_seconds(bits: u32, hashrate: f64) -> Result<f64> {
    if bits < 1 {
        return Err(domain("bit width must be at least 1"));
    }
    check_hashrate(hashrate)?;
    Ok(BIRTHDAY_CONSTANT * 2f64.powf(f64::from(bits) / 2.0) / hashrate)
}

fn check_hashrate(hashrate: f64) -> Result<()> {
    if hashrate.is_nan() || hashrate <= 0.0 || !hashrate.is_finite() {
        return Err(domain("hashrate must be positive"));
    }
    Ok(())
}

pub fn seconds_to_years(seconds: f64) -> f64 {
    seconds / SECONDS_PER_YEAR
}

/// Cost of finding a collision with probability `p` on a `bits`-bit MAC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackCost {
    pub bits: u32,
    pub hashrate: f64,
    pub probability: f64,
    pub trials: f64,
    pub seconds: f64,
}

impl AttackCost {
    pub fn years(&self) -> f64 {
        seconds_to_years(self.seconds)
    }
}

pub fn attack_cost(bits: u32, hashrate: f64, probability: f64) -> Result<AttackCost> {
    if bits < 1 {
        return Err(domain("bit width must be at least 1"));
    }
    check_hashrate(hashrate)?;
    let trials = trials_for_probability(probability, 2f64.powf(f64::from(bits)))?;
    Ok(AttackCost { bits, hashrate, probability, trials, seconds: trials / hashrate })
}

impl fmt::Display for AttackCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24}{}", "digest bits (c)", self.bits)?;
        writeln!(f, "{:<24}2^{}", "space size (m)", self.bits)?;
        writeln!(f, "{:<24}{}", "probability (P)", self.probability)?;
        writeln!(f, "{:<24}{:.6e}", "trials k(P, m)", self.trials)?;
        writeln!(f, "{:<24}{:.6e}", "hashrate (d, H/s)", self.hashrate)?;
        writeln!(f, "{:<24}{:.2} x 10^9 ({:.6e})", "time (seconds)", self.seconds / 1e9, self.seconds)?;
        write!(f, "{:<24}{:.2}", "time (years)", self.years())
    }
}

/// Truncates a MAC to its leading `bits` bits.
pub fn truncate_mac(mac: &[u8], bits: u32) -> u64 {
    debug_assert!((1..=64).contains(&bits));
    let mut head = [0u8; 8];
    let n = mac.len().min(8);
    head[..n].copy_from_slice(&mac[..n]);
    u64::from_be_bytes(head) >> (64 - bits)
}

/// Outcome of repeated collision searches on truncated MACs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    pub truncate_bits: u32,
    /// Messages hashed until the first repeated tag, per run (the repeat included).
    pub trials: Vec<u64>,
}

impl EmpiricalReport {
    pub fn mean(&self) -> f64 {
        self.trials.iter().sum::<u64>() as f64 / self.trials.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.trials.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        }
    }

    /// `1.1774 * 2^(c/2)`, the draw count at which a collision becomes even odds.
    pub fn birthday_bound(&self) -> f64 {
        BIRTHDAY_CONSTANT * 2f64.powf(f64::from(self.truncate_bits) / 2.0)
    }
}

fn check_truncation(bits: u32) -> Result<()> {
    if !(1..=32).contains(&bits) {
        return Err(domain("truncation must be between 1 and 32 bits"));
    }
    Ok(())
}

/// Runs `runs` independent collision searches on `truncate_bits`-bit TMAC tags.
///
/// Each run reads `clock` once and keeps that instant for all its messages, so
/// every message in a run is MACed under the same window key. Messages are
/// distinct 16-byte strings from a ChaCha stream seeded with `seed`.
pub fn empirical_collision_trials(
    suite: &TmacSuite,
    key: &SecretKey,
    truncate_bits: u32,
    runs: usize,
    seed: u64,
    clock: &dyn ClockSource,
) -> Result<EmpiricalReport> {
    check_truncation(truncate_bits)?;
    if runs == 0 {
        return Err(domain("at least one run is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(runs);
    for _ in 0..runs {
        let window = suite.window_key(key, suite.counter_at(clock.now())?);
        let mut messages = HashSet::new();
        let mut tags = HashSet::new();
        let mut count = 0u64;
        loop {
            let mut msg = [0u8; 16];
            rng.fill_bytes(&mut msg);
            if !messages.insert(msg) {
                continue;
            }
            count += 1;
            if !tags.insert(truncate_mac(&window.mac(&msg), truncate_bits)) {
                break;
            }
        }
        trials.push(count);
    }
    Ok(EmpiricalReport { truncate_bits, trials })
}

/// How much of a collected (message, MAC) corpus survives a clock step.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidationReport {
    pub truncate_bits: u32,
    pub collected_at: TimeCounter,
    pub revalidated_at: TimeCounter,
    pub corpus_size: usize,
    /// Entries whose full-width MAC still verifies.
    pub full_width_valid: usize,
    /// Entries whose truncated tag still matches.
    pub truncated_valid: usize,
}

impl InvalidationReport {
    pub fn counter_advanced(&self) -> bool {
        self.revalidated_at != self.collected_at
    }

    pub fn full_width_fraction(&self) -> f64 {
        self.full_width_valid as f64 / self.corpus_size as f64
    }

    pub fn truncated_fraction(&self) -> f64 {
        self.truncated_valid as f64 / self.corpus_size as f64
    }
}

/// Collects a corpus at the clock's current instant, steps the scripted clock
/// once, and re-checks every entry at the new instant.
///
/// An adversary's precomputed table is only useful while the window key that
/// produced it is live. With no scripted step the corpus stays fully valid.
pub fn window_invalidates_attack(
    suite: &TmacSuite,
    key: &SecretKey,
    truncate_bits: u32,
    corpus_size: usize,
    seed: u64,
    clock: &SimClock,
) -> Result<InvalidationReport> {
    check_truncation(truncate_bits)?;
    let collected = suite.window_key(key, suite.counter_at(clock.now())?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<([u8; 16], Vec<u8>)> = (0..corpus_size)
        .map(|_| {
            let mut msg = [0u8; 16];
            rng.fill_bytes(&mut msg);
            let mac = collected.mac(&msg);
            (msg, mac)
        })
        .collect();

    clock.step();
    let revalidated = suite.window_key(key, suite.counter_at(clock.now())?);

    let mut full_width_valid = 0;
    let mut truncated_valid = 0;
    for (msg, mac) in &corpus {
        let fresh = revalidated.mac(msg);
        if crate::hmac::verify_mac_equal(&fresh, mac) {
            full_width_valid += 1;
        }
        if truncate_mac(&fresh, truncate_bits) == truncate_mac(mac, truncate_bits) {
            truncated_valid += 1;
        }
    }
    Ok(InvalidationReport {
        truncate_bits,
        collected_at: collected.counter(),
        revalidated_at: revalidated.counter(),
        corpus_size,
        full_width_valid,
        truncated_valid,
    })
}
