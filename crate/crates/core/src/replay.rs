//! Replay-resistant envelopes built from a per-message identifier.
//!
//! Signing is two nested MACs: the identifier keys an HMAC over the message,
//! and that intermediate signature is then MACed under the window key:
//!
//! ```text
//! I = HMAC(s, m)
//! a = TMAC(K, I)
//! ```
//!
//! The recipient keeps, for every time counter still inside its acceptance
//! window, the set of identifiers it has accepted. An identifier is recorded
//! only after its MAC checks out; recording on rejection would let anyone who
//! sees an identifier in flight get the genuine message dropped as a replay.
//! Once a counter falls out of the window its identifiers are discarded: every
//! MAC bound to that counter has already stopped verifying.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::hmac::{hmac, verify_mac_equal, HashFunction, SecretKey};
use crate::suite::{parse_suite_name, TmacSuite};
use crate::totp::{ClockSource, TimeCounter, TimeParams};

/// Length of freshly generated identifiers.
pub const DEFAULT_IDENTIFIER_LEN: usize = 16;
/// Shortest identifier accepted from callers or on the wire.
pub const MIN_IDENTIFIER_LEN: usize = 8;
/// Largest supported acceptance window, in time counters.
pub const MAX_ACCEPTANCE_WINDOW: u64 = 4;

/// The transmitted tuple: message, MAC and identifier, tagged with the suite.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Envelope {
    pub suite_name: String,
    pub message: Vec<u8>,
    pub mac: Vec<u8>,
    pub identifier: Vec<u8>,
}

impl Envelope {
    pub fn identifier_hex(&self) -> String {
        hex::encode(&self.identifier)
    }
}

/// `HMAC(identifier, message)`, the value the master key actually signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntermediateSignature(Vec<u8>);

impl IntermediateSignature {
    pub fn compute<H: HashFunction + ?Sized>(hash: &H, identifier: &[u8], message: &[u8]) -> Self {
        IntermediateSignature(hmac(hash, identifier, message))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Draws a fresh identifier of [`DEFAULT_IDENTIFIER_LEN`] bytes.
pub fn random_identifier<R: RngCore + CryptoRng>(rng: &mut R) -> Vec<u8> {
    let mut id = vec![0u8; DEFAULT_IDENTIFIER_LEN];
    rng.fill_bytes(&mut id);
    id
}

/// Signs `msg`. With no identifier supplied, 16 bytes are drawn from the OS RNG.
pub fn sign(
    suite: &TmacSuite,
    key: &SecretKey,
    msg: &[u8],
    identifier: Option<&[u8]>,
    now: u64,
) -> Result<Envelope> {
    let identifier = match identifier {
        Some(id) => id.to_vec(),
        None => random_identifier(&mut OsRng),
    };
    sign_with_identifier(suite, key, msg, identifier, now)
}

pub fn sign_with_identifier(
    suite: &TmacSuite,
    key: &SecretKey,
    msg: &[u8],
    identifier: Vec<u8>,
    now: u64,
) -> Result<Envelope> {
    if identifier.len() < MIN_IDENTIFIER_LEN {
        return Err(Error::WeakIdentifier { len: identifier.len(), min: MIN_IDENTIFIER_LEN });
    }
    let counter = suite.counter_at(now)?;
    let intermediate = IntermediateSignature::compute(&suite.hash(), &identifier, msg);
    Ok(Envelope {
        suite_name: suite.canonical_name(),
        message: msg.to_vec(),
        mac: suite.tmac_at(key, intermediate.as_bytes(), counter),
        identifier,
    })
}

/// Result of verifying one envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerificationOutcome {
    Accept { counter: TimeCounter },
    ReplayDetected { counter: TimeCounter },
    InvalidMac,
    IdentifierNotAssigned,
    MalformedEnvelope,
}

impl VerificationOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            VerificationOutcome::Accept { .. } => OutcomeKind::Accept,
            VerificationOutcome::ReplayDetected { .. } => OutcomeKind::ReplayDetected,
            VerificationOutcome::InvalidMac => OutcomeKind::InvalidMac,
            VerificationOutcome::IdentifierNotAssigned => OutcomeKind::IdentifierNotAssigned,
            VerificationOutcome::MalformedEnvelope => OutcomeKind::MalformedEnvelope,
        }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, VerificationOutcome::Accept { .. })
    }
}

impl fmt::Display for VerificationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())
    }
}

/// Outcome without its payload, for expectations and counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeKind {
    Accept,
    ReplayDetected,
    InvalidMac,
    IdentifierNotAssigned,
    MalformedEnvelope,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 5] = [
        OutcomeKind::Accept,
        OutcomeKind::ReplayDetected,
        OutcomeKind::InvalidMac,
        OutcomeKind::IdentifierNotAssigned,
        OutcomeKind::MalformedEnvelope,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            OutcomeKind::Accept => "Accept",
            OutcomeKind::ReplayDetected => "ReplayDetected",
            OutcomeKind::InvalidMac => "InvalidMac",
            OutcomeKind::IdentifierNotAssigned => "IdentifierNotAssigned",
            OutcomeKind::MalformedEnvelope => "MalformedEnvelope",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::MalformedScenario(format!("unknown outcome {s:?}")))
    }
}

/// Identifiers accepted per time counter, limited to the acceptance window.
#[derive(Debug)]
pub struct IdentifierCache {
    params: TimeParams,
    window: u64,
    windows: Mutex<BTreeMap<TimeCounter, HashSet<Vec<u8>>>>,
}

impl IdentifierCache {
    pub fn new(params: TimeParams, window: u64) -> Result<Self> {
        if !(1..=MAX_ACCEPTANCE_WINDOW).contains(&window) {
            return Err(Error::InvalidWindow(window));
        }
        Ok(IdentifierCache { params, window, windows: Mutex::new(BTreeMap::new()) })
    }

    pub fn time_params(&self) -> &TimeParams {
        &self.params
    }

    /// Acceptance window `w`, in counters.
    pub fn window(&self) -> u64 {
        self.window
    }

    fn lock(&self) -> MutexGuard<'_, BTreeMap<TimeCounter, HashSet<Vec<u8>>>> {
        // A panic while holding the lock cannot leave the map half-updated.
        self.windows.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Records `identifier` under `counter`. Returns `false` if it was already
    /// present. This is the only mutation on the verification path.
    pub fn check_and_insert(&self, counter: TimeCounter, identifier: &[u8]) -> bool {
        let mut windows = self.lock();
        let set = windows.entry(counter).or_default();
        if set.contains(identifier) {
            false
        } else {
            set.insert(identifier.to_vec())
        }
    }

    pub fn contains(&self, counter: TimeCounter, identifier: &[u8]) -> bool {
        self.lock().get(&counter).is_some_and(|set| set.contains(identifier))
    }

    /// Drops every counter older than `oldest_kept`, returning how many went.
    pub fn evict_before(&self, oldest_kept: TimeCounter) -> usize {
        let mut windows = self.lock();
        let kept = windows.split_off(&oldest_kept);
        let evicted = windows.len();
        *windows = kept;
        evicted
    }

    /// Oldest counter still inside the window whose newest counter is `current`.
    pub fn oldest_retained(&self, current: TimeCounter) -> TimeCounter {
        TimeCounter(current.0.saturating_sub(self.window - 1))
    }

    /// Discards counters that fell out of the acceptance window at `now`.
    pub fn flush_expired(&self, now: u64) -> usize {
        match self.params.counter_at(now) {
            Ok(current) => self.evict_before(self.oldest_retained(current)),
            Err(_) => 0,
        }
    }

    pub fn window_count(&self) -> usize {
        self.lock().len()
    }

    pub fn identifier_count(&self) -> usize {
        self.lock().values().map(HashSet::len).sum()
    }

    /// Counters and their identifiers in ascending counter order; identifiers sorted.
    pub fn snapshot(&self) -> Vec<(TimeCounter, Vec<Vec<u8>>)> {
        self.lock()
            .iter()
            .map(|(counter, set)| {
                let mut ids: Vec<Vec<u8>> = set.iter().cloned().collect();
                ids.sort();
                (*counter, ids)
            })
            .collect()
    }

    /// Replaces the contents with `entries`.
    pub fn restore(&self, entries: impl IntoIterator<Item = (TimeCounter, Vec<Vec<u8>>)>) {
        let mut windows = self.lock();
        windows.clear();
        for (counter, ids) in entries {
            windows.entry(counter).or_default().extend(ids);
        }
    }
}

/// Sender identity as established by the transport, not by the envelope.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SenderId(pub String);

impl From<&str> for SenderId {
    fn from(s: &str) -> Self {
        SenderId(s.to_owned())
    }
}

#[derive(Debug, Default)]
struct Assignments {
    by_sender: HashMap<SenderId, HashSet<Vec<u8>>>,
    owner: HashMap<Vec<u8>, SenderId>,
}

/// Identifiers handed out by the recipient to specific senders.
///
/// Each identifier can be accepted at most once per time counter, which caps
/// every sender at one message per assigned identifier per window.
#[derive(Debug, Default)]
pub struct AssignedRegistry {
    inner: RwLock<Assignments>,
}

impl AssignedRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign_identifiers<I>(&self, sender: &SenderId, identifiers: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let identifiers: Vec<Vec<u8>> = identifiers.into_iter().collect();
        let mut batch = HashSet::with_capacity(identifiers.len());
        for id in &identifiers {
            if id.len() < MIN_IDENTIFIER_LEN {
                return Err(Error::WeakIdentifier { len: id.len(), min: MIN_IDENTIFIER_LEN });
            }
            if !batch.insert(id.as_slice()) {
                return Err(Error::DuplicateAssignment(sender.0.clone()));
            }
        }

        let mut inner = self.inner.write().unwrap_or_else(|p| p.into_inner());
        for id in &identifiers {
            if let Some(owner) = inner.owner.get(id) {
                if owner != sender {
                    return Err(Error::DuplicateAssignment(owner.0.clone()));
                }
            }
        }
        for id in identifiers {
            inner.owner.insert(id.clone(), sender.clone());
            inner.by_sender.entry(sender.clone()).or_default().insert(id);
        }
        Ok(())
    }

    pub fn is_assigned(&self, sender: &SenderId, identifier: &[u8]) -> bool {
        let inner = self.inner.read().unwrap_or_else(|p| p.into_inner());
        inner.by_sender.get(sender).is_some_and(|ids| ids.contains(identifier))
    }
}

/// Free-function form of [`AssignedRegistry::assign_identifiers`].
pub fn assign_identifiers<I>(registry: &AssignedRegistry, sender: &SenderId, identifiers: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<u8>>,
{
    registry.assign_identifiers(sender, identifiers)
}

pub fn flush_expired(cache: &IdentifierCache, now: u64) -> usize {
    cache.flush_expired(now)
}

fn well_formed(suite: &TmacSuite, env: &Envelope) -> bool {
    let same_suite = parse_suite_name(&env.suite_name).is_ok_and(|s| s == *suite);
    same_suite && env.mac.len() == suite.mac_len() && env.identifier.len() >= MIN_IDENTIFIER_LEN
}

/// Verifies `env` at `now` against `cache`.
///
/// Tries the current counter and then up to `w - 1` earlier ones. The
/// identifier is recorded only under the counter whose MAC matched.
pub fn verify(
    cache: &IdentifierCache,
    suite: &TmacSuite,
    key: &SecretKey,
    env: &Envelope,
    now: u64,
) -> Result<VerificationOutcome> {
    if cache.time_params() != suite.time_params() {
        return Err(Error::StateMismatch("cache time parameters differ from the suite".into()));
    }
    let current = suite.counter_at(now)?;
    let outcome = if well_formed(suite, env) {
        authenticate_and_retain(cache, suite, key, env, current)
    } else {
        VerificationOutcome::MalformedEnvelope
    };
    cache.evict_before(cache.oldest_retained(current));
    Ok(outcome)
}

/// As [`verify`], additionally requiring that the identifier was assigned to `sender`.
pub fn verify_assigned(
    cache: &IdentifierCache,
    registry: &AssignedRegistry,
    sender: &SenderId,
    suite: &TmacSuite,
    key: &SecretKey,
    env: &Envelope,
    now: u64,
) -> Result<VerificationOutcome> {
    if well_formed(suite, env) && !registry.is_assigned(sender, &env.identifier) {
        let current = suite.counter_at(now)?;
        cache.evict_before(cache.oldest_retained(current));
        return Ok(VerificationOutcome::IdentifierNotAssigned);
    }
    verify(cache, suite, key, env, now)
}

fn authenticate_and_retain(
    cache: &IdentifierCache,
    suite: &TmacSuite,
    key: &SecretKey,
    env: &Envelope,
    current: TimeCounter,
) -> VerificationOutcome {
    let intermediate = IntermediateSignature::compute(&suite.hash(), &env.identifier, &env.message);
    let matched = (0..cache.window())
        .filter_map(|back| current.checked_sub(back))
        .find(|&counter| verify_mac_equal(&suite.tmac_at(key, intermediate.as_bytes(), counter), &env.mac));

    match matched {
        Some(counter) if cache.check_and_insert(counter, &env.identifier) => {
            VerificationOutcome::Accept { counter }
        }
        Some(counter) => VerificationOutcome::ReplayDetected { counter },
        None => VerificationOutcome::InvalidMac,
    }
}

/// A recipient: suite, key, identifier cache and optional assignments.
///
/// Safe to share across threads; [`Verifier::verify`] may run concurrently.
#[derive(Debug)]
pub struct Verifier {
    suite: TmacSuite,
    key: SecretKey,
    cache: IdentifierCache,
    registry: Option<Arc<AssignedRegistry>>,
}

impl Verifier {
    pub fn new(suite: TmacSuite, key: SecretKey, window: u64) -> Result<Self> {
        let cache = IdentifierCache::new(*suite.time_params(), window)?;
        Ok(Verifier { suite, key, cache, registry: None })
    }

    /// Switches to assigned-identifier mode.
    pub fn with_registry(mut self, registry: Arc<AssignedRegistry>) -> Self {
        self.registry = Some(registry);
        self
    }

    pub fn suite(&self) -> &TmacSuite {
        &self.suite
    }

    pub fn cache(&self) -> &IdentifierCache {
        &self.cache
    }

    pub fn registry(&self) -> Option<&AssignedRegistry> {
        self.registry.as_deref()
    }

    /// Verifies an envelope in random-identifier mode.
    pub fn verify(&self, env: &Envelope, now: u64) -> Result<VerificationOutcome> {
        verify(&self.cache, &self.suite, &self.key, env, now)
    }

    /// Verifies an envelope from a known sender. Without a registry this is
    /// the same as [`Verifier::verify`].
    pub fn verify_from(&self, sender: &SenderId, env: &Envelope, now: u64) -> Result<VerificationOutcome> {
        match &self.registry {
            Some(registry) => verify_assigned(&self.cache, registry, sender, &self.suite, &self.key, env, now),
            None => self.verify(env, now),
        }
    }

    /// Reads the clock once and verifies against that instant.
    pub fn verify_now(&self, env: &Envelope, clock: &dyn ClockSource) -> Result<VerificationOutcome> {
        self.verify(env, clock.now())
    }

    pub fn flush_expired(&self, now: u64) -> usize {
        self.cache.flush_expired(now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmac::HashAlgorithm;

    const T0: u64 = 1_700_000_010;

    fn key() -> SecretKey {
        SecretKey::new(b"replay test master key".to_vec()).unwrap()
    }

    fn suite() -> TmacSuite {
        TmacSuite::sha256()
    }

    fn verifier(window: u64) -> Verifier {
        Verifier::new(suite(), key(), window).unwrap()
    }

    #[test]
    fn sign_then_verify_accepts() {
        let env = sign(&suite(), &key(), b"hello", None, T0).unwrap();
        assert_eq!(env.identifier.len(), DEFAULT_IDENTIFIER_LEN);
        assert_eq!(env.mac.len(), 32);
        assert_eq!(env.suite_name, "TMAC-SHA256-UNIX-30");
        let counter = suite().counter_at(T0).unwrap();
        assert_eq!(verifier(1).verify(&env, T0).unwrap(), VerificationOutcome::Accept { counter });
    }

    #[test]
    fn distinct_identifiers_give_distinct_macs() {
        let a = sign(&suite(), &key(), b"m", Some(b"identifier-1"), T0).unwrap();
        let b = sign(&suite(), &key(), b"m", Some(b"identifier-2"), T0).unwrap();
        assert_ne!(a.mac, b.mac);
    }

    #[test]
    fn mac_composition_is_bit_exact() {
        let alg = HashAlgorithm::Sha256;
        let id = b"0123456789abcdef";
        let env = sign(&suite(), &key(), b"payload", Some(id), T0).unwrap();
        let counter = suite().counter_at(T0).unwrap();
        let window_key = hmac(&alg, key().as_bytes(), &counter.to_be_bytes());
        let expected = hmac(&alg, &window_key, &hmac(&alg, id, b"payload"));
        assert_eq!(env.mac, expected);
    }

    #[test]
    fn weak_identifier_rejected() {
        assert_eq!(
            sign(&suite(), &key(), b"m", Some(b"1234"), T0),
            Err(Error::WeakIdentifier { len: 4, min: 8 })
        );
        assert!(matches!(sign(&suite(), &key(), b"m", Some(b""), T0), Err(Error::WeakIdentifier { .. })));
    }

    #[test]
    fn replay_in_same_window_detected() {
        let v = verifier(1);
        let env = sign(&suite(), &key(), b"m", None, T0).unwrap();
        assert!(v.verify(&env, T0).unwrap().is_accept());
        assert_eq!(v.verify(&env, T0 + 5).unwrap().kind(), OutcomeKind::ReplayDetected);
    }

    #[test]
    fn replay_after_window_is_invalid_mac() {
        let v = verifier(1);
        let env = sign(&suite(), &key(), b"m", None, T0).unwrap();
        assert!(v.verify(&env, T0).unwrap().is_accept());
        assert_eq!(v.verify(&env, T0 + 30).unwrap(), VerificationOutcome::InvalidMac);
        assert_eq!(v.cache().window_count(), 0);
    }

    #[test]
    fn wider_window_accepts_late_delivery_once() {
        let v = verifier(2);
        let env = sign(&suite(), &key(), b"m", None, T0).unwrap();
        let signed_at = suite().counter_at(T0).unwrap();
        assert_eq!(v.verify(&env, T0 + 30).unwrap(), VerificationOutcome::Accept { counter: signed_at });
        assert_eq!(v.verify(&env, T0 + 31).unwrap().kind(), OutcomeKind::ReplayDetected);
        assert_eq!(v.verify(&env, T0 + 60).unwrap(), VerificationOutcome::InvalidMac);
    }

    #[test]
    fn forged_first_does_not_block_genuine() {
        let v = verifier(1);
        let genuine = sign(&suite(), &key(), b"m", None, T0).unwrap();
        let mut forged = genuine.clone();
        forged.mac = vec![0u8; 32];
        assert_eq!(v.verify(&forged, T0).unwrap(), VerificationOutcome::InvalidMac);
        assert!(!v.cache().contains(suite().counter_at(T0).unwrap(), &genuine.identifier));
        assert!(v.verify(&genuine, T0).unwrap().is_accept());
    }

    #[test]
    fn wrong_key_is_invalid_mac() {
        let other = SecretKey::new(b"attacker key".to_vec()).unwrap();
        let env = sign(&suite(), &other, b"m", None, T0).unwrap();
        assert_eq!(verifier(1).verify(&env, T0).unwrap(), VerificationOutcome::InvalidMac);
    }

    #[test]
    fn malformed_envelopes() {
        let v = verifier(1);
        let env = sign(&suite(), &key(), b"m", None, T0).unwrap();

        let mut short_mac = env.clone();
        short_mac.mac.pop();
        let mut short_id = env.clone();
        short_id.identifier.truncate(7);
        let mut other_suite = env.clone();
        other_suite.suite_name = "TMAC-SHA1".into();
        let mut garbage_suite = env.clone();
        garbage_suite.suite_name = "nonsense".into();

        for bad in [short_mac, short_id, other_suite, garbage_suite] {
            assert_eq!(v.verify(&bad, T0).unwrap(), VerificationOutcome::MalformedEnvelope);
        }
        // The short form names the same suite.
        let mut short_name = env;
        short_name.suite_name = "TMAC-SHA256".into();
        assert!(v.verify(&short_name, T0).unwrap().is_accept());
    }

    #[test]
    fn window_bounds() {
        assert!(IdentifierCache::new(TimeParams::unix_default(), 0).is_err());
        assert!(IdentifierCache::new(TimeParams::unix_default(), 5).is_err());
        assert!(IdentifierCache::new(TimeParams::unix_default(), 4).is_ok());
    }

    #[test]
    fn cache_params_must_match_suite() {
        let cache = IdentifierCache::new(TimeParams::new(0, 60).unwrap(), 1).unwrap();
        let env = sign(&suite(), &key(), b"m", None, T0).unwrap();
        assert!(matches!(verify(&cache, &suite(), &key(), &env, T0), Err(Error::StateMismatch(_))));
    }

    #[test]
    fn flush_examples() {
        let params = TimeParams::unix_default();
        let id = b"someidentifier";

        let cache = IdentifierCache::new(params, 1).unwrap();
        cache.check_and_insert(TimeCounter(5), id);
        assert_eq!(flush_expired(&cache, 5 * 30 + 3), 0);
        assert_eq!(flush_expired(&cache, 6 * 30), 1);
        assert_eq!(cache.window_count(), 0);

        let cache = IdentifierCache::new(params, 2).unwrap();
        cache.check_and_insert(TimeCounter(5), id);
        cache.check_and_insert(TimeCounter(6), id);
        assert_eq!(flush_expired(&cache, 7 * 30), 1);
        assert!(!cache.contains(TimeCounter(5), id));
        assert!(cache.contains(TimeCounter(6), id));
    }

    #[test]
    fn check_and_insert_once() {
        let cache = IdentifierCache::new(TimeParams::unix_default(), 1).unwrap();
        assert!(cache.check_and_insert(TimeCounter(1), b"abcdefgh"));
        assert!(!cache.check_and_insert(TimeCounter(1), b"abcdefgh"));
        assert!(cache.check_and_insert(TimeCounter(2), b"abcdefgh"));
    }

    #[test]
    fn snapshot_restore() {
        let cache = IdentifierCache::new(TimeParams::unix_default(), 2).unwrap();
        cache.check_and_insert(TimeCounter(9), b"bbbbbbbb");
        cache.check_and_insert(TimeCounter(9), b"aaaaaaaa");
        cache.check_and_insert(TimeCounter(10), b"cccccccc");
        let snap = cache.snapshot();
        assert_eq!(snap[0], (TimeCounter(9), vec![b"aaaaaaaa".to_vec(), b"bbbbbbbb".to_vec()]));
        let other = IdentifierCache::new(TimeParams::unix_default(), 2).unwrap();
        other.restore(snap.clone());
        assert_eq!(other.snapshot(), snap);
    }

    #[test]
    fn assigned_identifier_mode() {
        let registry = Arc::new(AssignedRegistry::new());
        let alice = SenderId::from("alice");
        let s1 = b"assigned-id-0001".to_vec();
        let s2 = b"assigned-id-0002".to_vec();
        assign_identifiers(&registry, &alice, [s1.clone()]).unwrap();
        let v = verifier(1).with_registry(registry.clone());

        let unassigned = sign(&suite(), &key(), b"m", Some(&s2), T0).unwrap();
        assert_eq!(v.verify_from(&alice, &unassigned, T0).unwrap(), VerificationOutcome::IdentifierNotAssigned);

        let first = sign(&suite(), &key(), b"one", Some(&s1), T0).unwrap();
        let second = sign(&suite(), &key(), b"two", Some(&s1), T0).unwrap();
        assert!(v.verify_from(&alice, &first, T0).unwrap().is_accept());
        assert_eq!(v.verify_from(&alice, &second, T0).unwrap().kind(), OutcomeKind::ReplayDetected);

        // Identifiers become reusable once the counter moves on.
        let next = sign(&suite(), &key(), b"three", Some(&s1), T0 + 30).unwrap();
        assert!(v.verify_from(&alice, &next, T0 + 30).unwrap().is_accept());

        // Other senders cannot use alice's identifier.
        let bob = SenderId::from("bob");
        assert_eq!(v.verify_from(&bob, &next, T0 + 30).unwrap(), VerificationOutcome::IdentifierNotAssigned);
    }

    #[test]
    fn assignment_errors() {
        let registry = AssignedRegistry::new();
        let alice = SenderId::from("alice");
        let bob = SenderId::from("bob");
        let id = b"shared-identifier".to_vec();
        registry.assign_identifiers(&alice, [id.clone()]).unwrap();
        // Re-assigning to the same sender is a no-op.
        registry.assign_identifiers(&alice, [id.clone()]).unwrap();
        assert_eq!(
            registry.assign_identifiers(&bob, [id.clone()]),
            Err(Error::DuplicateAssignment("alice".into()))
        );
        assert!(matches!(
            registry.assign_identifiers(&bob, [b"dup-dup-dup".to_vec(), b"dup-dup-dup".to_vec()]),
            Err(Error::DuplicateAssignment(_))
        ));
        assert!(matches!(registry.assign_identifiers(&bob, [b"short".to_vec()]), Err(Error::WeakIdentifier { .. })));
        assert!(!registry.is_assigned(&bob, &id));
    }
}
