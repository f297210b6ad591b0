//! Deterministic in-process channel between a sender, an adversary and a
//! recipient, driven by a scripted clock.
//!
//! Envelopes are numbered in the order the sender puts them on the wire. An
//! envelope is signed the first time any event refers to it, at the clock's
//! time at that moment, and from then on the adversary has a copy. This lets
//! a scenario model an adversary who acts on an envelope while the genuine
//! copy is still in flight.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Barrier, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::hmac::SecretKey;
use crate::replay::{random_identifier, sign_with_identifier, Envelope, OutcomeKind, VerificationOutcome, Verifier};
use crate::suite::{parse_suite_name, TmacSuite};
use crate::totp::ClockSource;

pub mod live;

/// Default start time for scenarios: a fixed instant well after the epoch.
pub const DEFAULT_START: u64 = 1_700_000_000;

/// Test clock. Time only moves forward, either explicitly or by stepping
/// through a script of future instants.
#[derive(Debug)]
pub struct SimClock {
    current: AtomicU64,
    script: Mutex<VecDeque<u64>>,
}

impl SimClock {
    pub fn new(start: u64) -> Self {
        SimClock { current: AtomicU64::new(start), script: Mutex::new(VecDeque::new()) }
    }

    /// A clock starting at `start` that [`SimClock::step`] moves through `script`.
    pub fn with_script(start: u64, script: impl IntoIterator<Item = u64>) -> Result<Self> {
        let script: VecDeque<u64> = script.into_iter().collect();
        let mut prev = start;
        for &t in &script {
            if t < prev {
                return Err(Error::ClockRegression { current: prev, requested: t });
            }
            prev = t;
        }
        Ok(SimClock { current: AtomicU64::new(start), script: Mutex::new(script) })
    }

    /// Moves to the next scripted instant, if any.
    pub fn step(&self) -> Option<u64> {
        let next = self.script.lock().unwrap_or_else(|p| p.into_inner()).pop_front()?;
        self.current.fetch_max(next, Ordering::SeqCst);
        Some(next)
    }

    pub fn advance(&self, secs: u64) -> u64 {
        self.current.fetch_add(secs, Ordering::SeqCst) + secs
    }

    pub fn set(&self, t: u64) -> Result<()> {
        self.current
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |cur| (t >= cur).then_some(t))
            .map(|_| ())
            .map_err(|cur| Error::ClockRegression { current: cur, requested: t })
    }
}

impl ClockSource for SimClock {
    fn now(&self) -> u64 {
        self.current.load(Ordering::SeqCst)
    }
}

/// Part of an envelope the adversary flips bits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeField {
    Message,
    Identifier,
    Mac,
}

impl EnvelopeField {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "message" => Some(EnvelopeField::Message),
            "identifier" => Some(EnvelopeField::Identifier),
            "mac" => Some(EnvelopeField::Mac),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            EnvelopeField::Message => "message",
            EnvelopeField::Identifier => "identifier",
            EnvelopeField::Mac => "mac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delay {
    Until(u64),
    For(u64),
}

/// One step of a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelEvent {
    /// The genuine envelope reaches the recipient.
    Deliver(usize),
    /// The adversary resends a recorded envelope unchanged.
    Replay(usize),
    /// The adversary xors `mask` into one byte of a recorded envelope.
    Tamper { envelope: usize, field: EnvelopeField, position: usize, mask: u8 },
    /// The adversary sends the recorded message under its own MAC, keeping
    /// the recorded identifier or substituting `identifier`.
    Forge { envelope: usize, identifier: Option<Vec<u8>> },
    /// Time passes; nothing is delivered.
    Delay(Delay),
}

impl ChannelEvent {
    fn delivers(&self) -> bool {
        !matches!(self, ChannelEvent::Delay(_))
    }
}

impl fmt::Display for ChannelEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelEvent::Deliver(i) => write!(f, "deliver {i}"),
            ChannelEvent::Replay(i) => write!(f, "replay {i}"),
            ChannelEvent::Tamper { envelope, field, position, mask } => {
                write!(f, "tamper {envelope} {} {position} 0x{mask:02x}", field.name())
            }
            ChannelEvent::Forge { envelope, identifier: None } => write!(f, "forge {envelope}"),
            ChannelEvent::Forge { envelope, identifier: Some(id) } => {
                write!(f, "forge {envelope} {}", hex::encode(id))
            }
            ChannelEvent::Delay(Delay::For(secs)) => write!(f, "delay +{secs}"),
            ChannelEvent::Delay(Delay::Until(t)) => write!(f, "delay {t}"),
        }
    }
}

/// A scripted run: events, the expected outcome of each delivering event,
/// and the verifier configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub suite: Option<TmacSuite>,
    pub start: u64,
    pub window: u64,
    pub seed: u64,
    pub events: Vec<ChannelEvent>,
    pub expected: Vec<OutcomeKind>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario { suite: None, start: DEFAULT_START, window: 1, seed: 0, events: Vec::new(), expected: Vec::new() }
    }
}

impl Scenario {
    pub fn new(events: Vec<ChannelEvent>, expected: Vec<OutcomeKind>) -> Self {
        Scenario { events, expected, ..Default::default() }
    }

    /// Parses the line-oriented scenario format:
    ///
    /// ```text
    /// # comment
    /// suite TMAC-SHA256-UNIX-30
    /// start 1700000000
    /// window 1
    /// seed 7
    /// deliver 0
    /// replay 0
    /// tamper 0 mac 3 0x01
    /// forge 0 [identifier-hex]
    /// delay +31            # or an absolute timestamp: delay 1700000100
    /// expect Accept ReplayDetected InvalidMac
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut scenario = Scenario::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::MalformedScenario(format!("line {}: {msg}", idx + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<u64> { s.parse::<u64>().map_err(|_| err(&format!("bad number {s:?}"))) };
            let index = |s: &str| -> Result<usize> { s.parse::<usize>().map_err(|_| err(&format!("bad envelope index {s:?}"))) };

            match fields.as_slice() {
                ["suite", name] => scenario.suite = Some(parse_suite_name(name).map_err(|e| err(&e.to_string()))?),
                ["start", t] => scenario.start = num(t)?,
                ["window", w] => scenario.window = num(w)?,
                ["seed", s] => scenario.seed = num(s)?,
                ["deliver", i] => scenario.events.push(ChannelEvent::Deliver(index(i)?)),
                ["replay", i] => scenario.events.push(ChannelEvent::Replay(index(i)?)),
                ["tamper", i, field, pos, mask] => {
                    let field = EnvelopeField::parse(field).ok_or_else(|| err("field must be message, identifier or mac"))?;
                    let mask = mask
                        .strip_prefix("0x")
                        .and_then(|h| u8::from_str_radix(h, 16).ok())
                        .ok_or_else(|| err("mask must be a hex byte like 0x01"))?;
                    scenario.events.push(ChannelEvent::Tamper { envelope: index(i)?, field, position: index(pos)?, mask });
                }
                ["forge", i] => scenario.events.push(ChannelEvent::Forge { envelope: index(i)?, identifier: None }),
                ["forge", i, id] => {
                    let id = hex::decode(id).map_err(|_| err("identifier must be hex"))?;
                    scenario.events.push(ChannelEvent::Forge { envelope: index(i)?, identifier: Some(id) });
                }
                ["delay", t] => {
                    let delay = match t.strip_prefix('+') {
                        Some(secs) => Delay::For(num(secs)?),
                        None => Delay::Until(num(t)?),
                    };
                    scenario.events.push(ChannelEvent::Delay(delay));
                }
                ["expect", outcomes @ ..] if !outcomes.is_empty() => {
                    for name in outcomes {
                        let name = name.trim_end_matches(',');
                        scenario.expected.push(name.parse().map_err(|_| err(&format!("unknown outcome {name:?}")))?);
                    }
                }
                _ => return Err(err(&format!("unrecognised directive {line:?}"))),
            }
        }
        Ok(scenario)
    }
}

/// One executed event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub event: ChannelEvent,
    pub time: u64,
    /// `None` for events that deliver nothing.
    pub outcome: Option<VerificationOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioResult {
    pub transcript: Vec<TranscriptEntry>,
    pub expected: Vec<OutcomeKind>,
}

impl ScenarioResult {
    /// Outcomes of the delivering events, in order.
    pub fn outcomes(&self) -> Vec<OutcomeKind> {
        self.transcript.iter().filter_map(|e| e.outcome.map(|o| o.kind())).collect()
    }

    pub fn passed(&self) -> bool {
        self.outcomes() == self.expected
    }

    /// Comma-separated outcome names, e.g. `Accept, ReplayDetected`.
    pub fn summary(&self) -> String {
        self.outcomes().iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

/// Holds the key; produces numbered envelopes.
struct Sender<'a> {
    suite: TmacSuite,
    key: &'a SecretKey,
    rng: ChaCha20Rng,
}

impl Sender<'_> {
    fn send(&mut self, index: usize, now: u64) -> Result<Envelope> {
        let identifier = random_identifier(&mut self.rng);
        sign_with_identifier(&self.suite, self.key, format!("message {index}").as_bytes(), identifier, now)
    }
}

/// Sees every envelope on the wire. Has no access to the master key.
pub struct Adversary {
    observed: Vec<Envelope>,
    rng: ChaCha20Rng,
}

impl Adversary {
    pub fn new(seed: u64) -> Self {
        Adversary { observed: Vec::new(), rng: ChaCha20Rng::seed_from_u64(seed ^ 0xAD7E_5A41) }
    }

    pub fn observe(&mut self, env: &Envelope) {
        self.observed.push(env.clone());
    }

    pub fn observed(&self) -> &[Envelope] {
        &self.observed
    }

    fn recorded(&self, index: usize) -> Result<&Envelope> {
        self.observed
            .get(index)
            .ok_or_else(|| Error::MalformedScenario(format!("envelope {index} was never observed")))
    }

    pub fn replay(&self, index: usize) -> Result<Envelope> {
        self.recorded(index).cloned()
    }

    pub fn tamper(&self, index: usize, field: EnvelopeField, position: usize, mask: u8) -> Result<Envelope> {
        if mask == 0 {
            return Err(Error::MalformedScenario("tamper mask must be non-zero".into()));
        }
        let mut env = self.recorded(index)?.clone();
        let bytes = match field {
            EnvelopeField::Message => &mut env.message,
            EnvelopeField::Identifier => &mut env.identifier,
            EnvelopeField::Mac => &mut env.mac,
        };
        let len = bytes.len();
        let byte = bytes.get_mut(position).ok_or_else(|| {
            Error::MalformedScenario(format!("tamper position {position} outside the {len}-byte {}", field.name()))
        })?;
        *byte ^= mask;
        Ok(env)
    }

    /// Builds the intermediate signature correctly (it needs no secret) and
    /// then signs it with a key of the adversary's own choosing.
    pub fn forge(&mut self, index: usize, suite: &TmacSuite, identifier: Option<Vec<u8>>, now: u64) -> Result<Envelope> {
        let recorded = self.recorded(index)?.clone();
        let mut guess = vec![0u8; 32];
        self.rng.fill_bytes(&mut guess);
        let guess = SecretKey::new(guess)?;
        let identifier = identifier.unwrap_or(recorded.identifier);
        let mut env = sign_with_identifier(suite, &guess, &recorded.message, identifier, now)?;
        env.suite_name = recorded.suite_name;
        Ok(env)
    }
}

/// Executes `scenario` against one verifier, with time taken from `clock`.
pub fn run_scenario(suite: &TmacSuite, key: &SecretKey, scenario: &Scenario, clock: &SimClock) -> Result<ScenarioResult> {
    let verifier = Verifier::new(*suite, key.clone(), scenario.window)?;
    let mut sender = Sender { suite: *suite, key, rng: ChaCha20Rng::seed_from_u64(scenario.seed) };
    let mut adversary = Adversary::new(scenario.seed);
    let mut transcript = Vec::with_capacity(scenario.events.len());

    for event in &scenario.events {
        let now = clock.now();
        // A first reference puts the envelope on the wire.
        let referenced = match event {
            ChannelEvent::Deliver(i) | ChannelEvent::Tamper { envelope: i, .. } | ChannelEvent::Forge { envelope: i, .. } => Some(*i),
            ChannelEvent::Replay(_) | ChannelEvent::Delay(_) => None,
        };
        if let Some(i) = referenced {
            let sent = adversary.observed().len();
            if i == sent {
                let env = sender.send(i, now)?;
                adversary.observe(&env);
            } else if i > sent {
                return Err(Error::MalformedScenario(format!(
                    "envelope {i} referenced before envelope {sent} was sent"
                )));
            }
        }

        let delivered = match event {
            ChannelEvent::Deliver(i) => Some(adversary.replay(*i)?),
            ChannelEvent::Replay(i) => Some(adversary.replay(*i)?),
            ChannelEvent::Tamper { envelope, field, position, mask } => {
                Some(adversary.tamper(*envelope, *field, *position, *mask)?)
            }
            ChannelEvent::Forge { envelope, identifier } => Some(adversary.forge(*envelope, suite, identifier.clone(), now)?),
            ChannelEvent::Delay(Delay::For(secs)) => {
                clock.advance(*secs);
                None
            }
            ChannelEvent::Delay(Delay::Until(t)) => {
                clock.set(*t)?;
                None
            }
        };
        debug_assert_eq!(delivered.is_some(), event.delivers());

        let outcome = delivered.map(|env| verifier.verify(&env, now)).transpose()?;
        transcript.push(TranscriptEntry { event: event.clone(), time: now, outcome });
    }

    Ok(ScenarioResult { transcript, expected: scenario.expected.clone() })
}

/// Counts of each outcome kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutcomeCounts(pub BTreeMap<OutcomeKind, usize>);

impl OutcomeCounts {
    pub fn get(&self, kind: OutcomeKind) -> usize {
        self.0.get(&kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

impl fmt::Display for OutcomeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, n)| format!("{k}: {n}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Verifies the same envelope from `parallelism` threads at once against a
/// fresh verifier and tallies the outcomes.
pub fn run_race_scenario(
    suite: &TmacSuite,
    key: &SecretKey,
    envelope: &Envelope,
    parallelism: usize,
    now: u64,
) -> Result<OutcomeCounts> {
    if parallelism == 0 {
        return Err(Error::DomainError("parallelism must be at least 1".into()));
    }
    let verifier = Verifier::new(*suite, key.clone(), 1)?;
    let start = Barrier::new(parallelism);
    let outcomes: Vec<Result<VerificationOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..parallelism)
            .map(|_| {
                scope.spawn(|| {
                    start.wait();
                    verifier.verify(envelope, now)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("verifier thread panicked")).collect()
    });

    let mut counts = OutcomeCounts::default();
    for outcome in outcomes {
        *counts.0.entry(outcome?.kind()).or_default() += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use OutcomeKind::*;

    fn key() -> SecretKey {
        SecretKey::new(b"simulation master key".to_vec()).unwrap()
    }

    fn run(text: &str) -> ScenarioResult {
        let scenario = Scenario::parse(text).unwrap();
        let clock = SimClock::new(scenario.start);
        run_scenario(&TmacSuite::sha256(), &key(), &scenario, &clock).unwrap()
    }

    #[test]
    fn clock_never_goes_back() {
        let clock = SimClock::new(100);
        assert_eq!(clock.advance(5), 105);
        assert!(clock.set(104).is_err());
        clock.set(200).unwrap();
        assert_eq!(clock.now(), 200);
        assert!(SimClock::with_script(10, [20, 15]).is_err());
        let scripted = SimClock::with_script(10, [20, 40]).unwrap();
        assert_eq!(scripted.step(), Some(20));
        assert_eq!(scripted.step(), Some(40));
        assert_eq!(scripted.step(), None);
        assert_eq!(scripted.now(), 40);
    }

    #[test]
    fn replay_within_window() {
        let r = run("deliver 0\nreplay 0\nexpect Accept ReplayDetected");
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.summary(), "Accept, ReplayDetected");
    }

    #[test]
    fn replay_after_window() {
        let r = run("deliver 0\ndelay +30\nreplay 0\nexpect Accept InvalidMac");
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.transcript.len(), 3);
        assert_eq!(r.transcript[1].outcome, None);
    }

    #[test]
    fn forged_identifier_first() {
        let r = run("forge 0\ndeliver 0\nexpect InvalidMac Accept");
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn forged_fresh_identifier() {
        let r = run("deliver 0\nforge 0 00112233445566778899\nexpect Accept InvalidMac");
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn tamper_each_field() {
        let r = run("tamper 0 message 0 0x01\ntamper 0 identifier 3 0x80\ntamper 0 mac 31 0xff\ndeliver 0\nexpect InvalidMac InvalidMac InvalidMac Accept");
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn failed_expectation_reports_failure() {
        let r = run("deliver 0\nreplay 0\nexpect Accept Accept");
        assert!(!r.passed());
    }

    #[test]
    fn wider_window_scenario() {
        let r = run("window 2\ndeliver 0\ndelay +30\nreplay 0\ndelay +30\nreplay 0\nexpect Accept ReplayDetected InvalidMac");
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn transcripts_are_deterministic() {
        let text = "seed 3\ndeliver 0\ndeliver 1\nreplay 0\nforge 1\ndelay +45\nreplay 1";
        assert_eq!(run(text), run(text));
    }

    #[test]
    fn malformed_scenarios() {
        for bad in ["deliver x", "tamper 0 header 0 0x01", "tamper 0 mac 0 1", "expect Maybe", "bogus", "delay +x", "forge 0 zz"] {
            assert!(matches!(Scenario::parse(bad), Err(Error::MalformedScenario(_))), "{bad}");
        }
        let run_err = |text: &str| {
            let scenario = Scenario::parse(text).unwrap();
            run_scenario(&TmacSuite::sha256(), &key(), &scenario, &SimClock::new(scenario.start)).unwrap_err()
        };
        assert!(matches!(run_err("replay 0"), Error::MalformedScenario(_)));
        assert!(matches!(run_err("deliver 1"), Error::MalformedScenario(_)));
        assert!(matches!(run_err("tamper 0 mac 99 0x01"), Error::MalformedScenario(_)));
        assert!(matches!(run_err("tamper 0 mac 0 0x00"), Error::MalformedScenario(_)));
        assert!(matches!(run_err("delay 5"), Error::ClockRegression { .. }));
    }

    #[test]
    fn parse_directives() {
        let s = Scenario::parse("suite TMAC-SHA1\nstart 60\nwindow 3\nseed 9\n# note\ndelay 90 # trailing\nexpect Accept, ReplayDetected").unwrap();
        assert_eq!(s.suite.unwrap().canonical_name(), "TMAC-SHA1-UNIX-30");
        assert_eq!((s.start, s.window, s.seed), (60, 3, 9));
        assert_eq!(s.events, vec![ChannelEvent::Delay(Delay::Until(90))]);
        assert_eq!(s.expected, vec![Accept, ReplayDetected]);
    }

    #[test]
    fn event_display_parses_back() {
        let events = vec![
            ChannelEvent::Deliver(0),
            ChannelEvent::Replay(0),
            ChannelEvent::Tamper { envelope: 0, field: EnvelopeField::Mac, position: 2, mask: 0x10 },
            ChannelEvent::Forge { envelope: 0, identifier: Some(vec![1; 8]) },
            ChannelEvent::Forge { envelope: 0, identifier: None },
            ChannelEvent::Delay(Delay::For(31)),
            ChannelEvent::Delay(Delay::Until(1_800_000_000)),
        ];
        let text: String = events.iter().map(|e| format!("{e}\n")).collect();
        assert_eq!(Scenario::parse(&text).unwrap().events, events);
    }

    #[test]
    fn race_small() {
        let env = crate::replay::sign(&TmacSuite::sha256(), &key(), b"m", None, DEFAULT_START).unwrap();
        let one = run_race_scenario(&TmacSuite::sha256(), &key(), &env, 1, DEFAULT_START).unwrap();
        assert_eq!(one.get(Accept), 1);
        assert_eq!(one.total(), 1);
        let two = run_race_scenario(&TmacSuite::sha256(), &key(), &env, 2, DEFAULT_START).unwrap();
        assert_eq!((two.get(Accept), two.get(ReplayDetected)), (1, 1));
        assert!(run_race_scenario(&TmacSuite::sha256(), &key(), &env, 0, DEFAULT_START).is_err());
    }
}
