use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, Read, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use rand::rngs::OsRng;
use rand::RngCore;
use thiserror::Error;
use tmac::attack::{attack_cost as cost, empirical_collision_trials, window_invalidates_attack, BIRTHDAY_CONSTANT};
use tmac::sim::live::{iso8601, run_adversary, run_sender, AdversaryRelay, DatagramRecipient, DatagramSender};
use tmac::sim::{run_race_scenario, run_scenario, Scenario, SimClock};
use tmac::state::{StateLock, VerifierState};
use tmac::totp::FixedClock;
use tmac::{
    parse_suite_name, sign as sign_envelope, wire, AssignedRegistry, ClockSource, Error, OutcomeKind, SecretKey,
    SenderId, SystemClock, TimeCounter, TmacSuite, Verifier,
};

pub const MIN_KEY_LEN: usize = 16;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_REPLAY_DETECTED: u8 = 10;
pub const EXIT_INVALID_MAC: u8 = 11;
pub const EXIT_IDENTIFIER_NOT_ASSIGNED: u8 = 12;
pub const EXIT_MALFORMED_ENVELOPE: u8 = 13;

/// Sender name used for assigned identifiers given on the command line.
const CLI_SENDER: &str = "cli";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Tmac(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Tmac(e.into())
    }
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Tmac(e) => e.name(),
            CliError::Usage(_) => "UsageError",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Tmac(_) => EXIT_ERROR,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn outcome_exit_code(kind: OutcomeKind) -> u8 {
    match kind {
        OutcomeKind::Accept => EXIT_OK,
        OutcomeKind::ReplayDetected => EXIT_REPLAY_DETECTED,
        OutcomeKind::InvalidMac => EXIT_INVALID_MAC,
        OutcomeKind::IdentifierNotAssigned => EXIT_IDENTIFIER_NOT_ASSIGNED,
        OutcomeKind::MalformedEnvelope => EXIT_MALFORMED_ENVELOPE,
    }
}

fn read_key(path: &Path) -> Result<SecretKey> {
    Ok(SecretKey::new(fs::read(path)?)?)
}

fn random_key() -> SecretKey {
    let mut bytes = vec![0u8; 32];
    OsRng.fill_bytes(&mut bytes);
    SecretKey::new(bytes).expect("non-empty")
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        Some(path) => Ok(fs::read(path)?),
        None => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf)?;
            Ok(buf)
        }
    }
}

fn now_or(at: Option<u64>) -> u64 {
    at.unwrap_or_else(|| SystemClock.now())
}

fn parse_hex(what: &str, s: &str) -> Result<Vec<u8>> {
    hex::decode(s.trim()).map_err(|e| CliError::Usage(format!("{what} is not valid hex: {e}")))
}

pub fn keygen(out: &Path, bytes: usize, force: bool) -> Result<u8> {
    if bytes < MIN_KEY_LEN {
        return Err(Error::WeakKeyLength { len: bytes, min: MIN_KEY_LEN }.into());
    }
    let mut key = vec![0u8; bytes];
    OsRng.fill_bytes(&mut key);
    let key = SecretKey::new(key)?;

    let mut options = OpenOptions::new();
    options.write(true);
    if force {
        options.create(true).truncate(true);
    } else {
        options.create_new(true);
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(out)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        file.set_permissions(fs::Permissions::from_mode(0o600))?;
    }
    file.write_all(key.as_bytes())?;
    file.sync_all()?;
    eprintln!("wrote {bytes}-byte key to {}", out.display());
    Ok(EXIT_OK)
}

pub fn sign(
    key: &Path,
    suite: &str,
    input: Option<&Path>,
    identifier: &str,
    output: Option<&Path>,
    at: Option<u64>,
) -> Result<u8> {
    let suite = parse_suite_name(suite)?;
    let key = read_key(key)?;
    let identifier = match identifier {
        "random" => None,
        hex => Some(parse_hex("identifier", hex)?),
    };
    let message = read_input(input)?;
    let env = sign_envelope(&suite, &key, &message, identifier.as_deref(), now_or(at))?;
    let bytes = wire::encode(&env)?;
    match output {
        Some(path) => fs::write(path, &bytes)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    eprintln!("identifier: {}", env.identifier_hex());
    Ok(EXIT_OK)
}

pub struct VerifyArgs<'a> {
    pub key: &'a Path,
    pub suite: &'a str,
    pub input: Option<&'a Path>,
    pub state: Option<&'a Path>,
    pub window: u64,
    pub assigned_ids: Option<&'a Path>,
    pub at: Option<u64>,
}

fn read_assigned(path: &Path) -> Result<Vec<Vec<u8>>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_hex("assigned identifier", l))
        .collect()
}

pub fn verify(args: VerifyArgs<'_>) -> Result<u8> {
    let suite = parse_suite_name(args.suite)?;
    let key = read_key(args.key)?;
    let mut verifier = Verifier::new(suite, key, args.window)?;
    if let Some(path) = args.assigned_ids {
        let registry = AssignedRegistry::new();
        registry.assign_identifiers(&SenderId(CLI_SENDER.into()), read_assigned(path)?)?;
        verifier = verifier.with_registry(Arc::new(registry));
    }
    let bytes = read_input(args.input)?;
    let now = now_or(args.at);

    let kind = match wire::decode(&bytes) {
        Err(_) => OutcomeKind::MalformedEnvelope,
        Ok(env) => {
            let _lock = args.state.map(StateLock::acquire).transpose()?;
            if let Some(path) = args.state {
                if let Some(state) = VerifierState::load(path)? {
                    state.apply(&verifier)?;
                }
            }
            let outcome = verifier.verify_from(&SenderId(CLI_SENDER.into()), &env, now)?;
            if let Some(path) = args.state {
                VerifierState::capture(&verifier, now)?.save_atomic(path)?;
            }
            outcome.kind()
        }
    };
    println!("{kind}");
    Ok(outcome_exit_code(kind))
}

pub fn attack_cost(bits: u32, hashrate: f64, probability: f64) -> Result<u8> {
    println!("{}", cost(bits, hashrate, probability)?);
    Ok(EXIT_OK)
}

pub fn attack_sim(
    key: Option<&Path>,
    suite: &str,
    bits: u32,
    runs: usize,
    seed: u64,
    corpus: usize,
    at: Option<u64>,
) -> Result<u8> {
    let suite = parse_suite_name(suite)?;
    let key = match key {
        Some(path) => read_key(path)?,
        None => random_key(),
    };
    let now = now_or(at);
    let report = empirical_collision_trials(&suite, &key, bits, runs, seed, &FixedClock(now))?;
    let bound = report.birthday_bound();
    println!("{:<28}{}", "suite", suite);
    println!("{:<28}{}", "truncated bits (c)", bits);
    println!("{:<28}{}", "runs", runs);
    println!("{:<28}{}", "seed", seed);
    println!("{:<28}{:.2}", "mean trials", report.mean());
    println!("{:<28}{:.1}", "median trials", report.median());
    println!("{:<28}{:.2}", format!("{BIRTHDAY_CONSTANT} * 2^(c/2)"), bound);
    println!("{:<28}{:.4}", "mean / bound", report.mean() / bound);

    let current = suite.counter_at(now)?;
    let next = TimeCounter(current.0.checked_add(1).ok_or(Error::CounterOverflow)?);
    let clock = SimClock::with_script(now, [suite.time_params().window_start(next)?])?;
    let rollover = window_invalidates_attack(&suite, &key, bits, corpus, seed, &clock)?;
    println!();
    println!("{:<28}{}", "corpus collected at counter", rollover.collected_at);
    println!("{:<28}{}", "re-checked at counter", rollover.revalidated_at);
    println!("{:<28}{}/{}", "full-width MACs still valid", rollover.full_width_valid, rollover.corpus_size);
    println!("{:<28}{}/{}", "truncated tags still match", rollover.truncated_valid, rollover.corpus_size);
    Ok(EXIT_OK)
}

pub fn demo_sender(key: &Path, suite: &str, peer: &str, bind: &str, interval: u64, messages: Vec<String>) -> Result<u8> {
    let suite = parse_suite_name(suite)?;
    let sender = DatagramSender::bind(bind, peer, suite, read_key(key)?)?;
    let messages: Vec<Vec<u8>> = if messages.is_empty() {
        io::stdin().lock().lines().map(|l| l.map(String::into_bytes)).collect::<io::Result<_>>()?
    } else {
        messages.into_iter().map(String::into_bytes).collect()
    };
    let total = messages.len();
    let sent = run_sender(&sender, messages, Duration::from_millis(interval), &SystemClock, &mut io::stdout());
    Ok(if sent == total { EXIT_OK } else { EXIT_ERROR })
}

pub fn demo_recipient(
    key: &Path,
    suite: &str,
    listen: &str,
    window: u64,
    limit: Option<usize>,
    idle: Option<u64>,
) -> Result<u8> {
    let suite = parse_suite_name(suite)?;
    let verifier = Verifier::new(suite, read_key(key)?, window)?;
    let recipient = DatagramRecipient::bind(listen, verifier)?;
    eprintln!("listening on {}", recipient.local_addr()?);
    recipient.run(&SystemClock, &mut io::stdout(), limit, idle.map(Duration::from_secs))?;
    Ok(EXIT_OK)
}

pub fn demo_adversary(listen: &str, recipient: &str, capture: usize, replay_delay: u64, idle: Option<u64>) -> Result<u8> {
    let mut relay = AdversaryRelay::bind(listen, recipient)?;
    eprintln!("relaying on {}", relay.local_addr()?);
    let replayed = run_adversary(&mut relay, capture, idle.map(Duration::from_secs), Duration::from_secs(replay_delay))?;
    let now = SystemClock.now();
    println!("{} relayed {}", iso8601(now), relay.recorded().len());
    println!("{} replayed {replayed}", iso8601(now));
    Ok(EXIT_OK)
}

pub fn demo_scenario(file: &Path, key: Option<&Path>, suite: &str) -> Result<u8> {
    let scenario = Scenario::parse(&fs::read_to_string(file)?)?;
    let key = match key {
        Some(path) => read_key(path)?,
        None => random_key(),
    };
    let suite = match scenario.suite {
        Some(suite) => suite,
        None => parse_suite_name(suite)?,
    };
    let clock = SimClock::new(scenario.start);
    let result = run_scenario(&suite, &key, &scenario, &clock)?;

    for entry in &result.transcript {
        let outcome = entry.outcome.map_or_else(|| "-".to_string(), |o| o.kind().to_string());
        println!("{} {:<28} {outcome}", iso8601(entry.time), entry.event.to_string());
    }
    println!("transcript: {}", result.summary());
    if result.expected.is_empty() {
        println!("expected: (none)");
        return Ok(EXIT_OK);
    }
    let expected: Vec<&str> = result.expected.iter().map(|k| k.name()).collect();
    println!("expected: {}", expected.join(", "));
    if result.passed() {
        println!("PASS");
        Ok(EXIT_OK)
    } else {
        println!("FAIL");
        Ok(EXIT_ERROR)
    }
}

pub fn demo_race(parallelism: usize, repeat: usize, suite: &str) -> Result<u8> {
    let suite: TmacSuite = parse_suite_name(suite)?;
    let key = random_key();
    let now = SystemClock.now();
    let mut violations = 0;
    for run in 0..repeat {
        let env = sign_envelope(&suite, &key, format!("race {run}").as_bytes(), None, now)?;
        let counts = run_race_scenario(&suite, &key, &env, parallelism, now)?;
        let clean = counts.get(OutcomeKind::Accept) == 1
            && counts.get(OutcomeKind::ReplayDetected) == parallelism - 1;
        if !clean {
            violations += 1;
        }
        println!("run {run}: {counts}");
    }
    println!("violations: {violations}/{repeat}");
    Ok(if violations == 0 { EXIT_OK } else { EXIT_ERROR })
}
