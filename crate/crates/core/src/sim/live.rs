//! The same three parties over real UDP sockets, one envelope per datagram.
//!
//! The recipient writes one line per datagram: an ISO-8601 UTC time, the
//! outcome name and the identifier in lowercase hex (`-` when the datagram
//! could not be decoded).

use std::fmt;
use std::io::{self, Write};
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::error::{Error, Result};
use crate::hmac::SecretKey;
use crate::replay::{sign, Envelope, OutcomeKind, SenderId, Verifier};
use crate::suite::TmacSuite;
use crate::totp::ClockSource;
use crate::wire;

/// Ethernet MTU less IPv4 and UDP headers.
pub const DEFAULT_MAX_DATAGRAM: usize = 1472;

const RECV_BUFFER: usize = 65_536;

fn resolve(addr: impl ToSocketAddrs) -> Result<SocketAddr> {
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| Error::Io("address resolved to nothing".into()))
}

pub fn iso8601(unix_secs: u64) -> String {
    i64::try_from(unix_secs)
        .ok()
        .and_then(|s| DateTime::<Utc>::from_timestamp(s, 0))
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| unix_secs.to_string())
}

/// One recipient log record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub time: u64,
    pub outcome: OutcomeKind,
    pub identifier: Option<Vec<u8>>,
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = self.identifier.as_deref().map_or_else(|| "-".to_owned(), hex::encode);
        write!(f, "{} {} {}", iso8601(self.time), self.outcome, id)
    }
}

pub struct DatagramSender {
    socket: UdpSocket,
    peer: SocketAddr,
    suite: TmacSuite,
    key: SecretKey,
    max_datagram: usize,
}

impl DatagramSender {
    pub fn bind(bind: impl ToSocketAddrs, peer: impl ToSocketAddrs, suite: TmacSuite, key: SecretKey) -> Result<Self> {
        Ok(DatagramSender {
            socket: UdpSocket::bind(bind)?,
            peer: resolve(peer)?,
            suite,
            key,
            max_datagram: DEFAULT_MAX_DATAGRAM,
        })
    }

    pub fn with_max_datagram(mut self, max: usize) -> Self {
        self.max_datagram = max;
        self
    }

    /// Signs `msg` with a fresh identifier and sends it. Oversized envelopes
    /// are refused before anything is sent.
    pub fn send(&self, msg: &[u8], now: u64) -> Result<Envelope> {
        let env = sign(&self.suite, &self.key, msg, None, now)?;
        let bytes = wire::encode(&env)?;
        if bytes.len() > self.max_datagram {
            return Err(Error::EnvelopeTooLarge { len: bytes.len(), max: self.max_datagram });
        }
        self.socket.send_to(&bytes, self.peer)?;
        Ok(env)
    }
}

/// Sends each message in turn, pausing `interval` between them. Failures are
/// written to `log` and do not stop the loop. Returns the number sent.
pub fn run_sender<I>(sender: &DatagramSender, messages: I, interval: Duration, clock: &dyn ClockSource, log: &mut dyn Write) -> usize
where
    I: IntoIterator<Item = Vec<u8>>,
{
    let mut sent = 0;
    for (i, msg) in messages.into_iter().enumerate() {
        if i > 0 && !interval.is_zero() {
            thread::sleep(interval);
        }
        let now = clock.now();
        let _ = match sender.send(&msg, now) {
            Ok(env) => {
                sent += 1;
                writeln!(log, "{} sent {}", iso8601(now), env.identifier_hex())
            }
            Err(e) => writeln!(log, "{} error {}: {e}", iso8601(now), e.name()),
        };
    }
    sent
}

pub struct DatagramRecipient {
    socket: UdpSocket,
    verifier: Verifier,
}

impl DatagramRecipient {
    pub fn bind(addr: impl ToSocketAddrs, verifier: Verifier) -> Result<Self> {
        Ok(DatagramRecipient { socket: UdpSocket::bind(addr)?, verifier })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.socket.local_addr()?)
    }

    pub fn verifier(&self) -> &Verifier {
        &self.verifier
    }

    /// Verifies one datagram. The clock is read once, after the datagram arrives.
    pub fn handle(&self, datagram: &[u8], from: SocketAddr, clock: &dyn ClockSource) -> Result<LogRecord> {
        let now = clock.now();
        let record = match wire::decode(datagram) {
            Ok(env) => {
                let sender = SenderId(from.to_string());
                let outcome = self.verifier.verify_from(&sender, &env, now)?;
                LogRecord { time: now, outcome: outcome.kind(), identifier: Some(env.identifier) }
            }
            Err(_) => LogRecord { time: now, outcome: OutcomeKind::MalformedEnvelope, identifier: None },
        };
        Ok(record)
    }

    /// Receives until `limit` datagrams were handled or nothing arrives for
    /// `idle`. Transport errors are logged and the loop continues.
    pub fn run(
        &self,
        clock: &dyn ClockSource,
        log: &mut dyn Write,
        limit: Option<usize>,
        idle: Option<Duration>,
    ) -> Result<Vec<LogRecord>> {
        self.socket.set_read_timeout(idle)?;
        let mut buf = vec![0u8; RECV_BUFFER];
        let mut records = Vec::new();
        while limit.is_none_or(|n| records.len() < n) {
            let (len, from) = match self.socket.recv_from(&mut buf) {
                Ok(received) => received,
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => break,
                Err(e) => {
                    let _ = writeln!(log, "{} error IoError: {e}", iso8601(clock.now()));
                    continue;
                }
            };
            match self.handle(&buf[..len], from, clock) {
                Ok(record) => {
                    let _ = writeln!(log, "{record}");
                    let _ = log.flush();
                    records.push(record);
                }
                Err(e) => {
                    let _ = writeln!(log, "{} error {}: {e}", iso8601(clock.now()), e.name());
                }
            }
        }
        Ok(records)
    }
}

/// A man-in-the-middle that forwards traffic to the recipient, keeps a copy
/// of every datagram and can resend them later. It never holds a key.
pub struct AdversaryRelay {
    socket: UdpSocket,
    recipient: SocketAddr,
    recorded: Vec<Vec<u8>>,
}

impl AdversaryRelay {
    pub fn bind(listen: impl ToSocketAddrs, recipient: impl ToSocketAddrs) -> Result<Self> {
        Ok(AdversaryRelay { socket: UdpSocket::bind(listen)?, recipient: resolve(recipient)?, recorded: Vec::new() })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.socket.local_addr()?)
    }

    pub fn recorded(&self) -> &[Vec<u8>] {
        &self.recorded
    }

    /// Forwards and records up to `count` datagrams, stopping early after
    /// `idle` without traffic. Returns how many were relayed.
    pub fn relay(&mut self, count: usize, idle: Option<Duration>) -> Result<usize> {
        self.socket.set_read_timeout(idle)?;
        let mut buf = vec![0u8; RECV_BUFFER];
        let mut relayed = 0;
        while relayed < count {
            let len = match self.socket.recv_from(&mut buf) {
                Ok((len, _)) => len,
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => break,
                Err(e) => return Err(e.into()),
            };
            self.socket.send_to(&buf[..len], self.recipient)?;
            self.recorded.push(buf[..len].to_vec());
            relayed += 1;
        }
        Ok(relayed)
    }

    /// Resends every recorded datagram unchanged.
    pub fn replay_all(&self) -> Result<usize> {
        for datagram in &self.recorded {
            self.socket.send_to(datagram, self.recipient)?;
        }
        Ok(self.recorded.len())
    }
}

/// Relays `capture` datagrams, waits `replay_delay`, then replays them all.
pub fn run_adversary(relay: &mut AdversaryRelay, capture: usize, idle: Option<Duration>, replay_delay: Duration) -> Result<usize> {
    relay.relay(capture, idle)?;
    thread::sleep(replay_delay);
    relay.replay_all()
}
