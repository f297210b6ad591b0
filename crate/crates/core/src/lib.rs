//! Time-based message authentication codes (TMAC) and replay-resistant
//! envelopes.
//!
//! A TMAC is an HMAC keyed by a per-window key derived from a master secret
//! and the current time counter, so every MAC stops verifying when the
//! counter moves on. Envelopes add a per-message identifier which the
//! recipient remembers only for as long as the MAC it arrived with could
//! still verify.
//!
//! ```
//! use tmac::{sign, SecretKey, TmacSuite, Verifier, OutcomeKind};
//!
//! let suite: TmacSuite = "TMAC-SHA256-UNIX-30".parse().unwrap();
//! let key = SecretKey::new(b"shared secret".to_vec()).unwrap();
//! let now = 1_700_000_000;
//!
//! let envelope = sign(&suite, &key, b"launch at dawn", None, now).unwrap();
//! let recipient = Verifier::new(suite, key, 1).unwrap();
//! assert_eq!(recipient.verify(&envelope, now).unwrap().kind(), OutcomeKind::Accept);
//! assert_eq!(recipient.verify(&envelope, now).unwrap().kind(), OutcomeKind::ReplayDetected);
//! ```

pub mod attack;
pub mod error;
pub mod hmac;
pub mod replay;
pub mod sim;
pub mod state;
pub mod suite;
pub mod totp;
pub mod wire;

pub use error::{Error, Result};
pub use hmac::{digest, hmac, verify_mac_equal, HashAlgorithm, HashFunction, SecretKey};
pub use replay::{
    assign_identifiers, flush_expired, sign, verify, AssignedRegistry, Envelope, IdentifierCache, OutcomeKind,
    SenderId, VerificationOutcome, Verifier,
};
pub use suite::{format_suite_name, parse_suite_name, tmac, TmacSuite};
pub use totp::{time_counter, totp, ClockSource, SystemClock, TimeCounter, TimeParams};
