//! On-disk verifier state, so a restarted recipient still rejects replays of
//! envelopes it accepted earlier in the same window.
//!
//! ```text
//! "TMST" | version (1) | name_len (1) | suite name | window (1)
//!        | last counter (u64 BE) | window count (u16 BE)
//!        | per window: counter (u64 BE) | id count (u32 BE) | per id: len (u16 BE) | id
//!        | SHA-256 of everything above (32)
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hmac::{verify_mac_equal, HashAlgorithm, HashFunction};
use crate::replay::{Verifier, MAX_ACCEPTANCE_WINDOW};
use crate::totp::TimeCounter;

pub const STATE_MAGIC: &[u8; 4] = b"TMST";
pub const STATE_VERSION: u8 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierState {
    pub suite_name: String,
    pub window: u64,
    pub last_counter: TimeCounter,
    pub windows: Vec<(TimeCounter, Vec<Vec<u8>>)>,
}

impl VerifierState {
    /// Captures the verifier's cache as of `now`.
    pub fn capture(verifier: &Verifier, now: u64) -> Result<Self> {
        let current = verifier.suite().counter_at(now)?;
        verifier.cache().evict_before(verifier.cache().oldest_retained(current));
        let windows = verifier.cache().snapshot();
        let newest = windows.last().map_or(current, |(c, _)| (*c).max(current));
        Ok(VerifierState {
            suite_name: verifier.suite().canonical_name(),
            window: verifier.cache().window(),
            last_counter: newest,
            windows,
        })
    }

    /// Loads this state into `verifier`, which must use the same suite and window.
    pub fn apply(&self, verifier: &Verifier) -> Result<()> {
        let suite = verifier.suite().canonical_name();
        if self.suite_name != suite {
            return Err(Error::StateMismatch(format!("state is for {}, verifier uses {suite}", self.suite_name)));
        }
        if self.window != verifier.cache().window() {
            return Err(Error::StateMismatch(format!(
                "state window is {}, verifier window is {}",
                self.window,
                verifier.cache().window()
            )));
        }
        verifier.cache().restore(self.windows.iter().cloned());
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let invalid = |what: &str| Error::StateCorrupt(format!("{what} does not fit the state format"));
        let mut out = Vec::new();
        out.extend_from_slice(STATE_MAGIC);
        out.push(STATE_VERSION);
        out.push(u8::try_from(self.suite_name.len()).map_err(|_| invalid("suite name"))?);
        out.extend_from_slice(self.suite_name.as_bytes());
        out.push(u8::try_from(self.window).map_err(|_| invalid("window"))?);
        out.extend_from_slice(&self.last_counter.0.to_be_bytes());
        out.extend_from_slice(&u16::try_from(self.windows.len()).map_err(|_| invalid("window count"))?.to_be_bytes());
        for (counter, ids) in &self.windows {
            out.extend_from_slice(&counter.0.to_be_bytes());
            out.extend_from_slice(&u32::try_from(ids.len()).map_err(|_| invalid("identifier count"))?.to_be_bytes());
            for id in ids {
                out.extend_from_slice(&u16::try_from(id.len()).map_err(|_| invalid("identifier"))?.to_be_bytes());
                out.extend_from_slice(id);
            }
        }
        let checksum = HashAlgorithm::Sha256.digest(&out);
        out.extend_from_slice(&checksum);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let corrupt = |what: &str| Error::StateCorrupt(what.to_owned());

        if bytes.len() < CHECKSUM_LEN {
            return Err(corrupt("file too short"));
        }
        let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if !verify_mac_equal(&HashAlgorithm::Sha256.digest(body), checksum) {
            return Err(corrupt("checksum mismatch"));
        }

        let mut r = Cursor { buf: body };
        if r.take(4)? != STATE_MAGIC {
            return Err(corrupt("bad magic"));
        }
        if r.u8()? != STATE_VERSION {
            return Err(corrupt("unsupported version"));
        }
        let name_len = r.u8()? as usize;
        let suite_name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| corrupt("suite name is not UTF-8"))?
            .to_owned();
        let window = u64::from(r.u8()?);
        if !(1..=MAX_ACCEPTANCE_WINDOW).contains(&window) {
            return Err(corrupt("window out of range"));
        }
        let last_counter = TimeCounter(r.u64()?);
        let oldest = last_counter.0.saturating_sub(window - 1);

        let window_count = r.u16()?;
        let mut windows: Vec<(TimeCounter, Vec<Vec<u8>>)> = Vec::new();
        for _ in 0..window_count {
            let counter = TimeCounter(r.u64()?);
            if counter.0 < oldest || counter > last_counter {
                return Err(corrupt("counter outside the acceptance window"));
            }
            if windows.last().is_some_and(|(prev, _)| *prev >= counter) {
                return Err(corrupt("counters not strictly ascending"));
            }
            let id_count = r.u32()?;
            let mut ids = Vec::new();
            for _ in 0..id_count {
                let len = r.u16()? as usize;
                ids.push(r.take(len)?.to_vec());
            }
            windows.push((counter, ids));
        }
        if !r.buf.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(VerifierState { suite_name, window, last_counter, windows })
    }

    /// Reads a state file. A missing file yields `None`.
    pub fn load(path: &Path) -> Result<Option<Self>> {
        match fs::read(path) {
            Ok(bytes) => Self::decode(&bytes).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes to a temporary sibling, syncs it, then renames over `path`.
    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        let bytes = self.encode()?;
        let tmp = sibling(path, &format!("tmp.{}", std::process::id()));
        let result = (|| {
            let mut file = File::create(&tmp)?;
            file.write_all(&bytes)?;
            file.sync_all()?;
            fs::rename(&tmp, path)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        Ok(result?)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::StateCorrupt("truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("length checked")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("length checked")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("length checked")))
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

/// Exclusive advisory lock on `<state>.lock`, held until dropped.
#[derive(Debug)]
pub struct StateLock {
    file: File,
}

impl StateLock {
    pub fn acquire(state_path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(sibling(state_path, "lock"))?;
        file.lock()?;
        Ok(StateLock { file })
    }
}

impl Drop for StateLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmac::SecretKey;
    use crate::replay::sign;
    use crate::suite::TmacSuite;

    const NOW: u64 = 1_700_000_000;

    fn verifier(window: u64) -> Verifier {
        Verifier::new(TmacSuite::sha256(), SecretKey::new(b"state key".to_vec()).unwrap(), window).unwrap()
    }

    fn populated() -> (Verifier, VerifierState) {
        let v = verifier(2);
        let key = SecretKey::new(b"state key".to_vec()).unwrap();
        for t in [NOW - 30, NOW, NOW + 1] {
            let env = sign(&TmacSuite::sha256(), &key, b"m", None, t).unwrap();
            assert!(v.verify(&env, t).unwrap().is_accept());
        }
        let state = VerifierState::capture(&v, NOW).unwrap();
        (v, state)
    }

    #[test]
    fn encode_decode() {
        let (_, state) = populated();
        assert_eq!(state.windows.len(), 2);
        let bytes = state.encode().unwrap();
        assert_eq!(&bytes[..4], STATE_MAGIC);
        assert_eq!(VerifierState::decode(&bytes).unwrap(), state);
    }

    #[test]
    fn any_flipped_bit_is_detected() {
        let (_, state) = populated();
        let bytes = state.encode().unwrap();
        for i in 0..bytes.len() {
            let mut damaged = bytes.clone();
            damaged[i] ^= 0x01;
            assert!(matches!(VerifierState::decode(&damaged), Err(Error::StateCorrupt(_))), "byte {i}");
        }
        assert!(VerifierState::decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(VerifierState::decode(&[]).is_err());
    }

    #[test]
    fn counters_outside_window_are_corrupt() {
        let (_, mut state) = populated();
        state.windows.insert(0, (TimeCounter(state.last_counter.0 - 5), vec![]));
        let bytes = state.encode().unwrap();
        assert!(matches!(VerifierState::decode(&bytes), Err(Error::StateCorrupt(_))));
    }

    #[test]
    fn apply_restores_and_checks_config() {
        let (_, state) = populated();
        let fresh = verifier(2);
        state.apply(&fresh).unwrap();
        assert_eq!(fresh.cache().identifier_count(), 3);

        assert!(matches!(state.apply(&verifier(1)), Err(Error::StateMismatch(_))));
        let sha1 = Verifier::new(
            TmacSuite::with_defaults(HashAlgorithm::Sha1),
            SecretKey::new(b"k".to_vec()).unwrap(),
            2,
        )
        .unwrap();
        assert!(matches!(state.apply(&sha1), Err(Error::StateMismatch(_))));
    }

    #[test]
    fn save_and_load_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verifier.state");
        assert_eq!(VerifierState::load(&path).unwrap(), None);

        let (_, state) = populated();
        {
            let _lock = StateLock::acquire(&path).unwrap();
            state.save_atomic(&path).unwrap();
        }
        assert_eq!(VerifierState::load(&path).unwrap(), Some(state));
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.contains(".tmp."))
            .collect();
        assert!(leftovers.is_empty());

        fs::write(&path, b"garbage").unwrap();
        assert!(matches!(VerifierState::load(&path), Err(Error::StateCorrupt(_))));
    }
}
