//! Hash-function abstraction and the nested HMAC construction.
//!
//! The hash is treated as a black box: HMAC only needs its block length, its
//! output length and a way to digest a sequence of byte slices. The keyed
//! composition itself lives here rather than in a third-party HMAC crate.

use std::fmt;

use sha1::Sha1;
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::error::{Error, Result};

const IPAD: u8 = 0x36;
const OPAD: u8 = 0x5c;

/// A cryptographic hash usable under HMAC.
pub trait HashFunction: Send + Sync {
    fn name(&self) -> &str;

    /// Digest size in bytes.
    fn output_len(&self) -> usize;

    /// Internal block size in bytes; the HMAC pads keys to this length.
    fn block_len(&self) -> usize;

    /// Digest of the concatenation of `parts`.
    fn digest_parts(&self, parts: &[&[u8]]) -> Vec<u8>;

    fn digest(&self, msg: &[u8]) -> Vec<u8> {
        self.digest_parts(&[msg])
    }
}

/// The built-in hash algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HashAlgorithm {
    #[default]
    Sha256,
    Sha1,
}

impl HashAlgorithm {
    pub const ALL: [HashAlgorithm; 2] = [HashAlgorithm::Sha256, HashAlgorithm::Sha1];

    /// Looks an algorithm up by its registered name (`"SHA256"`, `"SHA1"`).
    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|alg| alg.as_str() == name)
            .ok_or_else(|| Error::UnsupportedAlgorithm(name.to_owned()))
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            HashAlgorithm::Sha256 => "SHA256",
            HashAlgorithm::Sha1 => "SHA1",
        }
    }

    /// Output size in bits.
    pub const fn output_bits(self) -> u32 {
        match self {
            HashAlgorithm::Sha256 => 256,
            HashAlgorithm::Sha1 => 160,
        }
    }
}

impl fmt::Display for HashAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl HashFunction for HashAlgorithm {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn output_len(&self) -> usize {
        self.output_bits() as usize / 8
    }

    fn block_len(&self) -> usize {
        64
    }

    fn digest_parts(&self, parts: &[&[u8]]) -> Vec<u8> {
        fn run<D: Digest>(parts: &[&[u8]]) -> Vec<u8> {
            let mut hasher = D::new();
            for part in parts {
                hasher.update(part);
            }
            hasher.finalize().to_vec()
        }
        match self {
            HashAlgorithm::Sha256 => run::<Sha256>(parts),
            HashAlgorithm::Sha1 => run::<Sha1>(parts),
        }
    }
}

/// Digest `msg` with the algorithm registered under `name`.
pub fn digest(name: &str, msg: &[u8]) -> Result<Vec<u8>> {
    Ok(HashAlgorithm::from_name(name)?.digest(msg))
}

/// Shared secret key material. Cleared from memory on drop and never printed.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct SecretKey(Vec<u8>);

impl SecretKey {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(Error::EmptyKey);
        }
        Ok(SecretKey(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl PartialEq for SecretKey {
    fn eq(&self, other: &Self) -> bool {
        verify_mac_equal(&self.0, &other.0)
    }
}

impl Eq for SecretKey {}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey([REDACTED; {}])", self.0.len())
    }
}

/// Keyed digest `H((K ^ opad) || H((K ^ ipad) || msg))`.
///
/// Keys longer than the block are hashed first; shorter keys are zero-padded
/// to the block length. An empty key is permitted here because identifiers and
/// derived keys are also used as HMAC keys; [`SecretKey`] enforces non-emptiness
/// for master secrets.
pub fn hmac<H: HashFunction + ?Sized>(hash: &H, key: &[u8], msg: &[u8]) -> Vec<u8> {
    let block_len = hash.block_len();
    let mut block_key = Zeroizing::new(vec![0u8; block_len]);
    if key.len() > block_len {
        let hashed = Zeroizing::new(hash.digest(key));
        block_key[..hashed.len()].copy_from_slice(&hashed);
    } else {
        block_key[..key.len()].copy_from_slice(key);
    }

    let mut pad = Zeroizing::new(block_key.iter().map(|b| b ^ IPAD).collect::<Vec<u8>>());
    let inner = Zeroizing::new(hash.digest_parts(&[&pad, msg]));

    for (p, k) in pad.iter_mut().zip(block_key.iter()) {
        *p = k ^ OPAD;
    }
    hash.digest_parts(&[&pad, &inner])
}

/// HMAC keyed by a [`SecretKey`].
pub fn hmac_with_key<H: HashFunction + ?Sized>(hash: &H, key: &SecretKey, msg: &[u8]) -> Vec<u8> {
    hmac(hash, key.as_bytes(), msg)
}

/// Constant-time equality for MAC values. Inputs of different lengths are unequal.
pub fn verify_mac_equal(a: &[u8], b: &[u8]) -> bool {
    // ct_eq on slices already returns false on length mismatch without
    // inspecting contents.
    a.ct_eq(b).into()
}
