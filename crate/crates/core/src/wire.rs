//! Binary envelope encoding.
//!
//! ```text
//! "TMAC" | version (1) | name_len (1) | suite name
//!        | id_len (u16 BE)  | identifier
//!        | mac_len (u16 BE) | mac
//!        | msg_len (u32 BE) | message
//! ```
//!
//! Every length is checked against the bytes actually remaining before it is
//! used, and trailing bytes are rejected.

use crate::error::{Error, Result};
use crate::replay::Envelope;

pub const MAGIC: &[u8; 4] = b"TMAC";
pub const VERSION: u8 = 0x01;

/// Bytes taken by the fixed-size parts of an encoding.
pub const HEADER_OVERHEAD: usize = 4 + 1 + 1 + 2 + 2 + 4;

pub fn encoded_len(env: &Envelope) -> usize {
    HEADER_OVERHEAD + env.suite_name.len() + env.identifier.len() + env.mac.len() + env.message.len()
}

pub fn encode(env: &Envelope) -> Result<Vec<u8>> {
    let too_long = |field: &str, max: usize| Error::MalformedEnvelope(format!("{field} longer than {max} bytes"));

    let name_len = u8::try_from(env.suite_name.len()).map_err(|_| too_long("suite name", u8::MAX as usize))?;
    let id_len = u16::try_from(env.identifier.len()).map_err(|_| too_long("identifier", u16::MAX as usize))?;
    let mac_len = u16::try_from(env.mac.len()).map_err(|_| too_long("mac", u16::MAX as usize))?;
    let msg_len = u32::try_from(env.message.len()).map_err(|_| too_long("message", u32::MAX as usize))?;

    let mut out = Vec::with_capacity(encoded_len(env));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(name_len);
    out.extend_from_slice(env.suite_name.as_bytes());
    out.extend_from_slice(&id_len.to_be_bytes());
    out.extend_from_slice(&env.identifier);
    out.extend_from_slice(&mac_len.to_be_bytes());
    out.extend_from_slice(&env.mac);
    out.extend_from_slice(&msg_len.to_be_bytes());
    out.extend_from_slice(&env.message);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::MalformedEnvelope(format!(
                "{what}: need {n} bytes, {} remain",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N, what)?);
        Ok(out)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Envelope> {
    let mut r = Reader { buf: bytes };

    if r.take(4, "magic")? != MAGIC {
        return Err(Error::MalformedEnvelope("bad magic".into()));
    }
    let [version] = r.array::<1>("version")?;
    if version != VERSION {
        return Err(Error::MalformedEnvelope(format!("unsupported version {version}")));
    }

    let [name_len] = r.array::<1>("suite name length")?;
    let suite_name = std::str::from_utf8(r.take(name_len as usize, "suite name")?)
        .map_err(|_| Error::MalformedEnvelope("suite name is not UTF-8".into()))?
        .to_owned();

    let id_len = u16::from_be_bytes(r.array("identifier length")?);
    let identifier = r.take(id_len as usize, "identifier")?.to_vec();

    let mac_len = u16::from_be_bytes(r.array("mac length")?);
    let mac = r.take(mac_len as usize, "mac")?.to_vec();

    let msg_len = u32::from_be_bytes(r.array("message length")?);
    let message = r.take(msg_len as usize, "message")?.to_vec();

    if !r.buf.is_empty() {
        return Err(Error::MalformedEnvelope(format!("{} trailing bytes", r.buf.len())));
    }
    Ok(Envelope { suite_name, message, mac, identifier })
}
