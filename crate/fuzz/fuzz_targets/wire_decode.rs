#![no_main]

use libfuzzer_sys::fuzz_target;
use tmac::{wire, Error};

fuzz_target!(|data: &[u8]| {
    match wire::decode(data) {
        // Anything accepted must be the canonical encoding of what it decoded to.
        Ok(env) => assert_eq!(wire::encode(&env).unwrap(), data),
        Err(Error::MalformedEnvelope(_)) => {}
        Err(other) => panic!("unexpected error {other:?}"),
    }
});
