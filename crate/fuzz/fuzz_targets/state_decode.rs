#![no_main]

use libfuzzer_sys::fuzz_target;
use tmac::state::VerifierState;
use tmac::Error;

fuzz_target!(|data: &[u8]| {
    match VerifierState::decode(data) {
        Ok(state) => assert_eq!(state.encode().unwrap(), data),
        Err(Error::StateCorrupt(_)) => {}
        Err(other) => panic!("unexpected error {other:?}"),
    }
});
