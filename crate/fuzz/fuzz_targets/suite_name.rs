#![no_main]

use libfuzzer_sys::fuzz_target;
use tmac::parse_suite_name;

fuzz_target!(|data: &[u8]| {
    let Ok(name) = std::str::from_utf8(data) else { return };
    if let Ok(suite) = parse_suite_name(name) {
        let canonical = suite.canonical_name();
        assert_eq!(parse_suite_name(&canonical).unwrap(), suite);
    }
});
