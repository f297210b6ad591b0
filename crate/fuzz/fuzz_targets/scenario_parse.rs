#![no_main]

use libfuzzer_sys::fuzz_target;
use tmac::sim::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scenario) = Scenario::parse(text) {
        // Events print back in the same syntax they were read from.
        let reprinted: String = scenario.events.iter().map(|e| format!("{e}\n")).collect();
        assert_eq!(Scenario::parse(&reprinted).unwrap().events, scenario.events);
    }
});
