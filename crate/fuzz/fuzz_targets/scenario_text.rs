#![no_main]

use libfuzzer_sys::fuzz_target;
use tob_core::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = text.parse::<Scenario>() {
        let again: Scenario = s.to_text().parse().expect("rendered scenario parses");
        assert_eq!(again, s);
    }
});
