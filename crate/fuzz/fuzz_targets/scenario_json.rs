#![no_main]

use libfuzzer_sys::fuzz_target;
use tob_core::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scenario::from_json(text) {
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(Scenario::from_json(&json).expect("serialized scenario parses"), s);
    }
});
