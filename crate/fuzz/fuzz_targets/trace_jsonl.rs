#![no_main]

use libfuzzer_sys::fuzz_target;
use tob_core::Trace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = Trace::from_jsonl(text) {
        let again = Trace::from_jsonl(&trace.to_jsonl()).expect("serialized trace parses");
        assert_eq!(again.events, trace.events);
    }
});
