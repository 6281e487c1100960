#![no_main]

use libfuzzer_sys::fuzz_target;
use tob_core::Log;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = serde_json::from_slice::<Log>(data) {
        assert!(log.blocks().first() == Some(&tob_core::GENESIS));
        let json = serde_json::to_vec(&log).unwrap();
        assert_eq!(serde_json::from_slice::<Log>(&json).unwrap(), log);
    }
});
