//! The checked-in fuzz seeds are valid inputs and survive a round trip.

use std::fs;
use std::path::PathBuf;

use tob_core::{Log, Scenario, Trace};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn scenario_text_seeds() {
    for (name, text) in seeds("scenario_text") {
        let s: Scenario = text.parse().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.to_text().parse::<Scenario>().unwrap(), s);
    }
}

#[test]
fn scenario_json_seeds() {
    for (name, text) in seeds("scenario_json") {
        let s = Scenario::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Scenario::from_json(&serde_json::to_string(&s).unwrap()).unwrap(), s);
    }
}

#[test]
fn trace_jsonl_seeds() {
    for (name, text) in seeds("trace_jsonl") {
        let t = Trace::from_jsonl(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Trace::from_jsonl(&t.to_jsonl()).unwrap().events, t.events);
    }
}

#[test]
fn log_json_seeds() {
    for (name, text) in seeds("log_json") {
        let log: Log = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(serde_json::from_str::<Log>(&serde_json::to_string(&log).unwrap()).unwrap(), log);
    }
}
