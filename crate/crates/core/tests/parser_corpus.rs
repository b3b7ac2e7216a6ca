use proptest::prelude::*;
use qpsj::netlist::parse_netlist;

mod common;

#[test]
fn corpus_is_large_enough() {
    assert!(common::corpus("valid").len() + common::corpus("invalid").len() >= 20);
}

#[test]
fn valid_netlists_round_trip() {
    for path in common::corpus("valid") {
        common::round_trip(&path).unwrap();
    }
}

#[test]
fn invalid_netlists_diagnose() {
    common::diagnose_invalid().unwrap();
}

#[test]
fn fuzz_hundred_thousand_lines() {
    // Some random lines are legal cards or comments.
    assert!(common::fuzz(100_000, 0x5eed).unwrap() > 0);
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let lines = text.lines().count().max(1);
        if let Err(e) = parse_netlist(&text) {
            prop_assert!(e.line >= 1 && e.line <= lines + 1);
        }
    }
}
