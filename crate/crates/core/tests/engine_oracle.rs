//! The companion/Newton engine against the RK4 reference and against the
//! Josephson and Bloch frequency relations.

mod common;

#[test]
fn jj_matches_reference() {
    let e = common::jj_agreement();
    assert!(e < 0.01, "relative rms {e}");
}

#[test]
fn qpsj_matches_reference() {
    let e = common::qpsj_agreement();
    assert!(e < 0.01, "relative rms {e}");
}

#[test]
fn josephson_frequency() {
    let (f, expect) = common::josephson();
    assert!((f - expect).abs() < 0.01 * expect, "{f} vs {expect}");
}

#[test]
fn bloch_frequency() {
    let (f, expect) = common::bloch();
    assert!((f - expect).abs() < 0.01 * expect, "{f} vs {expect}");
}
