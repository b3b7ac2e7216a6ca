//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qpsj::engine::{reference_integrate, tran_circuit, SolverConfig, WaveformSet};
use qpsj::netlist::{circuits_equivalent, load, parse_netlist, DeviceCard, NetlistErrorKind};
use qpsj::units::{PHI0, TWO_E};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn corpus(kind: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(kind);
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cir"))
        .collect();
    files.sort();
    files
}

fn without_lines(cards: &[DeviceCard]) -> Vec<DeviceCard> {
    cards
        .iter()
        .cloned()
        .map(|c| DeviceCard { line: 0, ..c })
        .collect()
}

fn variant_name(kind: &NetlistErrorKind) -> String {
    let dbg = format!("{kind:?}");
    dbg.split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap()
        .to_string()
}

/// Parse, print and reparse a valid netlist; also round-trip the elaborated
/// circuit through its own netlist form.
pub fn round_trip(path: &Path) -> Result<(), String> {
    let name = path.display();
    let text = fs::read_to_string(path).unwrap();
    let ast = parse_netlist(&text).map_err(|e| format!("{name}: {e}"))?;
    let c = load(&text).map_err(|e| format!("{name}: {e}"))?;
    let again = parse_netlist(&ast.to_string()).map_err(|e| format!("{name} reprinted: {e}"))?;
    if without_lines(&again.cards) != without_lines(&ast.cards)
        || again.directives != ast.directives
    {
        return Err(format!("{name}: AST changed on reprint"));
    }
    let back = load(&c.to_netlist()).map_err(|e| format!("{name} regenerated: {e}"))?;
    if !circuits_equivalent(&c, &back, 1e-12) {
        return Err(format!("{name}: circuit changed on regeneration"));
    }
    Ok(())
}

/// Check every invalid netlist against the line and error kind listed in
/// `expected.json`.
pub fn diagnose_invalid() -> Result<usize, String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus/invalid");
    let expected: BTreeMap<String, (usize, String)> =
        serde_json::from_str(&fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
    let files = corpus("invalid");
    if files.len() != expected.len() {
        return Err(format!(
            "{} files, {} expectations",
            files.len(),
            expected.len()
        ));
    }
    for path in &files {
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let (line, kind) = &expected[&name];
        let e = match load(&fs::read_to_string(path).unwrap()) {
            Ok(_) => return Err(format!("{name}: accepted")),
            Err(e) => e,
        };
        if (e.line, variant_name(&e.kind)) != (*line, kind.clone())
            || !e.to_string().starts_with(&format!("line {line}:"))
        {
            return Err(format!("{name}: expected line {line} {kind}, got {e}"));
        }
    }
    Ok(files.len())
}

const TOKENS: &[&str] = &[
    "R1",
    "L2",
    "C3",
    "Vin",
    "Ib",
    "qpsj",
    "jj",
    "mjj",
    "Q0",
    "B1",
    "0",
    "1",
    "in",
    "out",
    "9k",
    "0.7m",
    "1meg",
    "-2f",
    "1e-3",
    "dc",
    "pulse(",
    ")",
    "(",
    "vc=",
    "rn=10k",
    "ls=0.1n",
    "ic=200u",
    "cj=",
    "states=",
    "200u,300u",
    "state=1",
    "q0=",
    "phi0=",
    "=",
    ",",
    ".tran",
    ".save",
    ".end",
    ".ac",
    "v(1)",
    "i(R1)",
    "v(",
    "i(",
    "+",
    "*",
    "1q",
    "nan",
    "inf",
    "1e400",
    "--",
    "..",
    "\t",
    "m",
    "g",
    "p",
];

fn random_line(rng: &mut StdRng) -> String {
    let n = rng.gen_range(0..9);
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen_bool(0.8) {
            parts.push(TOKENS[rng.gen_range(0..TOKENS.len())].to_string());
        } else {
            let len = rng.gen_range(1..6);
            parts.push(
                (0..len)
                    .map(|_| char::from(rng.gen_range(0x20u8..0x7f)))
                    .collect(),
            );
        }
    }
    let sep = if rng.gen_bool(0.2) { "" } else { " " };
    parts.join(sep)
}

/// Load `lines` random lines, each inside an otherwise valid netlist.
/// Returns how many loaded; a panic or an out-of-range error line fails.
pub fn fuzz(lines: usize, seed: u64) -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut parsed = 0;
    for _ in 0..lines {
        let line = random_line(&mut rng);
        let text = format!("fuzz\nV1 1 0 dc 1m\n{line}\nR1 1 0 1k\n.tran 1p 10p\n.end\n");
        let r =
            std::panic::catch_unwind(|| load(&text)).map_err(|_| format!("panic on {line:?}"))?;
        match r {
            Ok(_) => parsed += 1,
            Err(e) if !(1..=6).contains(&e.line) => return Err(format!("{line:?} -> {e}")),
            Err(_) => {}
        }
    }
    Ok(parsed)
}

// Sources ramp up from zero so both integrators start from the same rest
// state; the reference has no DC solve.
pub const JJ: &str =
    "jj\nI1 0 1 pulse(0 300u 0 2p 0 1n 0)\njj B1 1 0 ic=200u rn=5 cj=0.5f\n.tran 0.01p 60p\n.end";
pub const QPSJ: &str =
    "qpsj\nV1 1 0 pulse(0 1.2m 0 5p 0 1n 0)\nqpsj Q1 1 0 vc=0.7m rn=10k ls=0.1n\n.tran 0.05p 150p\n.end";

/// RMS of the difference, relative to the RMS of the reference.
fn rel_rms(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let r: f64 = b.iter().map(|y| y * y).sum();
    (d / r).sqrt()
}

fn both(text: &str) -> (WaveformSet, WaveformSet) {
    let c = load(text).unwrap();
    let cfg = SolverConfig {
        reltol: 1e-5,
        max_phase_step: 0.05,
        ..SolverConfig::default()
    };
    let mna = tran_circuit(&c, &cfg).unwrap();
    let rk = reference_integrate(&c, c.tran.tstep, c.tran.tstop).unwrap();
    assert_eq!(mna.len(), rk.len());
    (mna, rk)
}

/// Relative RMS difference between the engine and the RK4 reference.
pub fn jj_agreement() -> f64 {
    let (mna, rk) = both(JJ);
    rel_rms(mna.get("v(1)").unwrap(), rk.get("v(1)").unwrap())
}

pub fn qpsj_agreement() -> f64 {
    let (mna, rk) = both(QPSJ);
    rel_rms(mna.get("i(q1)").unwrap(), rk.get("i(q1)").unwrap())
}

/// Upward crossings of the signal mean after the first sixth of the run.
fn crossings(time: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let skip = time.len() / 6;
    let (t, y) = (&time[skip..], &y[skip..]);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut out = Vec::new();
    for k in 1..y.len() {
        let (a, b) = (y[k - 1] - mean, y[k] - mean);
        if a < 0.0 && b >= 0.0 {
            out.push(t[k - 1] + (t[k] - t[k - 1]) * a / (a - b));
        }
    }
    (mean, out)
}

/// (measured, predicted) oscillation frequency of `channel`; `quantum` is
/// Φ0 for voltage or 2e for current.
fn frequency(text: &str, channel: &str, quantum: f64) -> (f64, f64) {
    let c = load(text).unwrap();
    let w = tran_circuit(&c, &SolverConfig::default()).unwrap();
    let (mean, e) = crossings(&w.time, w.get(channel).unwrap());
    assert!(e.len() > 10, "{} cycles", e.len());
    (
        (e.len() - 1) as f64 / (e[e.len() - 1] - e[0]),
        mean / quantum,
    )
}

pub fn josephson() -> (f64, f64) {
    frequency(JJ, "v(1)", PHI0)
}

pub fn bloch() -> (f64, f64) {
    frequency(QPSJ, "i(q1)", TWO_E)
}
