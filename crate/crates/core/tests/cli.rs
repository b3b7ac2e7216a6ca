use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qpsj"));
    c.env_remove("QPSJ_OUT_DIR");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn valid(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus/valid")
        .join(name)
}

fn invalid(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus/invalid")
        .join(name)
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn sim_writes_outputs() {
    let out = scratch("sim");
    let o = bin()
        .arg("sim")
        .arg(valid("divider.cir"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o));
    for f in ["waveforms.csv", "spikes.csv", "plot.gp", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "sim");
    assert!(m["input"]["netlist"].as_str().unwrap().contains(".tran"));
    let csv = fs::read_to_string(out.join("waveforms.csv")).unwrap();
    assert!(csv.starts_with("time,"));
}

#[test]
fn malformed_netlist_exits_2() {
    let out = scratch("bad");
    for f in ["unknown_device.cir", "missing_tran.cir"] {
        let o = bin()
            .arg("sim")
            .arg(invalid(f))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(2), "{f}: {}", text(&o));
        assert!(String::from_utf8_lossy(&o.stderr).contains("line "), "{f}");
    }
}

#[test]
fn missing_file_exits_1() {
    let o = bin()
        .args(["sim", "/nonexistent/x.cir", "--out"])
        .arg(scratch("missing"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn figure_prints_summary() {
    let out = scratch("fig");
    let o = bin()
        .args(["figure", "fig4b", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("0 output pulses"), "{s}");
    assert!(s.contains("[ok  ]") && !s.contains("[FAIL]"), "{s}");
    assert!(out.join("fig4b/summary.txt").is_file());
    assert!(out.join("fig4b/fig4b.cir").is_file());

    let o = bin()
        .args(["figure", "fig99", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_table() {
    let out = scratch("sweep");
    let o = bin()
        .args(["sweep", "damping", "l", "0.1:0.3:0.1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,l,beta,error");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2,0.3,"));

    let o = bin()
        .args(["sweep", "damping", "nope", "1,2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_from_environment() {
    let out = scratch("env");
    let o = bin()
        .env("QPSJ_OUT_DIR", &out)
        .arg("sim")
        .arg(valid("lc_tank.cir"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o));
    assert!(out.join("waveforms.csv").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = scratch("det_a");
    let b = scratch("det_b");
    for out in [&a, &b] {
        let o = bin()
            .arg("sim")
            .arg(valid("neuron_n10.cir"))
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", text(&o));
    }
    for f in ["waveforms.csv", "spikes.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
