//! Command implementations behind the `qpsj` binary.

pub mod figures;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    detect_pulses, export_spikes_csv, export_waveforms_csv, plot_script, DetectorConfig,
    ExportError,
};
use crate::engine::{tran, EngineError, SolverConfig, WaveformSet};
use crate::netlist::{elaborate, parse_netlist, NetlistError};
use crate::templates::TemplateError;

pub use figures::{run_figure, FigureRun, FIGURE_IDS};
pub use sweep::{cmd_sweep, parse_grid, sweep, SweepArgs, SweepRow, SweepTemplate};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QPSJ_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qpsj-out";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Export(#[from] ExportError),
}

impl HarnessError {
    /// 2 for bad input, 3 for a simulation that did not converge, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Input(_) | HarnessError::Netlist(_) | HarnessError::Template(_) => 2,
            HarnessError::Engine(
                EngineError::Config(_) | EngineError::Request(_) | EngineError::Unsupported(_),
            ) => 2,
            HarnessError::Engine(_) => 3,
            HarnessError::Io { .. } | HarnessError::Export(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>, HarnessError> {
    Ok(std::io::BufWriter::new(
        fs::File::create(path).map_err(io_err(path))?,
    ))
}

/// Output directory from the flag, the environment, or the default.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn load_solver_config(path: Option<&Path>) -> Result<SolverConfig, HarnessError> {
    let Some(path) = path else {
        return Ok(SolverConfig::default());
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let cfg: SolverConfig = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Written next to every output set.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Arguments needed to repeat the run.
    pub args: Vec<String>,
    /// Netlist text as simulated (for `sim`) or template parameters.
    pub input: serde_json::Value,
    pub solver: SolverConfig,
    pub outputs: Vec<String>,
    /// Runs involve no randomness; identical inputs give identical CSVs.
    pub deterministic: bool,
    pub wall_time_s: f64,
}

impl RunManifest {
    fn new(
        command: &str,
        args: Vec<String>,
        input: serde_json::Value,
        solver: SolverConfig,
    ) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            input,
            solver,
            outputs: Vec::new(),
            deterministic: true,
            wall_time_s: 0.0,
        }
    }

    fn write(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&path, text + "\n")?;
        Ok(path)
    }
}

/// Write waveforms, detected pulses and a plot script under `dir` with the
/// given file prefix; returns the file names written.
fn write_run_outputs(
    dir: &Path,
    prefix: &str,
    w: &WaveformSet,
) -> Result<Vec<String>, HarnessError> {
    let names = [
        format!("{prefix}waveforms.csv"),
        format!("{prefix}spikes.csv"),
        format!("{prefix}plot.gp"),
    ];
    export_waveforms_csv(w, create_file(&dir.join(&names[0]))?)?;
    let det = DetectorConfig::default();
    let trains: Vec<_> = w
        .channels
        .iter()
        .filter(|(n, _)| n.starts_with("i("))
        .map(|(n, y)| detect_pulses(n, &w.time, y, &det))
        .collect();
    export_spikes_csv(&trains, create_file(&dir.join(&names[1]))?)?;
    write_file(&dir.join(&names[2]), plot_script(w, &names[0]))?;
    Ok(names.to_vec())
}

#[derive(Debug, Clone)]
pub struct SimArgs {
    pub netlist: PathBuf,
    /// ps; overrides the netlist's `.tran`.
    pub tstep: Option<f64>,
    pub tstop: Option<f64>,
    pub out: PathBuf,
    pub solver: SolverConfig,
    pub argv: Vec<String>,
}

/// Parse, simulate and export one netlist.
pub fn cmd_sim(a: &SimArgs) -> Result<RunManifest, HarnessError> {
    let started = Instant::now();
    let text = fs::read_to_string(&a.netlist).map_err(io_err(&a.netlist))?;
    let ast = parse_netlist(&text)?;
    let c = elaborate(&ast)?;
    let tstep = a.tstep.unwrap_or(c.tran.tstep);
    let tstop = a.tstop.unwrap_or(c.tran.tstop);
    let w = tran(&c, tstep, tstop, c.tran.tstart.min(tstop), &a.solver)?;
    create_dir(&a.out)?;
    let mut m = RunManifest::new(
        "sim",
        a.argv.clone(),
        serde_json::json!({ "netlist_path": a.netlist.display().to_string(), "netlist": text, "tstep": tstep, "tstop": tstop }),
        a.solver,
    );
    m.outputs = write_run_outputs(&a.out, "", &w)?;
    m.outputs.push("manifest.json".into());
    m.wall_time_s = started.elapsed().as_secs_f64();
    m.write(&a.out)?;
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct FigureArgs {
    pub id: String,
    pub out: PathBuf,
    pub solver: SolverConfig,
    pub argv: Vec<String>,
}

/// Run a figure scenario, write its netlists, outputs and summary, and
/// return the run for reporting.
pub fn cmd_figure(a: &FigureArgs) -> Result<FigureRun, HarnessError> {
    let started = Instant::now();
    let fig = run_figure(&a.id, &a.solver)?;
    let dir = a.out.join(&fig.id);
    create_dir(&dir)?;
    let mut outputs = Vec::new();
    let mut netlists = serde_json::Map::new();
    let single = fig.runs.len() == 1;
    for run in &fig.runs {
        let prefix = if single {
            String::new()
        } else {
            format!("{}_", run.label)
        };
        let cir = format!("{}.cir", run.label);
        let text = run.netlist.to_string();
        write_file(&dir.join(&cir), &text)?;
        netlists.insert(run.label.clone(), serde_json::Value::String(text));
        outputs.push(cir);
        outputs.extend(write_run_outputs(&dir, &prefix, &run.waveforms)?);
    }
    let summary = render_summary(&fig);
    write_file(&dir.join("summary.txt"), &summary)?;
    outputs.push("summary.txt".into());
    let mut m = RunManifest::new(
        "figure",
        a.argv.clone(),
        serde_json::json!({ "figure": fig.id, "netlists": netlists, "checks": fig.checks }),
        a.solver,
    );
    outputs.push("manifest.json".into());
    m.outputs = outputs;
    m.wall_time_s = started.elapsed().as_secs_f64();
    m.write(&dir)?;
    Ok(fig)
}

pub fn render_summary(fig: &FigureRun) -> String {
    let mut s = format!("{}\n", fig.id);
    for line in &fig.summary {
        s.push_str(&format!("  {line}\n"));
    }
    for c in &fig.checks {
        let mark = if c.pass { "ok  " } else { "FAIL" };
        s.push_str(&format!(
            "  [{mark}] {}: expected {}, observed {}\n",
            c.name, c.expected, c.observed
        ));
    }
    s
}
