//! Parameter sweeps over a template, one independent simulation per point.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::devices::damping_parameter;
use crate::engine::SolverConfig;
use crate::templates::{
    build_binary_synapse, build_multistate_synapse, build_neuron, NeuronParams,
    SynapseBinaryParams, SynapseMultiParams,
};

use super::figures::{quanta, simulate, switching};
use super::{create_dir, HarnessError, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTemplate {
    Neuron,
    Binary,
    Multi,
    /// Closed-form QPSJ damping parameter; no simulation.
    Damping,
}

impl FromStr for SweepTemplate {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "neuron" => Ok(Self::Neuron),
            "binary" | "binary-synapse" => Ok(Self::Binary),
            "multi" | "multistate" | "multi-synapse" => Ok(Self::Multi),
            "damping" => Ok(Self::Damping),
            other => Err(HarnessError::Input(format!(
                "unknown template `{other}` (neuron, binary, multi, damping)"
            ))),
        }
    }
}

impl SweepTemplate {
    pub fn metric_names(self) -> &'static [&'static str] {
        match self {
            Self::Neuron => &["inputs", "firings", "firing_period_ps", "cycle_charge_e"],
            Self::Binary | Self::Multi => &["inputs", "output_pulses", "pulses_per_input"],
            Self::Damping => &["beta"],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct DampingParams {
    vc: f64,
    l: f64,
    r: f64,
}

impl Default for DampingParams {
    fn default() -> Self {
        Self {
            vc: 0.7,
            l: 0.1,
            r: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub metrics: Vec<f64>,
    pub error: Option<String>,
}

fn has_param<T: Serialize>(base: &T, path: &str) -> bool {
    let json = serde_json::to_value(base).expect("params serialize");
    let mut slot = &json;
    for key in path.split('.') {
        match slot.get(key) {
            Some(v) => slot = v,
            None => return false,
        }
    }
    slot.is_number() || slot.is_null()
}

/// Set a dotted field path in a parameter struct through its JSON form.
fn with_param<T: Serialize + DeserializeOwned>(
    base: &T,
    path: &str,
    value: f64,
) -> Result<T, HarnessError> {
    let mut json = serde_json::to_value(base).expect("params serialize");
    let mut slot = &mut json;
    for key in path.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(key))
            .ok_or_else(|| HarnessError::Input(format!("no parameter `{path}`")))?;
    }
    let integral = slot.is_u64() && value >= 0.0 && value.fract() == 0.0;
    *slot = match slot {
        _ if integral => serde_json::Value::from(value as u64),
        serde_json::Value::Number(_) | serde_json::Value::Null => serde_json::Value::from(value),
        _ => {
            return Err(HarnessError::Input(format!(
                "parameter `{path}` is not a number"
            )))
        }
    };
    serde_json::from_value(json)
        .map_err(|e| HarnessError::Input(format!("`{path}` = {value}: {e}")))
}

fn point(
    t: SweepTemplate,
    param: &str,
    value: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>, HarnessError> {
    match t {
        SweepTemplate::Damping => {
            let p = with_param(&DampingParams::default(), param, value)?;
            let beta = damping_parameter(p.vc, p.l, p.r)
                .map_err(|e| HarnessError::Input(e.to_string()))?;
            Ok(vec![beta])
        }
        SweepTemplate::Neuron => {
            let p = with_param(&NeuronParams::default(), param, value)?;
            let run = simulate("sweep", build_neuron(&p)?, cfg)?;
            let fires = switching(run.train("i(vout)").expect("output probe"));
            let t = fires.peak_times();
            let period = if t.len() >= 2 {
                (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64
            } else {
                f64::NAN
            };
            let cycles = run.cycles("i(vout)");
            let cycle_e = if cycles.is_empty() {
                f64::NAN
            } else {
                2.0 * cycles.iter().sum::<f64>() / cycles.len() as f64 / crate::units::TWO_E
            };
            Ok(vec![
                p.input.count_before(p.tstop) as f64,
                t.len() as f64,
                period,
                cycle_e,
            ])
        }
        SweepTemplate::Binary => {
            let p = with_param(&SynapseBinaryParams::default(), param, value)?;
            let run = simulate("sweep", build_binary_synapse(&p)?, cfg)?;
            let inputs = p.input.count_before(p.tstop) as f64;
            let n = quanta(run.train("i(vout)").expect("output probe")) as f64;
            Ok(vec![inputs, n, n / inputs])
        }
        SweepTemplate::Multi => {
            let p = with_param(&SynapseMultiParams::default(), param, value)?;
            let run = simulate("sweep", build_multistate_synapse(&p)?, cfg)?;
            let inputs = p.input.count_before(p.tstop) as f64;
            let n = quanta(run.train("i(vout)").expect("output probe")) as f64;
            Ok(vec![inputs, n, n / inputs])
        }
    }
}

/// Run every grid point in parallel; rows come back in grid order and a
/// failing point is recorded rather than aborting the sweep.
pub fn sweep(
    t: SweepTemplate,
    param: &str,
    values: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>, HarnessError> {
    // Reject unknown parameters up front rather than once per row.
    let known = match t {
        SweepTemplate::Damping => has_param(&DampingParams::default(), param),
        SweepTemplate::Neuron => has_param(&NeuronParams::default(), param),
        SweepTemplate::Binary => has_param(&SynapseBinaryParams::default(), param),
        SweepTemplate::Multi => has_param(&SynapseMultiParams::default(), param),
    };
    if !known {
        return Err(HarnessError::Input(format!(
            "no numeric parameter `{param}` in {t:?}"
        )));
    }
    Ok(values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| match point(t, param, value, cfg) {
            Ok(metrics) => SweepRow {
                index,
                value,
                metrics,
                error: None,
            },
            Err(e) => SweepRow {
                index,
                value,
                metrics: vec![f64::NAN; t.metric_names().len()],
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// `start:stop:step` (inclusive) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Input(format!("bad grid `{spec}` (use a,b,c or start:stop:step)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, h] = parts.as_slice() else {
            return Err(bad());
        };
        let (a, b, h) = (num(a)?, num(b)?, num(h)?);
        if !(h > 0.0) || b < a || ((b - a) / h) > 1e6 {
            return Err(bad());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        // Trim float noise such as 0.30000000000000004.
        Ok((0..=n)
            .map(|k| ((a + k as f64 * h) * 1e12).round() / 1e12)
            .collect())
    } else {
        spec.split(',').map(num).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub template: SweepTemplate,
    pub param: String,
    pub values: Vec<f64>,
    pub out: PathBuf,
    pub solver: SolverConfig,
    pub argv: Vec<String>,
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn write_sweep_csv(
    path: &Path,
    param: &str,
    names: &[&str],
    rows: &[SweepRow],
) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut wr = csv::Writer::from_writer(file);
    let mut header = vec!["index".to_string(), param.to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    header.push("error".into());
    wr.write_record(&header)
        .map_err(crate::analysis::ExportError::from)?;
    for r in rows {
        let mut rec = vec![r.index.to_string(), r.value.to_string()];
        rec.extend(r.metrics.iter().map(|v| fmt_cell(*v)));
        rec.push(r.error.clone().unwrap_or_default());
        wr.write_record(&rec)
            .map_err(crate::analysis::ExportError::from)?;
    }
    wr.flush().map_err(crate::analysis::ExportError::from)?;
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Vec<SweepRow>, HarnessError> {
    let started = Instant::now();
    let rows = sweep(a.template, &a.param, &a.values, &a.solver)?;
    create_dir(&a.out)?;
    write_sweep_csv(
        &a.out.join("sweep.csv"),
        &a.param,
        a.template.metric_names(),
        &rows,
    )?;
    let mut m = RunManifest::new(
        "sweep",
        a.argv.clone(),
        serde_json::json!({ "template": format!("{:?}", a.template), "param": a.param, "values": a.values }),
        a.solver,
    );
    m.outputs = vec!["sweep.csv".into(), "manifest.json".into()];
    m.wall_time_s = started.elapsed().as_secs_f64();
    m.write(&a.out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2,5,10").unwrap(), vec![1.0, 2.0, 5.0, 10.0]);
        assert_eq!(parse_grid("0:1:0.25").unwrap().len(), 5);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn nested_and_integer_fields() {
        let p = with_param(&NeuronParams::default(), "input.period", 100.0).unwrap();
        assert_eq!(p.input.period, 100.0);
        let p = with_param(&NeuronParams::default(), "n_threshold", 5.0).unwrap();
        assert_eq!(p.n_threshold, 5);
        let p = with_param(&NeuronParams::default(), "c_store", 10.0).unwrap();
        assert_eq!(p.c_store, Some(10.0));
        assert!(with_param(&NeuronParams::default(), "n_threshold", 2.5).is_err());
        assert!(with_param(&NeuronParams::default(), "nope", 1.0).is_err());
    }

    #[test]
    fn damping_linear_in_l() {
        let rows = sweep(
            SweepTemplate::Damping,
            "l",
            &[0.1, 0.2, 0.4],
            &SolverConfig::default(),
        )
        .unwrap();
        let b: Vec<f64> = rows.iter().map(|r| r.metrics[0]).collect();
        assert!((b[1] / b[0] - 2.0).abs() < 1e-12 && (b[2] / b[0] - 4.0).abs() < 1e-12);
        let bad = sweep(
            SweepTemplate::Damping,
            "r",
            &[0.0, 1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(bad[0].error.is_some() && bad[1].error.is_none());
    }
}
