//! Named figure scenarios: template, simulation, analysis and the behavioral
//! checks each one is expected to satisfy.

use serde::Serialize;

use crate::analysis::{cycle_charges, detect_pulses, quantum_check, DetectorConfig, SpikeTrain};
use crate::engine::{tran_circuit, SolverConfig, WaveformSet};
use crate::netlist::{elaborate, NetlistAst};
use crate::templates::{
    build_binary_synapse, build_multistate_synapse, build_network, build_neuron, NetworkSpec,
    NeuronParams, SynapseBinaryParams, SynapseMultiParams,
};
use crate::units::TWO_E;

use super::HarnessError;

pub const FIGURE_IDS: [&str; 11] = [
    "fig2",
    "fig4a",
    "fig4b",
    "fig6",
    "fig6a",
    "fig6b",
    "fig6c",
    "fig6d",
    "fig8",
    "fig9",
    "fig8-zero",
];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl Check {
    fn new(
        name: impl Into<String>,
        expected: impl Into<String>,
        observed: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self {
            name: name.into(),
            expected: expected.into(),
            observed: observed.into(),
            pass,
        }
    }
}

/// One simulated circuit within a figure.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub label: String,
    pub netlist: NetlistAst,
    pub waveforms: WaveformSet,
    pub trains: Vec<SpikeTrain>,
}

impl ScenarioRun {
    pub fn train(&self, source: &str) -> Option<&SpikeTrain> {
        self.trains
            .iter()
            .find(|t| t.source.eq_ignore_ascii_case(source))
    }

    /// Cycle charges of `source` between its switching events.
    pub fn cycles(&self, source: &str) -> Vec<f64> {
        let y = self.waveforms.get(source).unwrap_or(&[]);
        match self.train(source) {
            Some(t) => cycle_charges(&self.waveforms.time, y, &switching(t)),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FigureRun {
    pub id: String,
    pub runs: Vec<ScenarioRun>,
    pub checks: Vec<Check>,
    pub summary: Vec<String>,
}

impl FigureRun {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn run(&self, label: &str) -> Option<&ScenarioRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

/// Events that move at least one Cooper pair; polarization bumps round to 0.
pub fn switching(train: &SpikeTrain) -> SpikeTrain {
    SpikeTrain {
        source: train.source.clone(),
        events: train
            .events
            .iter()
            .copied()
            .filter(|e| quantum_check(e.charge).multiple >= 1)
            .collect(),
    }
}

/// Total Cooper pairs over all switching events.
pub fn quanta(train: &SpikeTrain) -> i64 {
    train
        .charges()
        .map(|q| quantum_check(q).multiple.max(0))
        .sum()
}

pub fn simulate(
    label: &str,
    ast: NetlistAst,
    cfg: &SolverConfig,
) -> Result<ScenarioRun, HarnessError> {
    let c = elaborate(&ast)?;
    let waveforms = tran_circuit(&c, cfg)?;
    let det = DetectorConfig::default();
    let trains = waveforms
        .channels
        .iter()
        .filter(|(n, _)| n.starts_with("i("))
        .map(|(n, y)| detect_pulses(n, &waveforms.time, y, &det))
        .collect();
    Ok(ScenarioRun {
        label: label.to_string(),
        netlist: ast,
        waveforms,
        trains,
    })
}

fn fmt_quanta(q: f64) -> String {
    format!("{:.4}x2e", q / TWO_E)
}

/// Input pulse start times.
fn input_starts(delay: f64, period: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| delay + k as f64 * period).collect()
}

pub fn fig2(cfg: &SolverConfig) -> Result<FigureRun, HarnessError> {
    let p = NeuronParams {
        tstop: 4200.0,
        ..NeuronParams::default()
    };
    let n = p.n_threshold;
    let run = simulate("fig2", build_neuron(&p)?, cfg)?;
    let inputs = p.input.count_before(p.tstop);
    let starts = input_starts(p.input.delay, p.input.period, inputs + 1);
    let fires = switching(run.train("i(vout)").expect("output probe"));
    let expected = inputs / n;
    let mut checks = vec![Check::new(
        "firing count",
        format!("{expected} (floor({inputs}/{n}))"),
        fires.len().to_string(),
        fires.len() == expected,
    )];
    let on_time = fires
        .events
        .iter()
        .enumerate()
        .all(|(j, e)| e.t_peak > starts[n * (j + 1) - 1] && e.t_peak < starts[n * (j + 1)]);
    checks.push(Check::new(
        "fires after every Nth input",
        format!("firing j between inputs {n}j and {n}j+1"),
        format!("{:?}", fires.peak_times()),
        on_time,
    ));
    let cycles = run.cycles("i(vout)");
    let target = n as f64 * TWO_E;
    let worst = cycles
        .iter()
        .map(|q| (q - target).abs() / target)
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "charge per firing cycle",
        format!("{} within 1%", fmt_quanta(target)),
        cycles
            .iter()
            .map(|q| fmt_quanta(*q))
            .collect::<Vec<_>>()
            .join(" "),
        !cycles.is_empty() && worst < 0.01,
    ));
    let window: Vec<String> = fires.charges().map(fmt_quanta).collect();
    let per = n as f64 * cycles.iter().sum::<f64>() / cycles.len().max(1) as f64 / target;
    let summary = vec![
        format!(
            "fires every {n}th input ({} firings / {inputs} inputs); {:.2}e per firing cycle",
            fires.len(),
            2.0 * per
        ),
        format!("firing-burst window charges: {}", window.join(" ")),
    ];
    Ok(FigureRun {
        id: "fig2".into(),
        runs: vec![run],
        checks,
        summary,
    })
}

fn binary(id: &str, state: usize, cfg: &SolverConfig) -> Result<FigureRun, HarnessError> {
    let p = SynapseBinaryParams::with_state(state);
    let run = simulate(id, build_binary_synapse(&p)?, cfg)?;
    let inputs = p.input.count_before(p.tstop);
    let out = run.train("i(vout)").expect("output probe");
    let pulses = quanta(out);
    let (weight, expected) = if state == 0 {
        (1, inputs as i64)
    } else {
        (0, 0)
    };
    let checks = vec![Check::new(
        "output pulses",
        expected.to_string(),
        pulses.to_string(),
        pulses == expected,
    )];
    let summary = vec![format!(
        "{pulses} output pulses for {inputs} inputs (weight {weight}, Ic = {} uA)",
        p.ic_states[state]
    )];
    Ok(FigureRun {
        id: id.into(),
        runs: vec![run],
        checks,
        summary,
    })
}

fn multi_run(
    state: usize,
    cfg: &SolverConfig,
) -> Result<(ScenarioRun, i64, usize, f64), HarnessError> {
    let p = SynapseMultiParams::with_state(state);
    let label = format!("fig6{}", (b'a' + state as u8) as char);
    let run = simulate(&label, build_multistate_synapse(&p)?, cfg)?;
    let count = quanta(run.train("i(vout)").expect("output probe"));
    Ok((
        run,
        count,
        p.input.count_before(p.tstop),
        p.ic_j2_states[state],
    ))
}

fn fig6_single(state: usize, cfg: &SolverConfig) -> Result<FigureRun, HarnessError> {
    let (run, count, inputs, ic) = multi_run(state, cfg)?;
    let summary = vec![format!(
        "Ic(J2) = {ic} uA: {count} output pulses for {inputs} inputs ({:.2} per input)",
        count as f64 / inputs as f64
    )];
    Ok(FigureRun {
        id: run.label.clone(),
        runs: vec![run],
        checks: Vec::new(),
        summary,
    })
}

/// All four J2 states; counts must fall strictly until they reach zero.
pub fn fig6(cfg: &SolverConfig) -> Result<FigureRun, HarnessError> {
    use rayon::prelude::*;
    let results: Vec<_> = (0..4).into_par_iter().map(|s| multi_run(s, cfg)).collect();
    let mut runs = Vec::new();
    let mut counts = Vec::new();
    let mut summary = Vec::new();
    for r in results {
        let (run, count, inputs, ic) = r?;
        summary.push(format!(
            "Ic(J2) = {ic} uA: {count} output pulses for {inputs} inputs"
        ));
        counts.push(count);
        runs.push(run);
    }
    let zero_at = counts.iter().position(|c| *c == 0);
    let decreasing = match zero_at {
        Some(z) => {
            counts[..=z].windows(2).all(|w| w[0] > w[1]) && counts[z..].iter().all(|c| *c == 0)
        }
        None => false,
    };
    let checks = vec![
        Check::new(
            "strictly decreasing to zero",
            "c(10) > c(50) > c(350) > c(400) = 0",
            format!("{counts:?}"),
            decreasing,
        ),
        Check::new(
            "largest Ic blocks",
            "0",
            counts[3].to_string(),
            counts[3] == 0,
        ),
    ];
    Ok(FigureRun {
        id: "fig6".into(),
        runs,
        checks,
        summary,
    })
}

pub fn network(
    id: &str,
    spec: &NetworkSpec,
    cfg: &SolverConfig,
) -> Result<FigureRun, HarnessError> {
    let run = simulate(id, build_network(spec)?, cfg)?;
    let n = spec.neuron.n_threshold;
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for j in 0..spec.n_outputs {
        let name = format!("i({})", NetworkSpec::output_name(j).to_lowercase());
        let fires = switching(run.train(&name).expect("output probe")).len();
        let delivered = spec.delivered_pulses(j);
        let expected = delivered / n;
        checks.push(Check::new(
            format!("neuron {} firings", j + 1),
            format!("{expected} +/- 1 (floor({delivered}/{n}))"),
            fires.to_string(),
            fires.abs_diff(expected) <= 1,
        ));
        summary.push(format!(
            "neuron {} weights {:?}: {fires} firings for {delivered} weighted input pulses",
            j + 1,
            spec.weights[j]
        ));
    }
    Ok(FigureRun {
        id: id.into(),
        runs: vec![run],
        checks,
        summary,
    })
}

pub fn run_figure(id: &str, cfg: &SolverConfig) -> Result<FigureRun, HarnessError> {
    match id {
        "fig2" => fig2(cfg),
        "fig4a" => binary(id, 0, cfg),
        "fig4b" => binary(id, 1, cfg),
        "fig6" => fig6(cfg),
        "fig6a" => fig6_single(0, cfg),
        "fig6b" => fig6_single(1, cfg),
        "fig6c" => fig6_single(2, cfg),
        "fig6d" => fig6_single(3, cfg),
        "fig8" => network(
            id,
            &NetworkSpec::with_weights(vec![vec![1, 1, 1], vec![0, 1, 1]]),
            cfg,
        ),
        "fig9" => network(
            id,
            &NetworkSpec::with_weights(vec![vec![1, 0, 1], vec![0, 0, 1]]),
            cfg,
        ),
        "fig8-zero" => network(
            id,
            &NetworkSpec::with_weights(vec![vec![0, 0, 0], vec![0, 0, 0]]),
            cfg,
        ),
        other => Err(HarnessError::Input(format!(
            "unknown figure `{other}` (expected one of {})",
            FIGURE_IDS.join(", ")
        ))),
    }
}
