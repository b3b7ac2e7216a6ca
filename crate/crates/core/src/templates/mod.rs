//! Builders for the neuron, synapse and small-network circuits.
//!
//! All parameters are in scaled units (mV, µA, kΩ, fF, nH, ps); the emitted
//! [`NetlistAst`] is SI like any parsed netlist.

mod builder;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{NetlistAst, Probe};
use crate::units::TWO_E;

use builder::Builder;
pub use builder::PulseTrain;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("invalid parameter `{param}`: {reason}")]
    Invalid { param: &'static str, reason: String },
    #[error("weight matrix is {rows}x{cols}, expected {n_outputs}x{n_inputs}")]
    Dimensions {
        rows: usize,
        cols: usize,
        n_outputs: usize,
        n_inputs: usize,
    },
}

fn invalid(param: &'static str, reason: impl Into<String>) -> TemplateError {
    TemplateError::Invalid {
        param,
        reason: reason.into(),
    }
}

fn positive(param: &'static str, v: f64) -> Result<(), TemplateError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(param, format!("must be positive, got {v}")))
    }
}

fn pulse_ok(param: &'static str, p: &PulseTrain) -> Result<(), TemplateError> {
    p.validate().map_err(|r| invalid(param, r))
}

/// Q·2π/2e of a QPSJ held at voltage `v` in blockade.
fn blockade_charge(v: f64, vc: f64) -> f64 {
    TWO_E / (2.0 * std::f64::consts::PI) * (v / vc).clamp(-1.0, 1.0).asin()
}

/// Threshold neuron: input QPSJ Q0 charging a storage island, N parallel
/// QPSJs discharging it to a biased output rail.
///
/// The output rail sits at `-vb`; the island rests at the midpoint of the
/// `rb`/`rd` divider, reached through the large `r_leak`. Output current is
/// read from the zero-volt source `Vout` between the rail and the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuronParams {
    pub n_threshold: usize,
    pub vc: f64,
    pub vb: f64,
    pub rn_q0: f64,
    pub rn_parallel: f64,
    pub rb: f64,
    pub rd: f64,
    pub r_leak: f64,
    /// `None` picks the value that makes the Nth input cross threshold.
    pub c_store: Option<f64>,
    pub ls: f64,
    pub input: PulseTrain,
    pub tstep: f64,
    pub tstop: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            n_threshold: 10,
            vc: 0.7,
            vb: 1.0,
            rn_q0: 10.0,
            rn_parallel: 15.0,
            rb: 9.0,
            rd: 9.0,
            r_leak: 1e5,
            c_store: None,
            ls: 0.1,
            input: PulseTrain::new(0.8, 3.0, 120.0),
            tstep: 0.1,
            tstop: 3000.0,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.n_threshold < 1 {
            return Err(invalid("n_threshold", "must be at least 1"));
        }
        for (name, v) in [
            ("vc", self.vc),
            ("vb", self.vb),
            ("rn_q0", self.rn_q0),
            ("rn_parallel", self.rn_parallel),
            ("rb", self.rb),
            ("rd", self.rd),
            ("r_leak", self.r_leak),
            ("ls", self.ls),
            ("tstep", self.tstep),
            ("tstop", self.tstop),
        ] {
            positive(name, v)?;
        }
        if let Some(c) = self.c_store {
            positive("c_store", c)?;
        }
        pulse_ok("input", &self.input)?;
        if self.rest_voltage() + self.vb >= self.vc {
            return Err(invalid(
                "vb",
                "parallel junctions are out of blockade at rest",
            ));
        }
        Ok(())
    }

    /// Island voltage with no stored charge.
    pub fn rest_voltage(&self) -> f64 {
        -self.vb * self.rd / (self.rb + self.rd)
    }

    /// Storage capacitance (fF): explicit value or [`store_capacitance`]
    /// for one feeder junction from a grounded input.
    pub fn c_store(&self) -> f64 {
        self.c_store.unwrap_or_else(|| {
            store_capacitance(self.n_threshold, 1, self.vc, self.vb, self.rest_voltage())
        })
    }
}

/// Capacitance that places the firing threshold half a quantum past the
/// (N-1)th input.
///
/// Charge on the island is `C·v` plus the polarization of the junctions in
/// blockade: `feeders` junctions from grounded nodes into the island and
/// `n` junctions from the island to the rail at `-vb`. The island loses
/// its static solution when the parallel junctions reach `vc`.
pub fn store_capacitance(n: usize, feeders: usize, vc: f64, vb: f64, v_rest: f64) -> f64 {
    let polarization =
        |v: f64| n as f64 * blockade_charge(v + vb, vc) - feeders as f64 * blockade_charge(-v, vc);
    let v_th = vc - vb;
    let needed = (n as f64 - 0.5) * TWO_E - (polarization(v_th) - polarization(v_rest));
    needed / (v_th - v_rest)
}

/// Add one neuron with island `isl`; returns the output ammeter name.
fn neuron_core(b: &mut Builder, p: &NeuronParams, tag: &str, isl: &str, c_store: f64) -> String {
    let (mid, rail, bias) = (format!("m{tag}"), format!("o{tag}"), format!("b{tag}"));
    b.c(&format!("C{tag}"), isl, "0", c_store);
    b.r(&format!("Rl{tag}"), &mid, isl, p.r_leak);
    b.r(&format!("Rb{tag}"), &bias, &mid, p.rb);
    b.r(&format!("Rd{tag}"), &mid, "0", p.rd);
    b.vdc(&format!("Vb{tag}"), &bias, "0", -p.vb);
    let out = format!("Vout{tag}");
    b.vdc(&out, &rail, &bias, 0.0);
    for k in 1..=p.n_threshold {
        b.qpsj(
            &format!("Q{tag}_{k}"),
            isl,
            &rail,
            p.vc,
            p.rn_parallel,
            p.ls,
        );
    }
    out
}

pub fn build_neuron(p: &NeuronParams) -> Result<NetlistAst, TemplateError> {
    p.validate()?;
    let mut b = Builder::new(format!("qpsj neuron N={}", p.n_threshold));
    b.vpulse("Vin", "in", "0", &p.input);
    b.qpsj("Q0", "in", "1", p.vc, p.rn_q0, p.ls);
    let out = neuron_core(&mut b, p, "", "1", p.c_store());
    let probes = vec![
        Probe::Voltage("in".into()),
        Probe::Voltage("1".into()),
        Probe::Current("Q0".into()),
        Probe::Current(out),
    ];
    let parallel = (1..=p.n_threshold).map(|k| Probe::Current(format!("Q_{k}")));
    Ok(b.finish(
        probes.into_iter().chain(parallel).collect(),
        p.tstep,
        p.tstop,
    ))
}

/// Binary synapse: input through R1, L1 into the MJJ J1; J1's phase slip
/// pushes one Cooper pair through Q1 to the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynapseBinaryParams {
    pub ic_states: [f64; 2],
    /// Index into `ic_states`; 0 is weight "1".
    pub state: usize,
    pub ib: f64,
    pub vc: f64,
    pub vin_amplitude: f64,
    pub r1: f64,
    pub l1: f64,
    pub rn_j1: f64,
    pub cj_j1: f64,
    pub rn_q1: f64,
    pub ls: f64,
    /// Q1 bias below ground (mV).
    pub vb_q1: f64,
    pub input: PulseTrain,
    pub tstep: f64,
    pub tstop: f64,
}

impl Default for SynapseBinaryParams {
    fn default() -> Self {
        Self {
            ic_states: [200.0, 300.0],
            state: 0,
            ib: 140.0,
            vc: 0.7,
            vin_amplitude: 1.4,
            r1: 0.0127,
            l1: 0.01,
            rn_j1: 0.005,
            cj_j1: 20.0,
            rn_q1: 10.0,
            ls: 0.1,
            vb_q1: 0.49,
            input: PulseTrain::new(1.4, 3.0, 100.0),
            tstep: 0.05,
            tstop: 1100.0,
        }
    }
}

impl SynapseBinaryParams {
    pub fn with_state(state: usize) -> Self {
        Self {
            state,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let [lo, hi] = self.ic_states;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(invalid(
                "ic_states",
                format!("need 0 < low < high, got {lo}, {hi}"),
            ));
        }
        if self.state > 1 {
            return Err(invalid("state", format!("{} is not 0 or 1", self.state)));
        }
        for (name, v) in [
            ("ib", self.ib),
            ("vc", self.vc),
            ("vin_amplitude", self.vin_amplitude),
            ("r1", self.r1),
            ("l1", self.l1),
            ("rn_j1", self.rn_j1),
            ("cj_j1", self.cj_j1),
            ("rn_q1", self.rn_q1),
            ("ls", self.ls),
            ("tstep", self.tstep),
            ("tstop", self.tstop),
        ] {
            positive(name, v)?;
        }
        if !(self.vb_q1 >= 0.0 && self.vb_q1 < self.vc) {
            return Err(invalid("vb_q1", "must lie in [0, vc)"));
        }
        pulse_ok("input", &self.input)
    }

    fn pulse(&self) -> PulseTrain {
        PulseTrain {
            amplitude: self.vin_amplitude,
            ..self.input
        }
    }
}

/// Input coupling and J1 of one binary synapse; returns J1's node.
fn binary_front(b: &mut Builder, p: &SynapseBinaryParams, tag: &str, input: &str) -> String {
    let (a, j) = (format!("a{tag}"), format!("s{tag}"));
    b.r(&format!("R1{tag}"), input, &a, p.r1);
    b.l(&format!("L1{tag}"), &a, &j, p.l1);
    b.idc(&format!("Ib{tag}"), "0", &j, p.ib);
    b.mjj(
        &format!("J1{tag}"),
        &j,
        "0",
        &p.ic_states,
        p.state,
        p.rn_j1,
        p.cj_j1,
    );
    j
}

pub fn build_binary_synapse(p: &SynapseBinaryParams) -> Result<NetlistAst, TemplateError> {
    p.validate()?;
    let mut b = Builder::new(format!("binary synapse state={}", p.state));
    b.vpulse("Vin", "in", "0", &p.pulse());
    let j = binary_front(&mut b, p, "", "in");
    b.qpsj("Q1", &j, "out", p.vc, p.rn_q1, p.ls);
    b.vdc("Vout", "out", "bq", 0.0);
    b.vdc("Vb", "bq", "0", -p.vb_q1);
    let probes = vec![
        Probe::Voltage("in".into()),
        Probe::Voltage(j),
        Probe::Current("J1".into()),
        Probe::Current("Vout".into()),
    ];
    Ok(b.finish(probes, p.tstep, p.tstop))
}

/// Multi-state synapse: J1 switches once per input; its flux quantum is
/// stored in L2 and released through the MJJ J2, whose critical current
/// sets how many Cooper pairs Q1 passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynapseMultiParams {
    pub ic_j1: f64,
    pub ib: f64,
    pub vc: f64,
    pub ic_j2_states: Vec<f64>,
    pub state: usize,
    pub l2: f64,
    pub vin_amplitude: f64,
    pub r1: f64,
    pub l1: f64,
    pub rn_j1: f64,
    pub cj: f64,
    /// J2's normal resistance follows Ic so that Ic·Rn stays fixed (mV).
    pub icrn_j2: f64,
    pub rn_q1: f64,
    pub ls: f64,
    pub vb_q1: f64,
    pub input: PulseTrain,
    pub tstep: f64,
    pub tstop: f64,
}

impl Default for SynapseMultiParams {
    fn default() -> Self {
        Self {
            ic_j1: 200.0,
            ib: 160.0,
            vc: 0.7,
            ic_j2_states: vec![10.0, 50.0, 350.0, 400.0],
            state: 0,
            l2: 0.002,
            vin_amplitude: 3.0,
            r1: 0.0127,
            l1: 0.01,
            rn_j1: 0.005,
            cj: 20.0,
            icrn_j2: 0.4,
            rn_q1: 4.0,
            ls: 0.1,
            vb_q1: 0.49,
            input: PulseTrain::new(3.0, 3.0, 100.0),
            tstep: 0.05,
            tstop: 800.0,
        }
    }
}

impl SynapseMultiParams {
    pub fn with_state(state: usize) -> Self {
        Self {
            state,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let s = &self.ic_j2_states;
        if s.is_empty()
            || s[0] <= 0.0
            || s.windows(2).any(|w| !(w[0] < w[1]))
            || !s.iter().all(|v| v.is_finite())
        {
            return Err(invalid(
                "ic_j2_states",
                "must be positive and strictly increasing",
            ));
        }
        if self.state >= s.len() {
            return Err(invalid(
                "state",
                format!("{} out of range for {} states", self.state, s.len()),
            ));
        }
        for (name, v) in [
            ("ic_j1", self.ic_j1),
            ("ib", self.ib),
            ("vc", self.vc),
            ("l2", self.l2),
            ("vin_amplitude", self.vin_amplitude),
            ("r1", self.r1),
            ("l1", self.l1),
            ("rn_j1", self.rn_j1),
            ("cj", self.cj),
            ("icrn_j2", self.icrn_j2),
            ("rn_q1", self.rn_q1),
            ("ls", self.ls),
            ("tstep", self.tstep),
            ("tstop", self.tstop),
        ] {
            positive(name, v)?;
        }
        if !(self.vb_q1 >= 0.0 && self.vb_q1 < self.vc) {
            return Err(invalid("vb_q1", "must lie in [0, vc)"));
        }
        pulse_ok("input", &self.input)
    }
}

pub fn build_multistate_synapse(p: &SynapseMultiParams) -> Result<NetlistAst, TemplateError> {
    p.validate()?;
    let ic2 = p.ic_j2_states[p.state];
    let mut b = Builder::new(format!("multi-state synapse Ic2={ic2}u"));
    b.vpulse(
        "Vin",
        "in",
        "0",
        &PulseTrain {
            amplitude: p.vin_amplitude,
            ..p.input
        },
    );
    b.r("R1", "in", "a", p.r1);
    b.l("L1", "a", "1", p.l1);
    b.idc("Ib", "0", "1", p.ib);
    b.jj("J1", "1", "0", p.ic_j1, p.rn_j1, p.cj);
    b.l("L2", "1", "2", p.l2);
    b.mjj(
        "J2",
        "2",
        "0",
        &p.ic_j2_states,
        p.state,
        p.icrn_j2 / ic2,
        p.cj,
    );
    b.qpsj("Q1", "2", "out", p.vc, p.rn_q1, p.ls);
    b.vdc("Vout", "out", "bq", 0.0);
    b.vdc("Vb", "bq", "0", -p.vb_q1);
    let probes = vec![
        Probe::Voltage("1".into()),
        Probe::Voltage("2".into()),
        Probe::Current("L2".into()),
        Probe::Current("Vout".into()),
    ];
    Ok(b.finish(probes, p.tstep, p.tstop))
}

/// Layered network: every input drives one binary synapse per output
/// neuron; synapse Q1 junctions feed the output neuron's island directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub n_inputs: usize,
    pub n_outputs: usize,
    /// `weights[output][input]`, entries 0 or 1.
    pub weights: Vec<Vec<u8>>,
    /// ps, one per input.
    pub input_periods: Vec<f64>,
    pub neuron: NeuronParams,
    pub synapse: SynapseBinaryParams,
    pub tstep: f64,
    pub tstop: f64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            n_inputs: 3,
            n_outputs: 2,
            weights: vec![vec![1, 1, 1], vec![0, 1, 1]],
            input_periods: vec![60.0, 90.0, 120.0],
            neuron: NeuronParams::default(),
            synapse: SynapseBinaryParams::default(),
            tstep: 0.05,
            tstop: 2500.0,
        }
    }
}

impl NetworkSpec {
    pub fn with_weights(weights: Vec<Vec<u8>>) -> Self {
        Self {
            weights,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.n_inputs == 0 || self.n_outputs == 0 {
            return Err(invalid(
                "n_inputs",
                "network needs at least one input and one output",
            ));
        }
        let bad_shape = self.weights.len() != self.n_outputs
            || self.weights.iter().any(|r| r.len() != self.n_inputs);
        if bad_shape {
            return Err(TemplateError::Dimensions {
                rows: self.weights.len(),
                cols: self.weights.first().map_or(0, Vec::len),
                n_outputs: self.n_outputs,
                n_inputs: self.n_inputs,
            });
        }
        if self.weights.iter().flatten().any(|w| *w > 1) {
            return Err(invalid("weights", "entries must be 0 or 1"));
        }
        if self.input_periods.len() != self.n_inputs {
            return Err(invalid(
                "input_periods",
                format!(
                    "{} periods for {} inputs",
                    self.input_periods.len(),
                    self.n_inputs
                ),
            ));
        }
        for (k, per) in self.input_periods.iter().enumerate() {
            pulse_ok("input_periods", &self.input_pulse(k))?;
            positive("input_periods", *per)?;
        }
        positive("tstep", self.tstep)?;
        positive("tstop", self.tstop)?;
        self.neuron.validate()?;
        self.synapse.validate()
    }

    pub fn input_pulse(&self, k: usize) -> PulseTrain {
        PulseTrain {
            amplitude: self.synapse.vin_amplitude,
            period: self.input_periods[k],
            ..self.synapse.input
        }
    }

    /// Pulses from each input that reach output `j` through weight-1
    /// synapses during the run.
    pub fn delivered_pulses(&self, j: usize) -> usize {
        (0..self.n_inputs)
            .filter(|&k| self.weights[j][k] == 1)
            .map(|k| self.input_pulse(k).count_before(self.tstop))
            .sum()
    }

    /// Output ammeter of neuron `j` (0-based).
    pub fn output_name(j: usize) -> String {
        format!("Vout{}", j + 1)
    }
}

pub fn build_network(spec: &NetworkSpec) -> Result<NetlistAst, TemplateError> {
    spec.validate()?;
    let np = &spec.neuron;
    let mut b = Builder::new(format!("{}x{} network", spec.n_inputs, spec.n_outputs));
    for k in 0..spec.n_inputs {
        b.vpulse(
            &format!("Vin{}", k + 1),
            &format!("in{}", k + 1),
            "0",
            &spec.input_pulse(k),
        );
    }
    let c_store = np.c_store.unwrap_or_else(|| {
        store_capacitance(
            np.n_threshold,
            spec.n_inputs,
            np.vc,
            np.vb,
            np.rest_voltage(),
        )
    });
    let mut probes = Vec::new();
    for j in 0..spec.n_outputs {
        let isl = format!("n{}", j + 1);
        for k in 0..spec.n_inputs {
            let syn = SynapseBinaryParams {
                state: usize::from(spec.weights[j][k] == 0),
                ..spec.synapse.clone()
            };
            let tag = format!("_{}{}", k + 1, j + 1);
            let node = binary_front(&mut b, &syn, &tag, &format!("in{}", k + 1));
            b.qpsj(&format!("Q1{tag}"), &node, &isl, syn.vc, syn.rn_q1, syn.ls);
            probes.push(Probe::Current(format!("Q1{tag}")));
        }
        let out = neuron_core(&mut b, np, &(j + 1).to_string(), &isl, c_store);
        probes.push(Probe::Voltage(isl));
        probes.push(Probe::Current(out));
    }
    Ok(b.finish(probes, spec.tstep, spec.tstop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{elaborate, DeviceKind};

    #[test]
    fn neuron_topology() {
        let ast = build_neuron(&NeuronParams::default()).unwrap();
        assert_eq!(ast.count_kind(DeviceKind::Qpsj), 11);
        assert_eq!(ast.count_kind(DeviceKind::Capacitor), 1);
        assert!(elaborate(&ast).is_ok());
        let one = build_neuron(&NeuronParams {
            n_threshold: 1,
            ..NeuronParams::default()
        })
        .unwrap();
        assert_eq!(one.count_kind(DeviceKind::Qpsj), 2);
    }

    #[test]
    fn capacitance_by_hand() {
        // N = 1 with no feeders: C·Δv + Δq_parallel = 2e/2.
        let (vc, vb, rest) = (0.7, 1.0, -0.5);
        let c = store_capacitance(1, 0, vc, vb, rest);
        let dq = TWO_E / (2.0 * std::f64::consts::PI)
            * (std::f64::consts::FRAC_PI_2 - (0.5f64 / 0.7).asin());
        assert!((c * 0.2 + dq - 0.5 * TWO_E).abs() < 1e-12);
        assert!(NeuronParams::default().c_store() > 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        let p = NeuronParams {
            n_threshold: 0,
            ..NeuronParams::default()
        };
        assert!(build_neuron(&p).is_err());
        let s = SynapseBinaryParams {
            ic_states: [300.0, 200.0],
            ..SynapseBinaryParams::default()
        };
        assert!(build_binary_synapse(&s).is_err());
        let m = SynapseMultiParams {
            ic_j2_states: vec![50.0, 10.0],
            ..SynapseMultiParams::default()
        };
        assert!(build_multistate_synapse(&m).is_err());
        let n = NetworkSpec::with_weights(vec![vec![1, 1], vec![0, 1]]);
        assert!(matches!(
            build_network(&n),
            Err(TemplateError::Dimensions { .. })
        ));
        let n = NetworkSpec::with_weights(vec![vec![1, 2, 1], vec![0, 1, 1]]);
        assert!(build_network(&n).is_err());
    }

    #[test]
    fn network_counts() {
        let spec = NetworkSpec::default();
        let ast = build_network(&spec).unwrap();
        assert_eq!(ast.count_kind(DeviceKind::Mjj), 6);
        assert_eq!(ast.count_kind(DeviceKind::Qpsj), 6 + 20);
        let c = elaborate(&ast).unwrap();
        let states: Vec<f64> = c
            .devices
            .iter()
            .filter(|d| d.kind == DeviceKind::Mjj)
            .filter_map(|d| d.model.jj_params().map(|j| j.ic))
            .collect();
        assert_eq!(states.iter().filter(|&&ic| ic > 250.0).count(), 1);
    }
}
