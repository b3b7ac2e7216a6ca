//! Static operating point.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::devices::{DeviceModel, DeviceState};
use crate::netlist::Circuit;
use crate::units::TWO_E;

use super::mna::{newton, Layout, NewtonFailure, System};
use super::{EngineError, SolverConfig};

const RAMP_STEPS: usize = 10;
/// Largest phase change one DC Newton update may make.
const MAX_DC_PHASE_STEP: f64 = PI / 4.0;

/// DC solution. Capacitors are open, inductors shorted.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Node voltages by node index; entry 0 is ground.
    pub node_voltages: Vec<f64>,
    /// Per-device branch current (µA), zero for blocked QPSJs.
    pub currents: Vec<f64>,
    /// Per-device initial dynamic state for a transient run.
    pub states: Vec<DeviceState>,
    /// True when junction states were held at their initial values because
    /// no static equilibrium was found.
    pub junctions_fixed: bool,
}

impl OperatingPoint {
    pub fn voltage(&self, c: &Circuit, node: &str) -> Option<f64> {
        c.node_index(node).map(|i| self.node_voltages[i])
    }

    pub fn current(&self, c: &Circuit, device: &str) -> Option<f64> {
        c.device_index(device).map(|i| self.currents[i])
    }
}

/// Solve the static circuit, retrying with source stepping from zero.
pub fn dc_operating_point(c: &Circuit, cfg: &SolverConfig) -> Result<OperatingPoint, EngineError> {
    cfg.validate()?;
    solve(c, cfg, false)
}

/// Operating point with every junction's state pinned to its initial value.
pub(crate) fn frozen_operating_point(
    c: &Circuit,
    cfg: &SolverConfig,
) -> Result<OperatingPoint, EngineError> {
    solve(c, cfg, true)
}

fn solve(c: &Circuit, cfg: &SolverConfig, fixed: bool) -> Result<OperatingPoint, EngineError> {
    let layout = Layout::dc(c);
    let mut sys = System::new(layout.size);
    let mut x0 = DVector::zeros(layout.size);
    for (idx, d) in c.devices.iter().enumerate() {
        if let (Some(k), false) = (layout.branch[idx], fixed) {
            match &d.model {
                DeviceModel::Qpsj(p) => x0[k] = p.q0,
                m if m.is_junction() => x0[k] = m.jj_params().expect("junction").phi_init,
                _ => {}
            }
        }
    }

    let run = |scale: f64, x: &DVector<f64>, sys: &mut System| {
        newton(
            &layout,
            cfg,
            x,
            sys,
            |x, sys| assemble_dc(c, &layout, x, scale, cfg.gmin, fixed, sys),
            |_, delta| limit_phase(c, &layout, fixed, delta),
        )
    };

    let x = match run(1.0, &x0, &mut sys) {
        Ok(x) => x,
        Err(_) => {
            let mut x = x0.clone();
            for step in 1..=RAMP_STEPS {
                let scale = step as f64 / RAMP_STEPS as f64;
                x = run(scale, &x, &mut sys).map_err(|f: NewtonFailure| {
                    EngineError::DcConvergence {
                        location: layout.describe_row(c, f.worst_row),
                        residual: f.residual,
                    }
                })?;
            }
            x
        }
    };
    Ok(finish(c, &layout, &x, fixed))
}

fn limit_phase(c: &Circuit, layout: &Layout, fixed: bool, delta: &mut DVector<f64>) {
    if fixed {
        return;
    }
    let mut worst: f64 = 0.0;
    for (idx, d) in c.devices.iter().enumerate() {
        let Some(k) = layout.branch[idx] else {
            continue;
        };
        let dtheta = match &d.model {
            DeviceModel::Qpsj(_) => 2.0 * PI * delta[k] / TWO_E,
            m if m.is_junction() => delta[k],
            _ => continue,
        };
        worst = worst.max(dtheta.abs());
    }
    if worst > MAX_DC_PHASE_STEP {
        *delta *= MAX_DC_PHASE_STEP / worst;
    }
}

/// Static stamps with every source scaled by `scale`.
///
/// Free junctions: a QPSJ carries no current and its row pins the branch
/// voltage to `Vc·sin(2πq/2e)`; a JJ is a short whose phase sets the current
/// `Ic·sinφ`. Fixed junctions keep their initial state and keep only their
/// resistive parts.
fn assemble_dc(
    c: &Circuit,
    layout: &Layout,
    x: &DVector<f64>,
    scale: f64,
    gmin: f64,
    fixed: bool,
    sys: &mut System,
) {
    sys.clear();
    for (idx, d) in c.devices.iter().enumerate() {
        let [na, nb] = d.nodes;
        let k = layout.branch[idx];
        match &d.model {
            DeviceModel::Resistor { r } => sys.norton(na, nb, 1.0 / r, 0.0),
            DeviceModel::Capacitor { .. } => {}
            DeviceModel::ISource(s) => sys.norton(na, nb, 0.0, scale * s.value_at(0.0)),
            DeviceModel::VSource(s) => {
                let k = k.expect("branch");
                sys.branch_kcl(na, nb, k, 1.0);
                sys.branch_row(na, nb, k, 0.0, scale * s.value_at(0.0));
            }
            DeviceModel::Inductor { .. } => {
                // A tiny series resistance keeps superconducting loops
                // (junction-inductor-junction) from making the rows dependent.
                let k = k.expect("branch");
                sys.branch_kcl(na, nb, k, 1.0);
                sys.branch_row(na, nb, k, gmin, 0.0);
            }
            DeviceModel::Qpsj(p) => {
                let k = k.expect("branch");
                if fixed {
                    let v0 = p.vc * (2.0 * PI * p.q0 / TWO_E).sin();
                    sys.branch_kcl(na, nb, k, 1.0);
                    sys.branch_row(na, nb, k, p.rn, v0);
                } else {
                    let q = x[k];
                    let theta = 2.0 * PI * q / TWO_E;
                    let slope = p.vc * theta.cos() * 2.0 * PI / TWO_E;
                    sys.branch_row(na, nb, k, slope, p.vc * theta.sin() - slope * q);
                }
            }
            m @ (DeviceModel::Jj(_) | DeviceModel::Mjj(_)) => {
                let p = m.jj_params().expect("junction");
                let k = k.expect("branch");
                if fixed {
                    // Branch unknown is the junction current; cj is open.
                    sys.branch_kcl(na, nb, k, 1.0);
                    sys.branch_row(na, nb, k, p.rn, -p.rn * p.ic * p.phi_init.sin());
                } else {
                    let phi = x[k];
                    let slope = p.ic * phi.cos();
                    sys.branch_kcl(na, nb, k, slope);
                    let i_eq = p.ic * phi.sin() - slope * phi;
                    if na > 0 {
                        sys.b[na - 1] -= i_eq;
                    }
                    if nb > 0 {
                        sys.b[nb - 1] += i_eq;
                    }
                    sys.branch_row(na, nb, k, 0.0, 0.0);
                }
            }
        }
        if d.model.is_junction() {
            sys.norton(na, nb, gmin, 0.0);
        }
    }
    // Nodes reached only through elements that carry no static current
    // of their own float.
    let mut anchored = vec![false; layout.n_nodes + 1];
    for d in &c.devices {
        if !matches!(
            d.model,
            DeviceModel::Capacitor { .. } | DeviceModel::ISource(_) | DeviceModel::Qpsj(_)
        ) {
            anchored[d.nodes[0]] = true;
            anchored[d.nodes[1]] = true;
        }
    }
    for n in 1..=layout.n_nodes {
        if !anchored[n] {
            sys.norton(n, 0, gmin, 0.0);
        }
    }
}

fn finish(c: &Circuit, layout: &Layout, x: &DVector<f64>, fixed: bool) -> OperatingPoint {
    let node_voltages: Vec<f64> = (0..c.node_count()).map(|n| layout.volt(x, n)).collect();
    let mut currents = vec![0.0; c.devices.len()];
    let mut states = vec![DeviceState::Stateless; c.devices.len()];
    for (idx, d) in c.devices.iter().enumerate() {
        let [na, nb] = d.nodes;
        let v = node_voltages[na] - node_voltages[nb];
        let k = layout.branch[idx];
        match &d.model {
            DeviceModel::Resistor { r } => currents[idx] = v / r,
            DeviceModel::Capacitor { .. } => states[idx] = DeviceState::Capacitor { v, i: 0.0 },
            DeviceModel::ISource(s) => currents[idx] = s.value_at(0.0),
            DeviceModel::VSource(_) => currents[idx] = x[k.expect("branch")],
            DeviceModel::Inductor { .. } => {
                let i = x[k.expect("branch")];
                currents[idx] = i;
                states[idx] = DeviceState::Inductor { i, v: 0.0 };
            }
            DeviceModel::Qpsj(p) => {
                let k = k.expect("branch");
                let (q, i) = if fixed { (p.q0, x[k]) } else { (x[k], 0.0) };
                currents[idx] = i;
                states[idx] = DeviceState::Qpsj { q, i, v_l: 0.0 };
            }
            m => {
                let p = m.jj_params().expect("junction");
                let k = k.expect("branch");
                let (phi, i) = if fixed {
                    (p.phi_init, x[k])
                } else {
                    (x[k], p.ic * x[k].sin())
                };
                currents[idx] = i;
                states[idx] = DeviceState::Junction { phi, v, i_cap: 0.0 };
            }
        }
    }
    OperatingPoint {
        node_voltages,
        currents,
        states,
        junctions_fixed: fixed,
    }
}
