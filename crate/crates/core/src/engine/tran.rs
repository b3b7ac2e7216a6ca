//! Transient analysis on a fixed output grid with internal sub-stepping.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::devices::{advance, DeviceState, IntegrationMethod};
use crate::netlist::{Circuit, ProbeTarget};
use crate::units::TWO_E;

use super::dc::{dc_operating_point, frozen_operating_point, OperatingPoint};
use super::mna::{assemble_tran, newton, Layout, System};
use super::{EngineError, SolverConfig, WaveformSet};

/// Extra halvings allowed for phase-step control beyond the Newton limit.
const EXTRA_ACCURACY_HALVINGS: u32 = 6;
/// Accepted steps at a comfortable phase advance before the step doubles.
const GROW_AFTER: u32 = 4;

struct Stepper<'a> {
    c: &'a Circuit,
    cfg: &'a SolverConfig,
    layout: Layout,
    sys: System,
    currents: Vec<f64>,
}

struct Accepted {
    x: DVector<f64>,
    states: Vec<DeviceState>,
    currents: Vec<f64>,
    max_dtheta: f64,
}

impl<'a> Stepper<'a> {
    fn step(
        &mut self,
        x_prev: &DVector<f64>,
        states: &[DeviceState],
        t: f64,
        h: f64,
        method: IntegrationMethod,
    ) -> Result<Accepted, (usize, f64)> {
        let (c, layout, gmin) = (self.c, &self.layout, self.cfg.gmin);
        let x = newton(
            layout,
            self.cfg,
            x_prev,
            &mut self.sys,
            |x, sys| assemble_tran(c, layout, states, x, h, method, t, gmin, sys, None),
            |_, _| {},
        )
        .map_err(|f| (f.worst_row, f.residual))?;
        assemble_tran(
            c,
            layout,
            states,
            &x,
            h,
            method,
            t,
            gmin,
            &mut self.sys,
            Some(&mut self.currents),
        );

        let mut next = Vec::with_capacity(states.len());
        let mut max_dtheta: f64 = 0.0;
        for (idx, d) in c.devices.iter().enumerate() {
            let [na, nb] = d.nodes;
            let v = layout.volt(&x, na) - layout.volt(&x, nb);
            let s = advance(&d.model, &states[idx], h, method, v, self.currents[idx]);
            let dtheta = match (states[idx], s) {
                (DeviceState::Qpsj { q: a, .. }, DeviceState::Qpsj { q: b, .. }) => {
                    2.0 * PI * (b - a) / TWO_E
                }
                (DeviceState::Junction { phi: a, .. }, DeviceState::Junction { phi: b, .. }) => {
                    b - a
                }
                _ => 0.0,
            };
            max_dtheta = max_dtheta.max(dtheta.abs());
            next.push(s);
        }
        Ok(Accepted {
            x,
            states: next,
            currents: self.currents.clone(),
            max_dtheta,
        })
    }
}

fn sample(c: &Circuit, x_nodes: &[f64], currents: &[f64]) -> Vec<f64> {
    c.probes
        .iter()
        .map(|p| match p.target {
            ProbeTarget::Voltage(n) => x_nodes[n],
            ProbeTarget::Current(d) => currents[d],
        })
        .collect()
}

/// Sorted, de-duplicated source corner times in `(0, tstop]`.
fn breakpoints(c: &Circuit, tstop: f64) -> Vec<f64> {
    let mut all: Vec<f64> = c
        .sources()
        .flat_map(|(_, s)| s.breakpoints(tstop))
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    all
}

/// Initial state for the run: the DC operating point, or junctions held at
/// their initial values when the circuit has no static equilibrium.
fn initial_point(c: &Circuit, cfg: &SolverConfig) -> Result<OperatingPoint, EngineError> {
    match dc_operating_point(c, cfg) {
        Ok(op) => Ok(op),
        Err(EngineError::DcConvergence { .. })
            if c.devices.iter().any(|d| d.model.is_junction()) =>
        {
            frozen_operating_point(c, cfg)
        }
        Err(e) => Err(e),
    }
}

/// Simulate from 0 to `tstop`, reporting probes every `tstep` from the
/// first grid point at or after `tstart`.
pub fn tran(
    c: &Circuit,
    tstep: f64,
    tstop: f64,
    tstart: f64,
    cfg: &SolverConfig,
) -> Result<WaveformSet, EngineError> {
    cfg.validate()?;
    if !(tstep > 0.0 && tstop > tstep && tstep.is_finite() && tstop.is_finite()) {
        return Err(EngineError::Request(format!(
            "need 0 < tstep < tstop, got tstep={tstep} tstop={tstop}"
        )));
    }
    if !(tstart >= 0.0 && tstart < tstop) {
        return Err(EngineError::Request(format!(
            "tstart {tstart} outside [0, tstop)"
        )));
    }
    let op = initial_point(c, cfg)?;
    let layout = Layout::tran(c);
    let mut x = DVector::zeros(layout.size);
    for n in 1..c.node_count() {
        x[n - 1] = op.node_voltages[n];
    }
    for (idx, b) in layout.branch.iter().enumerate() {
        if let Some(k) = b {
            x[*k] = op.currents[idx];
        }
    }
    let mut states = op.states.clone();
    let mut currents = op.currents.clone();
    let n_out = (tstop / tstep + 1e-9).floor() as usize;
    let bps = breakpoints(c, tstop);
    let mut bp_idx = 0;

    let mut out = WaveformSet::new(c.probes.iter().map(|p| p.name.clone()));
    let node_v =
        |x: &DVector<f64>| -> Vec<f64> { (0..c.node_count()).map(|n| layout.volt(x, n)).collect() };
    if tstart <= 0.0 {
        out.push(0.0, &sample(c, &op.node_voltages, &currents));
    }

    let mut stepper = Stepper {
        c,
        cfg,
        currents: vec![0.0; c.devices.len()],
        sys: System::new(layout.size),
        layout: Layout::tran(c),
    };
    let max_level = cfg.halving_limit + EXTRA_ACCURACY_HALVINGS;
    let mut level: u32 = 0;
    let mut calm: u32 = 0;
    let mut be_steps: u32 = 1;
    let mut failures: u32 = 0;
    let mut t = 0.0;

    for k in 1..=n_out {
        let target = k as f64 * tstep;
        while target - t > 1e-9 * tstep {
            while bp_idx < bps.len() && bps[bp_idx] <= t + 1e-9 * tstep {
                bp_idx += 1;
            }
            let mut h = (tstep / f64::from(1u32 << level)).min(target - t);
            if bp_idx < bps.len() && bps[bp_idx] < t + h {
                h = bps[bp_idx] - t;
            }
            let t_new = if (target - (t + h)).abs() <= 1e-9 * tstep {
                target
            } else {
                t + h
            };
            let method = if be_steps > 0 {
                IntegrationMethod::BackwardEuler
            } else {
                cfg.method
            };
            let accepted = {
                match stepper.step(&x, &states, t_new, h, method) {
                    Ok(a) if a.max_dtheta > cfg.max_phase_step && level < max_level => {
                        level += 1;
                        calm = 0;
                        None
                    }
                    Ok(a) => Some(a),
                    Err((row, _)) => {
                        failures += 1;
                        if failures > cfg.halving_limit || level >= max_level {
                            return Err(EngineError::Newton {
                                time: t_new,
                                halvings: failures - 1,
                                location: stepper.layout.describe_row(c, row),
                            });
                        }
                        level += 1;
                        calm = 0;
                        be_steps = 2;
                        None
                    }
                }
            };
            let Some(a) = accepted else { continue };
            if let Some(idx) = a.states.iter().position(|s| !s.is_finite()) {
                return Err(EngineError::NonFinite {
                    time: t_new,
                    device: c.devices[idx].name.clone(),
                });
            }
            failures = 0;
            t = t_new;
            x = a.x;
            states = a.states;
            currents = a.currents;
            be_steps = be_steps.saturating_sub(1);
            if a.max_dtheta < 0.5 * cfg.max_phase_step {
                calm += 1;
                if calm >= GROW_AFTER && level > 0 {
                    level -= 1;
                    calm = 0;
                }
            } else {
                calm = 0;
            }
        }
        t = target;
        if target >= tstart - 1e-9 * tstep {
            out.push(target, &sample(c, &node_v(&x), &currents));
        }
    }
    Ok(out)
}

/// Convenience: run with the circuit's own `.tran` settings.
pub fn tran_circuit(c: &Circuit, cfg: &SolverConfig) -> Result<WaveformSet, EngineError> {
    tran(c, c.tran.tstep, c.tran.tstop, c.tran.tstart, cfg)
}

/// Mean of `values` over the grid by the trapezoidal rule.
#[cfg(test)]
fn mean(time: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..time.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (time[i] - time[i - 1]);
    }
    acc / (time[time.len() - 1] - time[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::load;

    #[test]
    fn rc_step() {
        let c =
            load("t\nV1 1 0 pulse(0 1m 0 0 0 1n 0)\nR1 1 2 10k\nC1 2 0 1f\n.tran 0.1p 60p\n.end")
                .unwrap();
        let w = tran_circuit(&c, &SolverConfig::default()).unwrap();
        let v = w.get("v(2)").unwrap();
        for (t, v) in w.time.iter().zip(v).skip(1) {
            let expect = 1.0 - (-t / 10.0).exp();
            assert!(
                (v - expect).abs() <= 0.005 * expect.max(1e-3) + 1e-6,
                "t={t}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn qpsj_blockade() {
        let c =
            load("t\nV1 1 0 dc 0.5m\nqpsj Q1 1 0 vc=0.7m rn=10k ls=0.1n\n.tran 0.1p 200p\n.end")
                .unwrap();
        let cfg = SolverConfig::default();
        let w = tran_circuit(&c, &cfg).unwrap();
        assert!(w
            .get("i(q1)")
            .unwrap()
            .iter()
            .all(|i| i.abs() < cfg.abstol_i));
    }

    #[test]
    fn overdriven_qpsj_oscillates() {
        let c =
            load("t\nV1 1 0 dc 1.4m\nqpsj Q1 1 0 vc=0.7m rn=10k ls=0.1n\n.tran 0.05p 400p\n.end")
                .unwrap();
        let w = tran_circuit(&c, &SolverConfig::default()).unwrap();
        let i = w.get("i(q1)").unwrap();
        let avg = mean(&w.time[2000..], &i[2000..]);
        let expect = (1.4f64.powi(2) - 0.49).sqrt() / 10.0;
        assert!((avg - expect).abs() < 0.01 * expect, "{avg} vs {expect}");
    }

    #[test]
    fn running_jj_mean_voltage() {
        let c = load("t\nI1 0 1 dc 400u\njj B1 1 0 ic=200u rn=5 cj=1e-18\n.tran 0.01p 100p\n.end")
            .unwrap();
        let w = tran_circuit(&c, &SolverConfig::default()).unwrap();
        let v = w.get("v(1)").unwrap();
        let n = w.len();
        let avg = mean(&w.time[n / 5..], &v[n / 5..]);
        let expect = 0.005 * (400f64.powi(2) - 200f64.powi(2)).sqrt();
        assert!((avg - expect).abs() < 0.01 * expect, "{avg} vs {expect}");
    }

    #[test]
    fn rejects_bad_grid() {
        let c = load("t\nV1 1 0 dc 1m\nR1 1 0 1k\n.tran 1p 10p\n.end").unwrap();
        assert!(tran(&c, 0.0, 10.0, 0.0, &SolverConfig::default()).is_err());
        assert!(tran(&c, 10.0, 5.0, 0.0, &SolverConfig::default()).is_err());
    }
}
