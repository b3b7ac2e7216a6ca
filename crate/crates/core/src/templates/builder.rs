//! Small helper for emitting AST cards from scaled-unit values.

use std::collections::BTreeMap;

use crate::netlist::{DeviceCard, DeviceKind, Directive, NetlistAst, ParamValue, Probe, Waveform};
use crate::units::Dimension;

/// Input pulse train, scaled units (mV, ps).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseTrain {
    pub amplitude: f64,
    /// Flat-top width.
    pub width: f64,
    pub period: f64,
    pub delay: f64,
    /// Rise and fall time.
    pub edge: f64,
}

impl PulseTrain {
    pub fn new(amplitude: f64, width: f64, period: f64) -> Self {
        Self {
            amplitude,
            width,
            period,
            delay: 10.0,
            edge: 0.5,
        }
    }

    /// Pulses whose rising edge starts before `tstop`.
    pub fn count_before(&self, tstop: f64) -> usize {
        if tstop <= self.delay {
            0
        } else {
            ((tstop - self.delay) / self.period).ceil() as usize
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if !(self.width > 0.0 && self.period > 0.0 && self.delay >= 0.0 && self.edge >= 0.0) {
            return Err(
                "pulse width and period must be positive, delay and edge non-negative".into(),
            );
        }
        if self.period < self.width + 2.0 * self.edge {
            return Err(format!(
                "pulse period {} ps shorter than the pulse",
                self.period
            ));
        }
        if !self.amplitude.is_finite() {
            return Err("pulse amplitude must be finite".into());
        }
        Ok(())
    }
}

pub(crate) struct Builder {
    ast: NetlistAst,
}

impl Builder {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            ast: NetlistAst {
                title: title.into(),
                ..NetlistAst::default()
            },
        }
    }

    fn push(
        &mut self,
        kind: DeviceKind,
        name: &str,
        a: &str,
        b: &str,
        params: BTreeMap<String, ParamValue>,
        waveform: Option<Waveform>,
    ) {
        let line = self.ast.cards.len() + 2;
        self.ast.cards.push(DeviceCard {
            kind,
            name: name.to_string(),
            nodes: [a.to_string(), b.to_string()],
            params,
            waveform,
            line,
        });
    }

    fn value(&mut self, kind: DeviceKind, name: &str, a: &str, b: &str, v: f64, dim: Dimension) {
        let params = BTreeMap::from([("value".to_string(), ParamValue::Scalar(dim.to_si(v)))]);
        self.push(kind, name, a, b, params, None);
    }

    /// kΩ
    pub fn r(&mut self, name: &str, a: &str, b: &str, r: f64) {
        self.value(DeviceKind::Resistor, name, a, b, r, Dimension::Resistance);
    }

    /// fF
    pub fn c(&mut self, name: &str, a: &str, b: &str, c: f64) {
        self.value(DeviceKind::Capacitor, name, a, b, c, Dimension::Capacitance);
    }

    /// nH
    pub fn l(&mut self, name: &str, a: &str, b: &str, l: f64) {
        self.value(DeviceKind::Inductor, name, a, b, l, Dimension::Inductance);
    }

    pub fn vdc(&mut self, name: &str, a: &str, b: &str, v: f64) {
        let w = Waveform::Dc(Dimension::Voltage.to_si(v));
        self.push(DeviceKind::VSource, name, a, b, BTreeMap::new(), Some(w));
    }

    pub fn idc(&mut self, name: &str, a: &str, b: &str, i: f64) {
        let w = Waveform::Dc(Dimension::Current.to_si(i));
        self.push(DeviceKind::ISource, name, a, b, BTreeMap::new(), Some(w));
    }

    pub fn vpulse(&mut self, name: &str, a: &str, b: &str, p: &PulseTrain) {
        let v = |x: f64| Dimension::Voltage.to_si(x);
        let t = |x: f64| Dimension::Time.to_si(x);
        let w = Waveform::Pulse {
            v1: 0.0,
            v2: v(p.amplitude),
            td: t(p.delay),
            tr: t(p.edge),
            tf: t(p.edge),
            pw: t(p.width),
            per: t(p.period),
        };
        self.push(DeviceKind::VSource, name, a, b, BTreeMap::new(), Some(w));
    }

    pub fn qpsj(&mut self, name: &str, a: &str, b: &str, vc: f64, rn: f64, ls: f64) {
        let params = BTreeMap::from([
            (
                "vc".to_string(),
                ParamValue::Scalar(Dimension::Voltage.to_si(vc)),
            ),
            (
                "rn".to_string(),
                ParamValue::Scalar(Dimension::Resistance.to_si(rn)),
            ),
            (
                "ls".to_string(),
                ParamValue::Scalar(Dimension::Inductance.to_si(ls)),
            ),
        ]);
        self.push(DeviceKind::Qpsj, name, a, b, params, None);
    }

    pub fn jj(&mut self, name: &str, a: &str, b: &str, ic: f64, rn: f64, cj: f64) {
        let params = BTreeMap::from([
            (
                "ic".to_string(),
                ParamValue::Scalar(Dimension::Current.to_si(ic)),
            ),
            (
                "rn".to_string(),
                ParamValue::Scalar(Dimension::Resistance.to_si(rn)),
            ),
            (
                "cj".to_string(),
                ParamValue::Scalar(Dimension::Capacitance.to_si(cj)),
            ),
        ]);
        self.push(DeviceKind::Jj, name, a, b, params, None);
    }

    #[allow(clippy::too_many_arguments)]
    pub fn mjj(
        &mut self,
        name: &str,
        a: &str,
        b: &str,
        states: &[f64],
        state: usize,
        rn: f64,
        cj: f64,
    ) {
        let params = BTreeMap::from([
            (
                "states".to_string(),
                ParamValue::List(
                    states
                        .iter()
                        .map(|s| Dimension::Current.to_si(*s))
                        .collect(),
                ),
            ),
            ("state".to_string(), ParamValue::Scalar(state as f64)),
            (
                "rn".to_string(),
                ParamValue::Scalar(Dimension::Resistance.to_si(rn)),
            ),
            (
                "cj".to_string(),
                ParamValue::Scalar(Dimension::Capacitance.to_si(cj)),
            ),
        ]);
        self.push(DeviceKind::Mjj, name, a, b, params, None);
    }

    pub fn finish(mut self, probes: Vec<Probe>, tstep: f64, tstop: f64) -> NetlistAst {
        let t = Dimension::Time;
        self.ast.directives = vec![
            Directive::Save(probes),
            Directive::Tran {
                tstep: t.to_si(tstep),
                tstop: t.to_si(tstop),
                tstart: 0.0,
            },
            Directive::End,
        ];
        self.ast
    }
}
