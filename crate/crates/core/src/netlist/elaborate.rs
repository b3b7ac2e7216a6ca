//! AST → [`Circuit`]: node numbering, unit scaling and physicality checks.

use std::collections::{BTreeMap, HashMap};

use crate::devices::{DeviceModel, JjParams, MjjParams, QpsjParams, Source};
use crate::units::Dimension;

use super::ast::{DeviceCard, DeviceKind, Directive, NetlistAst, ParamValue, Probe, Waveform};
use super::{NetlistError, NetlistErrorKind};

/// Ground node name and index.
pub const GROUND: &str = "0";

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceInstance {
    pub name: String,
    pub kind: DeviceKind,
    /// `[n+, n-]`; index 0 is ground.
    pub nodes: [usize; 2],
    pub model: DeviceModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeTarget {
    Voltage(usize),
    Current(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedProbe {
    /// Channel name, e.g. `v(1)` or `i(q0)`.
    pub name: String,
    pub target: ProbeTarget,
}

/// Transient request in ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranSpec {
    pub tstep: f64,
    pub tstop: f64,
    pub tstart: f64,
}

/// An elaborated, simulatable circuit. Parameters are in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub title: String,
    /// Node names by index; `node_names[0]` is ground.
    pub node_names: Vec<String>,
    pub devices: Vec<DeviceInstance>,
    pub probes: Vec<ResolvedProbe>,
    pub tran: TranSpec,
}

impl Circuit {
    /// Number of nodes including ground.
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        let name = name.to_ascii_lowercase();
        self.node_names.iter().position(|n| *n == name)
    }

    pub fn device_index(&self, name: &str) -> Option<usize> {
        self.devices
            .iter()
            .position(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn device(&self, name: &str) -> Option<&DeviceInstance> {
        self.device_index(name).map(|i| &self.devices[i])
    }

    pub fn count_kind(&self, kind: DeviceKind) -> usize {
        self.devices.iter().filter(|d| d.kind == kind).count()
    }

    /// Independent sources, in netlist order.
    pub fn sources(&self) -> impl Iterator<Item = (&DeviceInstance, &Source)> {
        self.devices.iter().filter_map(|d| match &d.model {
            DeviceModel::VSource(s) | DeviceModel::ISource(s) => Some((d, s)),
            _ => None,
        })
    }

    /// Replace the probe list, resolving names against this circuit.
    pub fn set_probes(&mut self, probes: &[Probe]) -> Result<(), NetlistErrorKind> {
        self.probes = resolve_probes(probes, &self.node_names, &self.devices)?;
        Ok(())
    }

    /// Back to an AST in SI units.
    pub fn to_ast(&self) -> NetlistAst {
        let mut cards = Vec::with_capacity(self.devices.len());
        for (i, d) in self.devices.iter().enumerate() {
            let nodes = [
                self.node_names[d.nodes[0]].clone(),
                self.node_names[d.nodes[1]].clone(),
            ];
            let mut params = BTreeMap::new();
            let mut waveform = None;
            let mut scalar = |k: &str, dim: Dimension, v: f64| {
                params.insert(k.to_string(), ParamValue::Scalar(dim.to_si(v)));
            };
            match &d.model {
                DeviceModel::Resistor { r } => scalar("value", Dimension::Resistance, *r),
                DeviceModel::Inductor { l } => scalar("value", Dimension::Inductance, *l),
                DeviceModel::Capacitor { c } => scalar("value", Dimension::Capacitance, *c),
                DeviceModel::VSource(s) => {
                    waveform = Some(waveform_to_si(s.waveform, Dimension::Voltage))
                }
                DeviceModel::ISource(s) => {
                    waveform = Some(waveform_to_si(s.waveform, Dimension::Current))
                }
                DeviceModel::Qpsj(p) => {
                    scalar("vc", Dimension::Voltage, p.vc);
                    scalar("rn", Dimension::Resistance, p.rn);
                    scalar("ls", Dimension::Inductance, p.ls);
                    if p.q0 != 0.0 {
                        scalar("q0", Dimension::Charge, p.q0);
                    }
                }
                DeviceModel::Jj(p) => {
                    scalar("ic", Dimension::Current, p.ic);
                    scalar("rn", Dimension::Resistance, p.rn);
                    scalar("cj", Dimension::Capacitance, p.cj);
                    if p.phi_init != 0.0 {
                        scalar("phi0", Dimension::Dimensionless, p.phi_init);
                    }
                }
                DeviceModel::Mjj(p) => {
                    scalar("state", Dimension::Dimensionless, p.active_state as f64);
                    scalar("rn", Dimension::Resistance, p.rn);
                    scalar("cj", Dimension::Capacitance, p.cj);
                    if p.phi_init != 0.0 {
                        scalar("phi0", Dimension::Dimensionless, p.phi_init);
                    }
                    params.insert(
                        "states".into(),
                        ParamValue::List(
                            p.states
                                .iter()
                                .map(|s| Dimension::Current.to_si(*s))
                                .collect(),
                        ),
                    );
                }
            }
            cards.push(DeviceCard {
                kind: d.kind,
                name: d.name.clone(),
                nodes,
                params,
                waveform,
                line: i + 2,
            });
        }
        let t = Dimension::Time;
        let directives = vec![
            Directive::Save(
                self.probes
                    .iter()
                    .map(|p| match p.target {
                        ProbeTarget::Voltage(n) => Probe::Voltage(self.node_names[n].clone()),
                        ProbeTarget::Current(d) => Probe::Current(self.devices[d].name.clone()),
                    })
                    .collect(),
            ),
            Directive::Tran {
                tstep: t.to_si(self.tran.tstep),
                tstop: t.to_si(self.tran.tstop),
                tstart: t.to_si(self.tran.tstart),
            },
            Directive::End,
        ];
        NetlistAst {
            title: self.title.clone(),
            cards,
            directives,
        }
    }
}

fn waveform_to_si(w: Waveform, dim: Dimension) -> Waveform {
    map_waveform(w, |v| dim.to_si(v), |t| Dimension::Time.to_si(t))
}

fn waveform_from_si(w: Waveform, dim: Dimension) -> Waveform {
    map_waveform(w, |v| dim.from_si(v), |t| Dimension::Time.from_si(t))
}

fn map_waveform(w: Waveform, val: impl Fn(f64) -> f64, time: impl Fn(f64) -> f64) -> Waveform {
    match w {
        Waveform::Dc(v) => Waveform::Dc(val(v)),
        Waveform::Pulse {
            v1,
            v2,
            td,
            tr,
            tf,
            pw,
            per,
        } => Waveform::Pulse {
            v1: val(v1),
            v2: val(v2),
            td: time(td),
            tr: time(tr),
            tf: time(tf),
            pw: time(pw),
            per: time(per),
        },
    }
}

fn resolve_probes(
    probes: &[Probe],
    node_names: &[String],
    devices: &[DeviceInstance],
) -> Result<Vec<ResolvedProbe>, NetlistErrorKind> {
    if probes.is_empty() {
        let mut out: Vec<ResolvedProbe> = (1..node_names.len())
            .map(|n| ResolvedProbe {
                name: format!("v({})", node_names[n]),
                target: ProbeTarget::Voltage(n),
            })
            .collect();
        out.extend(devices.iter().enumerate().map(|(i, d)| ResolvedProbe {
            name: format!("i({})", d.name.to_ascii_lowercase()),
            target: ProbeTarget::Current(i),
        }));
        return Ok(out);
    }
    probes
        .iter()
        .map(|p| match p {
            Probe::Voltage(n) => {
                let n = n.to_ascii_lowercase();
                node_names
                    .iter()
                    .position(|x| *x == n)
                    .map(|idx| ResolvedProbe {
                        name: format!("v({n})"),
                        target: ProbeTarget::Voltage(idx),
                    })
                    .ok_or(NetlistErrorKind::UnknownNode(n))
            }
            Probe::Current(d) => devices
                .iter()
                .position(|x| x.name.eq_ignore_ascii_case(d))
                .map(|idx| ResolvedProbe {
                    name: format!("i({})", d.to_ascii_lowercase()),
                    target: ProbeTarget::Current(idx),
                })
                .ok_or_else(|| NetlistErrorKind::UnknownProbeDevice(d.clone())),
        })
        .collect()
}

fn scalar(card: &DeviceCard, key: &str, dim: Dimension) -> Result<f64, NetlistError> {
    match card.params.get(key) {
        Some(ParamValue::Scalar(v)) => Ok(dim.from_si(*v)),
        Some(ParamValue::List(_)) => Err(NetlistError {
            line: card.line,
            kind: NetlistErrorKind::Syntax(format!(
                "parameter `{key}` of `{}` must be a single value",
                card.name
            )),
        }),
        None => Err(NetlistError {
            line: card.line,
            kind: NetlistErrorKind::MissingParam {
                device: card.name.clone(),
                param: key.to_string(),
            },
        }),
    }
}

fn optional(card: &DeviceCard, key: &str, dim: Dimension) -> Result<f64, NetlistError> {
    if card.params.contains_key(key) {
        scalar(card, key, dim)
    } else {
        Ok(0.0)
    }
}

fn model_for(card: &DeviceCard) -> Result<DeviceModel, NetlistError> {
    let syntax = |msg: String| NetlistError {
        line: card.line,
        kind: NetlistErrorKind::Syntax(msg),
    };
    let model = match card.kind {
        DeviceKind::Resistor => DeviceModel::Resistor {
            r: scalar(card, "value", Dimension::Resistance)?,
        },
        DeviceKind::Inductor => DeviceModel::Inductor {
            l: scalar(card, "value", Dimension::Inductance)?,
        },
        DeviceKind::Capacitor => DeviceModel::Capacitor {
            c: scalar(card, "value", Dimension::Capacitance)?,
        },
        DeviceKind::VSource | DeviceKind::ISource => {
            let w = card
                .waveform
                .ok_or_else(|| syntax(format!("source `{}` has no waveform", card.name)))?;
            if card.kind == DeviceKind::VSource {
                DeviceModel::VSource(Source {
                    waveform: waveform_from_si(w, Dimension::Voltage),
                })
            } else {
                DeviceModel::ISource(Source {
                    waveform: waveform_from_si(w, Dimension::Current),
                })
            }
        }
        DeviceKind::Qpsj => DeviceModel::Qpsj(QpsjParams {
            vc: scalar(card, "vc", Dimension::Voltage)?,
            rn: scalar(card, "rn", Dimension::Resistance)?,
            ls: scalar(card, "ls", Dimension::Inductance)?,
            q0: optional(card, "q0", Dimension::Charge)?,
        }),
        DeviceKind::Jj => DeviceModel::Jj(JjParams {
            ic: scalar(card, "ic", Dimension::Current)?,
            rn: scalar(card, "rn", Dimension::Resistance)?,
            cj: scalar(card, "cj", Dimension::Capacitance)?,
            phi_init: optional(card, "phi0", Dimension::Dimensionless)?,
        }),
        DeviceKind::Mjj => {
            let states = match card.params.get("states") {
                Some(ParamValue::List(v)) => {
                    v.iter().map(|s| Dimension::Current.from_si(*s)).collect()
                }
                Some(ParamValue::Scalar(v)) => vec![Dimension::Current.from_si(*v)],
                None => unreachable!("parser enforces required mjj parameters"),
            };
            let idx = scalar(card, "state", Dimension::Dimensionless)?;
            if idx < 0.0 || idx.fract() != 0.0 {
                return Err(syntax(format!(
                    "state of `{}` must be a non-negative integer",
                    card.name
                )));
            }
            DeviceModel::Mjj(MjjParams {
                states,
                active_state: idx as usize,
                rn: scalar(card, "rn", Dimension::Resistance)?,
                cj: scalar(card, "cj", Dimension::Capacitance)?,
                phi_init: optional(card, "phi0", Dimension::Dimensionless)?,
            })
        }
    };
    model.validate().map_err(|source| NetlistError {
        line: card.line,
        kind: NetlistErrorKind::Device {
            device: card.name.clone(),
            source,
        },
    })?;
    Ok(model)
}

/// Map names to dense node indices, scale parameters and check the circuit.
pub fn elaborate(ast: &NetlistAst) -> Result<Circuit, NetlistError> {
    let mut node_names = vec![GROUND.to_string()];
    let mut index: HashMap<String, usize> = HashMap::from([(GROUND.to_string(), 0)]);
    let mut refs: Vec<(usize, usize)> = vec![(0, 0)];
    let mut devices = Vec::with_capacity(ast.cards.len());

    for card in &ast.cards {
        let mut nodes = [0usize; 2];
        for (slot, name) in nodes.iter_mut().zip(&card.nodes) {
            let name = name.to_ascii_lowercase();
            let idx = *index.entry(name.clone()).or_insert_with(|| {
                node_names.push(name);
                refs.push((0, card.line));
                node_names.len() - 1
            });
            refs[idx].0 += 1;
            *slot = idx;
        }
        devices.push(DeviceInstance {
            name: card.name.clone(),
            kind: card.kind,
            nodes,
            model: model_for(card)?,
        });
    }

    for (idx, &(count, line)) in refs.iter().enumerate().skip(1) {
        if count < 2 {
            return Err(NetlistError {
                line,
                kind: NetlistErrorKind::DanglingNode(node_names[idx].clone()),
            });
        }
    }

    let (tstep, tstop, tstart) = ast.tran().ok_or(NetlistError {
        line: 1,
        kind: NetlistErrorKind::MissingTran,
    })?;
    let probes: Vec<Probe> = ast.probes().cloned().collect();
    let save_line = ast
        .directives
        .iter()
        .position(|d| matches!(d, Directive::Save(_)))
        .map(|_| ast.cards.len() + 1)
        .unwrap_or(1);
    let probes = resolve_probes(&probes, &node_names, &devices).map_err(|kind| NetlistError {
        line: save_line,
        kind,
    })?;
    let t = Dimension::Time;
    Ok(Circuit {
        title: ast.title.clone(),
        node_names,
        devices,
        probes,
        tran: TranSpec {
            tstep: t.from_si(tstep),
            tstop: t.from_si(tstop),
            tstart: t.from_si(tstart),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{load, parse_netlist};

    #[test]
    fn scales_to_internal_units() {
        let c = load(
            "t\nV1 a 0 dc 1m\nR1 a b 9k\nqpsj Q0 b 0 vc=0.7m rn=10k ls=0.1n\n.tran 0.1p 1n\n.end",
        )
        .unwrap();
        assert_eq!(c.node_count(), 3);
        assert_eq!(c.node_names, vec!["0", "a", "b"]);
        assert!(
            matches!(c.devices[1].model, DeviceModel::Resistor { r } if (r - 9.0).abs() < 1e-12)
        );
        let DeviceModel::Qpsj(q) = &c.devices[2].model else {
            panic!()
        };
        assert!((q.vc - 0.7).abs() < 1e-12);
        assert!((q.rn - 10.0).abs() < 1e-12);
        assert!((q.ls - 0.1).abs() < 1e-12);
        assert!((c.tran.tstep - 0.1).abs() < 1e-12);
        assert!((c.tran.tstop - 1000.0).abs() < 1e-9);
        // Default save list: every node voltage and device current.
        assert_eq!(c.probes.len(), 2 + 3);
    }

    #[test]
    fn dangling_node() {
        let e = load("t\nV1 1 0 dc 1m\nR1 1 0 1k\nR2 1 5 1k\n.tran 1p 1n\n.end").unwrap_err();
        assert_eq!(e.kind, NetlistErrorKind::DanglingNode("5".into()));
        assert_eq!(e.line, 4);
    }

    #[test]
    fn physicality() {
        let e = load("t\nC1 1 0 -2f\nR1 1 0 1k\n.tran 1p 1n\n.end").unwrap_err();
        assert!(matches!(e.kind, NetlistErrorKind::Device { .. }), "{e}");
        assert_eq!(e.line, 2);
        for bad in [
            "R1 1 0 0",
            "L1 1 0 -1n",
            "qpsj q 1 0 vc=0 rn=1k ls=0",
            "qpsj q 1 0 vc=1m rn=-1k ls=0",
            "jj b 1 0 ic=0 rn=1 cj=0",
            "mjj m 1 0 states=1u,2u state=2 rn=1 cj=0",
            "mjj m 1 0 states=1u,2u state=0.5 rn=1 cj=0",
        ] {
            let text = format!("t\n{bad}\nR9 1 0 1k\n.tran 1p 1n\n.end");
            assert!(load(&text).is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn save_resolution() {
        let c = load("t\nV1 1 0 dc 1m\nR1 1 0 1k\n.save v(1) i(r1)\n.tran 1p 1n\n.end").unwrap();
        assert_eq!(c.probes.len(), 2);
        assert_eq!(c.probes[0].target, ProbeTarget::Voltage(1));
        assert_eq!(c.probes[1].name, "i(r1)");
        assert!(load("t\nV1 1 0 dc 1m\nR1 1 0 1k\n.save v(7)\n.tran 1p 1n\n.end").is_err());
        assert!(load("t\nV1 1 0 dc 1m\nR1 1 0 1k\n.save i(R7)\n.tran 1p 1n\n.end").is_err());
    }

    #[test]
    fn round_trip_through_text() {
        let text = "rt\nVin in 0 pulse(0 0.8m 10p 0.5p 0.5p 3p 120p)\nIb 0 j dc 140u\nR1 in j 12.7\nmjj J1 j 0 states=200u,300u state=1 rn=5 cj=0.1p\nqpsj Q1 j out vc=0.7m rn=10k ls=0.1n q0=1e-20\nL1 out 0 10p\nC1 out 0 5f\n.save v(j) i(Q1)\n.tran 0.1p 200p\n.end\n";
        let a = load(text).unwrap();
        let b = load(&a.to_ast().to_string()).unwrap();
        assert!(crate::netlist::writer::circuits_equivalent(&a, &b, 1e-12));
        let again = parse_netlist(&a.to_ast().to_string()).unwrap();
        assert_eq!(again.cards.len(), 7);
    }
}
