//! Syntax tree produced by the parser. Values here are plain SI.

use std::collections::BTreeMap;
use std::fmt;

/// Device kinds understood by the dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceKind {
    Resistor,
    Inductor,
    Capacitor,
    VSource,
    ISource,
    Qpsj,
    Jj,
    Mjj,
}

impl DeviceKind {
    /// Keyword-style devices carry their name as a separate token.
    pub fn keyword(self) -> Option<&'static str> {
        match self {
            DeviceKind::Qpsj => Some("qpsj"),
            DeviceKind::Jj => Some("jj"),
            DeviceKind::Mjj => Some("mjj"),
            _ => None,
        }
    }

    /// Junction kinds get gmin across their terminals in the engine.
    pub fn is_junction(self) -> bool {
        matches!(self, DeviceKind::Qpsj | DeviceKind::Jj | DeviceKind::Mjj)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeviceKind::Resistor => "resistor",
            DeviceKind::Inductor => "inductor",
            DeviceKind::Capacitor => "capacitor",
            DeviceKind::VSource => "voltage source",
            DeviceKind::ISource => "current source",
            DeviceKind::Qpsj => "qpsj",
            DeviceKind::Jj => "jj",
            DeviceKind::Mjj => "mjj",
        };
        f.write_str(s)
    }
}

/// Source waveform in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    Dc(f64),
    /// SPICE `pulse(v1 v2 td tr tf pw per)`; `per == 0` means a single pulse.
    Pulse {
        v1: f64,
        v2: f64,
        td: f64,
        tr: f64,
        tf: f64,
        pw: f64,
        per: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

impl ParamValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ParamValue::Scalar(v) => Some(*v),
            ParamValue::List(_) => None,
        }
    }
}

/// One device line.
///
/// Two-terminal linear devices store their value under `"value"`; sources
/// store their waveform in `waveform`; junction cards store their
/// `key=value` parameters by lower-cased key.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCard {
    pub kind: DeviceKind,
    pub name: String,
    pub nodes: [String; 2],
    pub params: BTreeMap<String, ParamValue>,
    pub waveform: Option<Waveform>,
    /// First physical line of the card (1-based).
    pub line: usize,
}

impl DeviceCard {
    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(ParamValue::as_scalar)
    }
}

/// Output probe named in `.save`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Probe {
    Voltage(String),
    Current(String),
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probe::Voltage(n) => write!(f, "v({n})"),
            Probe::Current(d) => write!(f, "i({d})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Tran { tstep: f64, tstop: f64, tstart: f64 },
    Save(Vec<Probe>),
    End,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetlistAst {
    pub title: String,
    pub cards: Vec<DeviceCard>,
    pub directives: Vec<Directive>,
}

impl NetlistAst {
    /// `(tstep, tstop, tstart)` of the single `.tran` directive.
    pub fn tran(&self) -> Option<(f64, f64, f64)> {
        self.directives.iter().find_map(|d| match d {
            Directive::Tran {
                tstep,
                tstop,
                tstart,
            } => Some((*tstep, *tstop, *tstart)),
            _ => None,
        })
    }

    pub fn probes(&self) -> impl Iterator<Item = &Probe> {
        self.directives.iter().flat_map(|d| match d {
            Directive::Save(p) => p.as_slice(),
            _ => &[],
        })
    }

    pub fn count_kind(&self, kind: DeviceKind) -> usize {
        self.cards.iter().filter(|c| c.kind == kind).count()
    }

    pub fn card(&self, name: &str) -> Option<&DeviceCard> {
        self.cards
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn card_mut(&mut self, name: &str) -> Option<&mut DeviceCard> {
        self.cards
            .iter_mut()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Replace the `.tran` directive, adding one if missing.
    pub fn set_tran(&mut self, tstep: f64, tstop: f64, tstart: f64) {
        let new = Directive::Tran {
            tstep,
            tstop,
            tstart,
        };
        if let Some(d) = self
            .directives
            .iter_mut()
            .find(|d| matches!(d, Directive::Tran { .. }))
        {
            *d = new;
        } else {
            let at = self
                .directives
                .iter()
                .position(|d| matches!(d, Directive::End))
                .unwrap_or(self.directives.len());
            self.directives.insert(at, new);
        }
    }
}
