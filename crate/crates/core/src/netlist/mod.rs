//! Netlist dialect: parsing, elaboration into a [`Circuit`], and writing.
//!
//! ```text
//! neuron test
//! Vin in 0 pulse(0 0.8m 10p 0.5p 0.5p 3p 120p)
//! qpsj Q0 in 1 vc=0.7m rn=10k ls=0.1n
//! C1 1 0 13f
//! .save v(1) i(Q0)
//! .tran 0.1p 1n
//! .end
//! ```

mod ast;
mod elaborate;
mod parser;
pub mod value;
mod writer;

use thiserror::Error;

pub use ast::{DeviceCard, DeviceKind, Directive, NetlistAst, ParamValue, Probe, Waveform};
pub use elaborate::{elaborate, Circuit, DeviceInstance, ProbeTarget, ResolvedProbe, TranSpec};
pub use parser::parse_netlist;
pub use value::{parse_value, ValueError};
pub use writer::circuits_equivalent;

/// A diagnostic pinned to a (1-based) netlist line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct NetlistError {
    pub line: usize,
    pub kind: NetlistErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistErrorKind {
    #[error("unknown device kind `{0}`")]
    UnknownDevice(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("device `{device}` is missing required parameter `{param}`")]
    MissingParam { device: String, param: String },
    #[error("device `{device}` has no parameter `{param}`")]
    UnknownParam { device: String, param: String },
    #[error("duplicate device name `{name}` (first defined on line {first_line})")]
    DuplicateName { name: String, first_line: usize },
    #[error("missing .end")]
    MissingEnd,
    #[error("missing .tran")]
    MissingTran,
    #[error("second .tran directive (first on line {first_line})")]
    DuplicateTran { first_line: usize },
    #[error("content after .end (line {end_line})")]
    AfterEnd { end_line: usize },
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("{0}")]
    Syntax(String),
    #[error("node `{0}` is connected to a single terminal")]
    DanglingNode(String),
    #[error("device `{device}`: {source}")]
    Device {
        device: String,
        #[source]
        source: crate::devices::DeviceError,
    },
    #[error(".save refers to unknown node `{0}`")]
    UnknownNode(String),
    #[error(".save refers to unknown device `{0}`")]
    UnknownProbeDevice(String),
}

/// Parse and elaborate in one go.
pub fn load(text: &str) -> Result<Circuit, NetlistError> {
    elaborate(&parse_netlist(text)?)
}
