//! Modified nodal analysis and time integration.

mod dc;
mod mna;
mod reference;
mod tran;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::devices::IntegrationMethod;
pub use dc::{dc_operating_point, OperatingPoint};
pub use reference::reference_integrate;
pub use tran::{tran, tran_circuit};

/// Newton and step-control settings. Tolerances are in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub reltol: f64,
    /// mV
    pub abstol_v: f64,
    /// µA
    pub abstol_i: f64,
    pub max_newton_iters: usize,
    /// Conductance placed across every junction (1/kΩ).
    pub gmin: f64,
    pub method: IntegrationMethod,
    /// Halvings allowed after a Newton failure before giving up.
    pub halving_limit: u32,
    /// Largest junction phase advance (rad) accepted in one internal step.
    pub max_phase_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            reltol: 1e-3,
            abstol_v: 1e-6,
            abstol_i: 1e-6,
            max_newton_iters: 50,
            gmin: 1e-9,
            method: IntegrationMethod::Trapezoidal,
            halving_limit: 8,
            max_phase_step: 0.25,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let positive = [
            ("reltol", self.reltol),
            ("abstol_v", self.abstol_v),
            ("abstol_i", self.abstol_i),
            ("max_phase_step", self.max_phase_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EngineError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.gmin >= 0.0 && self.gmin.is_finite()) {
            return Err(EngineError::Config(format!(
                "gmin must be non-negative, got {}",
                self.gmin
            )));
        }
        if self.halving_limit < 1 {
            return Err(EngineError::Config(
                "halving limit must be at least 1".into(),
            ));
        }
        if self.max_newton_iters < 2 {
            return Err(EngineError::Config(
                "max_newton_iters must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Sampled simulation output: time in ps, node voltages in mV, device
/// currents in µA.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaveformSet {
    pub time: Vec<f64>,
    /// Channels in probe order.
    pub channels: Vec<(String, Vec<f64>)>,
}

impl WaveformSet {
    pub fn new(names: impl IntoIterator<Item = String>) -> Self {
        Self {
            time: Vec::new(),
            channels: names.into_iter().map(|n| (n, Vec::new())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }

    /// Channel by name, case-insensitive.
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_slice())
    }

    pub fn push(&mut self, t: f64, values: &[f64]) {
        debug_assert_eq!(values.len(), self.channels.len());
        self.time.push(t);
        for ((_, ch), v) in self.channels.iter_mut().zip(values) {
            ch.push(*v);
        }
    }

    /// Uniform sample spacing, if the grid has at least two points.
    pub fn dt(&self) -> Option<f64> {
        (self.time.len() >= 2).then(|| self.time[1] - self.time[0])
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("invalid analysis request: {0}")]
    Request(String),
    #[error("no DC operating point: largest residual {residual:.3e} at {location}")]
    DcConvergence { location: String, residual: f64 },
    #[error("Newton iteration failed at t = {time:.6} ps after {halvings} step halvings (largest residual at {location})")]
    Newton {
        time: f64,
        halvings: u32,
        location: String,
    },
    #[error("non-finite state in `{device}` at t = {time:.6} ps")]
    NonFinite { time: f64, device: String },
    #[error("reference integrator: {0}")]
    Unsupported(String),
}
