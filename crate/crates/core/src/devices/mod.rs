//! Device parameters, constitutive relations and companion models.
//!
//! All quantities are in the scaled unit system of [`crate::units`].

mod companion;
mod source;

use std::f64::consts::PI;

use thiserror::Error;

use crate::units::{PHI0, TWO_E};

pub(crate) use companion::advance;
pub use companion::{
    companion_stamp, jj_linearize, qpsj_linearize, CompanionStamp, DeviceState, IntegrationMethod,
};
pub use source::Source;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("{param} must be positive, got {value}")]
    NotPositive { param: &'static str, value: f64 },
    #[error("{param} must be non-negative, got {value}")]
    Negative { param: &'static str, value: f64 },
    #[error("{param} must be finite")]
    NonFinite { param: &'static str },
    #[error("state index {index} out of range for {len} states")]
    StateOutOfRange { index: usize, len: usize },
    #[error("mjj needs at least one critical-current state")]
    NoStates,
}

fn positive(param: &'static str, value: f64) -> Result<(), DeviceError> {
    if !value.is_finite() {
        Err(DeviceError::NonFinite { param })
    } else if value <= 0.0 {
        Err(DeviceError::NotPositive { param, value })
    } else {
        Ok(())
    }
}

fn non_negative(param: &'static str, value: f64) -> Result<(), DeviceError> {
    if !value.is_finite() {
        Err(DeviceError::NonFinite { param })
    } else if value < 0.0 {
        Err(DeviceError::Negative { param, value })
    } else {
        Ok(())
    }
}

/// Quantum phase-slip junction: intrinsic junction in series with `rn` and `ls`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpsjParams {
    /// Critical voltage (mV).
    pub vc: f64,
    /// Normal-state series resistance (kΩ).
    pub rn: f64,
    /// Series inductance (nH).
    pub ls: f64,
    /// Initial transported charge (aC).
    pub q0: f64,
}

impl QpsjParams {
    pub fn new(vc: f64, rn: f64, ls: f64) -> Self {
        Self {
            vc,
            rn,
            ls,
            q0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        positive("vc", self.vc)?;
        positive("rn", self.rn)?;
        non_negative("ls", self.ls)?;
        if !self.q0.is_finite() {
            return Err(DeviceError::NonFinite { param: "q0" });
        }
        Ok(())
    }

    pub fn damping(&self) -> f64 {
        damping_parameter(self.vc, self.ls, self.rn).unwrap_or(f64::NAN)
    }
}

/// Resistively and capacitively shunted Josephson junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JjParams {
    /// Critical current (µA).
    pub ic: f64,
    /// Shunt resistance (kΩ).
    pub rn: f64,
    /// Junction capacitance (fF).
    pub cj: f64,
    /// Initial phase (rad).
    pub phi_init: f64,
}

impl JjParams {
    pub fn new(ic: f64, rn: f64, cj: f64) -> Self {
        Self {
            ic,
            rn,
            cj,
            phi_init: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        positive("ic", self.ic)?;
        positive("rn", self.rn)?;
        non_negative("cj", self.cj)?;
        if !self.phi_init.is_finite() {
            return Err(DeviceError::NonFinite { param: "phi0" });
        }
        Ok(())
    }
}

/// Magnetic Josephson junction: an RCSJ junction whose critical current is
/// picked from a fixed list of magnetic states.
#[derive(Debug, Clone, PartialEq)]
pub struct MjjParams {
    /// Critical current per magnetic state (µA).
    pub states: Vec<f64>,
    pub active_state: usize,
    pub rn: f64,
    pub cj: f64,
    pub phi_init: f64,
}

impl MjjParams {
    pub fn new(states: Vec<f64>, active_state: usize, rn: f64, cj: f64) -> Self {
        Self {
            states,
            active_state,
            rn,
            cj,
            phi_init: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.states.is_empty() {
            return Err(DeviceError::NoStates);
        }
        for &s in &self.states {
            positive("states", s)?;
        }
        if self.active_state >= self.states.len() {
            return Err(DeviceError::StateOutOfRange {
                index: self.active_state,
                len: self.states.len(),
            });
        }
        positive("rn", self.rn)?;
        non_negative("cj", self.cj)?;
        Ok(())
    }

    pub fn effective_ic(&self) -> f64 {
        self.states[self.active_state]
    }

    /// The plain junction this MJJ currently behaves as.
    pub fn as_jj(&self) -> JjParams {
        JjParams {
            ic: self.effective_ic(),
            rn: self.rn,
            cj: self.cj,
            phi_init: self.phi_init,
        }
    }
}

/// Select the active magnetic state. Nothing else changes.
pub fn mjj_set_state(p: &MjjParams, idx: usize) -> Result<MjjParams, DeviceError> {
    if idx >= p.states.len() {
        return Err(DeviceError::StateOutOfRange {
            index: idx,
            len: p.states.len(),
        });
    }
    Ok(MjjParams {
        active_state: idx,
        ..p.clone()
    })
}

/// Intrinsic QPSJ voltage `vc·sin(2πq/2e)`.
pub fn qpsj_voltage(q: f64, p: &QpsjParams) -> f64 {
    p.vc * (2.0 * PI * q / TWO_E).sin()
}

/// Josephson supercurrent `ic·sin(φ)`.
pub fn jj_current(phi: f64, p: &JjParams) -> f64 {
    p.ic * phi.sin()
}

/// Damping parameter `2π·vc·l / (2e·r²)` of a QPSJ with series `l` and `r`.
///
/// Inputs in mV, nH and kΩ; the result is dimensionless.
pub fn damping_parameter(vc: f64, l: f64, r: f64) -> Result<f64, DeviceError> {
    if !(r > 0.0) {
        return Err(DeviceError::NotPositive {
            param: "r",
            value: r,
        });
    }
    Ok(2.0 * PI * vc * l / (TWO_E * r * r))
}

/// Josephson frequency of a junction at mean voltage `v` (mV → 1/ps).
pub fn josephson_frequency(v: f64) -> f64 {
    v / PHI0
}

/// Bloch frequency of a QPSJ carrying mean current `i` (µA → 1/ps).
pub fn bloch_frequency(i: f64) -> f64 {
    i / TWO_E
}

/// Linear, source and junction device models with scaled parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceModel {
    Resistor { r: f64 },
    Inductor { l: f64 },
    Capacitor { c: f64 },
    VSource(Source),
    ISource(Source),
    Qpsj(QpsjParams),
    Jj(JjParams),
    Mjj(MjjParams),
}

impl DeviceModel {
    /// Devices whose current is an explicit unknown of the transient system.
    pub fn has_branch(&self) -> bool {
        matches!(
            self,
            DeviceModel::VSource(_) | DeviceModel::Inductor { .. } | DeviceModel::Qpsj(_)
        )
    }

    pub fn is_junction(&self) -> bool {
        matches!(
            self,
            DeviceModel::Qpsj(_) | DeviceModel::Jj(_) | DeviceModel::Mjj(_)
        )
    }

    /// Junction parameters for JJ-like devices.
    pub fn jj_params(&self) -> Option<JjParams> {
        match self {
            DeviceModel::Jj(p) => Some(*p),
            DeviceModel::Mjj(p) => Some(p.as_jj()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        match self {
            DeviceModel::Resistor { r } => positive("r", *r),
            DeviceModel::Inductor { l } => positive("l", *l),
            DeviceModel::Capacitor { c } => positive("c", *c),
            DeviceModel::VSource(s) | DeviceModel::ISource(s) => s.validate(),
            DeviceModel::Qpsj(p) => p.validate(),
            DeviceModel::Jj(p) => p.validate(),
            DeviceModel::Mjj(p) => p.validate(),
        }
    }
}
