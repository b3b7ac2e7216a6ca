//! Companion models: each dynamic device, discretized over one step of
//! length `h`, becomes a linear two-terminal element around the current
//! Newton iterate.

use std::f64::consts::PI;

use crate::units::{PHI0, TWO_E};

use super::DeviceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMethod {
    #[default]
    Trapezoidal,
    BackwardEuler,
}

impl IntegrationMethod {
    /// Weight of the new-point derivative in `x_{n+1} = x_n + w·(x'_{n+1} [+ x'_n])`.
    fn weight(self, h: f64) -> f64 {
        match self {
            IntegrationMethod::Trapezoidal => 0.5 * h,
            IntegrationMethod::BackwardEuler => h,
        }
    }

    /// History term carried by the method: the old derivative for the
    /// trapezoidal rule, nothing for backward Euler.
    fn carry(self, old_rate: f64) -> f64 {
        match self {
            IntegrationMethod::Trapezoidal => old_rate,
            IntegrationMethod::BackwardEuler => 0.0,
        }
    }
}

/// Per-device dynamic state at the last accepted time point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DeviceState {
    #[default]
    Stateless,
    Capacitor {
        v: f64,
        i: f64,
    },
    Inductor {
        i: f64,
        v: f64,
    },
    /// Transported charge, its rate (the branch current) and the voltage
    /// across the series inductance.
    Qpsj {
        q: f64,
        i: f64,
        v_l: f64,
    },
    /// Phase, junction voltage and capacitor current of a JJ or MJJ.
    Junction {
        phi: f64,
        v: f64,
        i_cap: f64,
    },
}

impl DeviceState {
    pub fn is_finite(&self) -> bool {
        match *self {
            DeviceState::Stateless => true,
            DeviceState::Capacitor { v, i } | DeviceState::Inductor { i, v } => {
                v.is_finite() && i.is_finite()
            }
            DeviceState::Qpsj { q, i, v_l } => q.is_finite() && i.is_finite() && v_l.is_finite(),
            DeviceState::Junction { phi, v, i_cap } => {
                phi.is_finite() && v.is_finite() && i_cap.is_finite()
            }
        }
    }
}

/// Linearized element for one Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompanionStamp {
    /// Current from n+ to n-: `i = g·v + i_eq`.
    Norton { g: f64, i_eq: f64 },
    /// Voltage on a branch-current unknown: `v = r·i + v_eq`.
    ///
    /// `dv_dq` is the slope of the intrinsic junction voltage with respect
    /// to transported charge, zero for non-junction branches.
    Branch { r: f64, v_eq: f64, dv_dq: f64 },
}

/// Linearized JJ companion around the iterate `v_k`.
///
/// Returns `(g, i_eq, phi_k)`. `quantum` is the flux quantum in the units
/// of `v·t`; it is a parameter so the charge-phase dual can be checked.
#[allow(clippy::too_many_arguments)]
pub fn jj_linearize(
    ic: f64,
    rn: f64,
    cj: f64,
    quantum: f64,
    (phi_n, v_n, icap_n): (f64, f64, f64),
    h: f64,
    method: IntegrationMethod,
    v_k: f64,
) -> (f64, f64, f64) {
    let w = method.weight(h);
    let phi_k = phi_n + 2.0 * PI / quantum * w * (v_k + method.carry(v_n));
    let gc = cj / w;
    let i_cap = gc * (v_k - v_n) - method.carry(icap_n);
    let total = ic * phi_k.sin() + v_k / rn + i_cap;
    let g = ic * phi_k.cos() * 2.0 * PI / quantum * w + 1.0 / rn + gc;
    (g, total - g * v_k, phi_k)
}

/// Linearized QPSJ companion around the branch-current iterate `i_k`.
///
/// Returns `(r, v_eq, dv_dq, q_k)`.
#[allow(clippy::too_many_arguments)]
pub fn qpsj_linearize(
    vc: f64,
    rn: f64,
    ls: f64,
    quantum: f64,
    (q_n, i_n, vl_n): (f64, f64, f64),
    h: f64,
    method: IntegrationMethod,
    i_k: f64,
) -> (f64, f64, f64, f64) {
    let w = method.weight(h);
    let q_k = q_n + w * (i_k + method.carry(i_n));
    let theta = 2.0 * PI * q_k / quantum;
    let rl = ls / w;
    let v_l = rl * (i_k - i_n) - method.carry(vl_n);
    let total = vc * theta.sin() + rn * i_k + v_l;
    let dv_dq = vc * theta.cos() * 2.0 * PI / quantum;
    let r = dv_dq * w + rn + rl;
    (r, total - r * i_k, dv_dq, q_k)
}

/// Companion stamp of `model` for a step of `h` from `state`, linearized
/// at `at` (the branch voltage for Norton devices, the branch current for
/// branch devices). Sources are evaluated at time `t`.
pub fn companion_stamp(
    model: &DeviceModel,
    state: &DeviceState,
    h: f64,
    method: IntegrationMethod,
    t: f64,
    at: f64,
) -> CompanionStamp {
    match (model, *state) {
        (DeviceModel::Resistor { r }, _) => CompanionStamp::Norton {
            g: 1.0 / r,
            i_eq: 0.0,
        },
        (DeviceModel::Capacitor { c }, DeviceState::Capacitor { v, i }) => {
            let g = c / method.weight(h);
            CompanionStamp::Norton {
                g,
                i_eq: -g * v - method.carry(i),
            }
        }
        (DeviceModel::Inductor { l }, DeviceState::Inductor { i, v }) => {
            let r = l / method.weight(h);
            CompanionStamp::Branch {
                r,
                v_eq: -r * i - method.carry(v),
                dv_dq: 0.0,
            }
        }
        (DeviceModel::VSource(s), _) => CompanionStamp::Branch {
            r: 0.0,
            v_eq: s.value_at(t),
            dv_dq: 0.0,
        },
        (DeviceModel::ISource(s), _) => CompanionStamp::Norton {
            g: 0.0,
            i_eq: s.value_at(t),
        },
        (DeviceModel::Qpsj(p), DeviceState::Qpsj { q, i, v_l }) => {
            let (r, v_eq, dv_dq, _) =
                qpsj_linearize(p.vc, p.rn, p.ls, TWO_E, (q, i, v_l), h, method, at);
            CompanionStamp::Branch { r, v_eq, dv_dq }
        }
        (DeviceModel::Jj(_) | DeviceModel::Mjj(_), DeviceState::Junction { phi, v, i_cap }) => {
            let p = model.jj_params().expect("junction model");
            let (g, i_eq, _) = jj_linearize(p.ic, p.rn, p.cj, PHI0, (phi, v, i_cap), h, method, at);
            CompanionStamp::Norton { g, i_eq }
        }
        (m, s) => panic!("state {s:?} does not belong to device {m:?}"),
    }
}

/// State after a converged step with terminal voltage `v` and current `i`.
pub(crate) fn advance(
    model: &DeviceModel,
    state: &DeviceState,
    h: f64,
    method: IntegrationMethod,
    v: f64,
    i: f64,
) -> DeviceState {
    match (model, *state) {
        (DeviceModel::Capacitor { c }, DeviceState::Capacitor { v: v_n, i: i_n }) => {
            let g = c / method.weight(h);
            DeviceState::Capacitor {
                v,
                i: g * (v - v_n) - method.carry(i_n),
            }
        }
        (DeviceModel::Inductor { .. }, DeviceState::Inductor { .. }) => {
            DeviceState::Inductor { i, v }
        }
        (DeviceModel::Qpsj(p), DeviceState::Qpsj { q, i: i_n, v_l }) => {
            let w = method.weight(h);
            DeviceState::Qpsj {
                q: q + w * (i + method.carry(i_n)),
                i,
                v_l: p.ls / w * (i - i_n) - method.carry(v_l),
            }
        }
        (
            DeviceModel::Jj(_) | DeviceModel::Mjj(_),
            DeviceState::Junction { phi, v: v_n, i_cap },
        ) => {
            let p = model.jj_params().expect("junction model");
            let w = method.weight(h);
            DeviceState::Junction {
                phi: phi + 2.0 * PI / PHI0 * w * (v + method.carry(v_n)),
                v,
                i_cap: p.cj / w * (v - v_n) - method.carry(i_cap),
            }
        }
        _ => *state,
    }
}
