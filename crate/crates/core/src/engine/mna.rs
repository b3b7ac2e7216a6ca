//! Unknown layout, stamp assembly and the damped Newton loop shared by the
//! DC and transient analyses.

use nalgebra::{DMatrix, DVector};

use crate::devices::{
    companion_stamp, CompanionStamp, DeviceModel, DeviceState, IntegrationMethod,
};
use crate::netlist::Circuit;

use super::SolverConfig;

/// Where each device's extra unknown lives in the solution vector.
pub(crate) struct Layout {
    /// Non-ground nodes; node `k` maps to `x[k - 1]`.
    pub n_nodes: usize,
    pub branch: Vec<Option<usize>>,
    pub size: usize,
}

impl Layout {
    /// Transient layout: branch currents for V sources, inductors and QPSJs.
    pub fn tran(c: &Circuit) -> Self {
        Self::build(c, |m| m.has_branch())
    }

    /// DC layout: JJs additionally carry their phase as an unknown.
    pub fn dc(c: &Circuit) -> Self {
        Self::build(c, |m| m.has_branch() || m.is_junction())
    }

    fn build(c: &Circuit, wants: impl Fn(&DeviceModel) -> bool) -> Self {
        let n_nodes = c.node_count() - 1;
        let mut next = n_nodes;
        let branch = c
            .devices
            .iter()
            .map(|d| {
                wants(&d.model).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self {
            n_nodes,
            branch,
            size: next,
        }
    }

    pub fn volt(&self, x: &DVector<f64>, node: usize) -> f64 {
        if node == 0 {
            0.0
        } else {
            x[node - 1]
        }
    }

    /// Human-readable owner of row `row`.
    pub fn describe_row(&self, c: &Circuit, row: usize) -> String {
        if row < self.n_nodes {
            format!("node {}", c.node_names[row + 1])
        } else {
            let d = self
                .branch
                .iter()
                .position(|b| *b == Some(row))
                .expect("branch row");
            format!("branch of {}", c.devices[d].name)
        }
    }
}

/// Dense system `A·x = b` with helpers for two-terminal stamps.
pub(crate) struct System {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl System {
    pub fn new(n: usize) -> Self {
        Self {
            a: DMatrix::zeros(n, n),
            b: DVector::zeros(n),
        }
    }

    pub fn clear(&mut self) {
        self.a.fill(0.0);
        self.b.fill(0.0);
    }

    /// Current `g·(va - vb) + i_eq` flowing from `na` to `nb`.
    pub fn norton(&mut self, na: usize, nb: usize, g: f64, i_eq: f64) {
        if na > 0 {
            self.a[(na - 1, na - 1)] += g;
            self.b[na - 1] -= i_eq;
        }
        if nb > 0 {
            self.a[(nb - 1, nb - 1)] += g;
            self.b[nb - 1] += i_eq;
        }
        if na > 0 && nb > 0 {
            self.a[(na - 1, nb - 1)] -= g;
            self.a[(nb - 1, na - 1)] -= g;
        }
    }

    /// Branch unknown `k` as a current from `na` to `nb` in the KCL rows.
    pub fn branch_kcl(&mut self, na: usize, nb: usize, k: usize, scale: f64) {
        if na > 0 {
            self.a[(na - 1, k)] += scale;
        }
        if nb > 0 {
            self.a[(nb - 1, k)] -= scale;
        }
    }

    /// Row `k`: `va - vb - coeff·x[k] = rhs`.
    pub fn branch_row(&mut self, na: usize, nb: usize, k: usize, coeff: f64, rhs: f64) {
        if na > 0 {
            self.a[(k, na - 1)] += 1.0;
        }
        if nb > 0 {
            self.a[(k, nb - 1)] -= 1.0;
        }
        self.a[(k, k)] -= coeff;
        self.b[k] += rhs;
    }
}

/// Stamps for one implicit step from `states` to time `t` with step `h`,
/// linearized at `x`. Fills `currents` with each device's branch current at
/// `x` when given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_tran(
    c: &Circuit,
    layout: &Layout,
    states: &[DeviceState],
    x: &DVector<f64>,
    h: f64,
    method: IntegrationMethod,
    t: f64,
    gmin: f64,
    sys: &mut System,
    mut currents: Option<&mut Vec<f64>>,
) {
    sys.clear();
    for (idx, d) in c.devices.iter().enumerate() {
        let [na, nb] = d.nodes;
        let v = layout.volt(x, na) - layout.volt(x, nb);
        let i = match layout.branch[idx] {
            Some(k) => {
                let at = x[k];
                let CompanionStamp::Branch { r, v_eq, .. } =
                    companion_stamp(&d.model, &states[idx], h, method, t, at)
                else {
                    unreachable!("branch device stamps a branch")
                };
                sys.branch_kcl(na, nb, k, 1.0);
                sys.branch_row(na, nb, k, r, v_eq);
                at
            }
            None => {
                let CompanionStamp::Norton { g, i_eq } =
                    companion_stamp(&d.model, &states[idx], h, method, t, v)
                else {
                    unreachable!("non-branch device stamps a Norton pair")
                };
                sys.norton(na, nb, g, i_eq);
                g * v + i_eq
            }
        };
        if d.model.is_junction() {
            sys.norton(na, nb, gmin, 0.0);
        }
        if let Some(cur) = currents.as_deref_mut() {
            cur[idx] = i;
        }
    }
}

/// Why a Newton solve stopped without converging.
pub(crate) struct NewtonFailure {
    pub worst_row: usize,
    pub residual: f64,
}

/// Newton iteration: at each iterate the assembled linear system is solved
/// directly for the next iterate. Converged when both the residual at the
/// iterate and the last update are within tolerance.
///
/// `limit` may shrink the update before it is applied.
pub(crate) fn newton(
    layout: &Layout,
    cfg: &SolverConfig,
    x0: &DVector<f64>,
    sys: &mut System,
    mut assemble: impl FnMut(&DVector<f64>, &mut System),
    mut limit: impl FnMut(&DVector<f64>, &mut DVector<f64>),
) -> Result<DVector<f64>, NewtonFailure> {
    let n = layout.size;
    let mut x = x0.clone();
    let mut delta_ok = false;
    let mut worst = (0, f64::INFINITY);
    for _ in 0..=cfg.max_newton_iters {
        assemble(&x, sys);
        let (res_ok, w) = residual_check(layout, cfg, sys, &x);
        worst = w;
        if res_ok && delta_ok {
            return Ok(x);
        }
        let Some(x_new) = sys.a.clone().lu().solve(&sys.b) else {
            break;
        };
        let mut delta = x_new - &x;
        limit(&x, &mut delta);
        delta_ok = (0..n).all(|i| {
            let abstol = if i < layout.n_nodes {
                cfg.abstol_v
            } else {
                cfg.abstol_i
            };
            let next = x[i] + delta[i];
            delta[i].abs() <= cfg.reltol * x[i].abs().max(next.abs()) + abstol
        });
        x += delta;
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(NewtonFailure {
        worst_row: worst.0,
        residual: worst.1,
    })
}

/// Residual of `A·x = b` against abstol, with a floating-point floor
/// proportional to the magnitude of the terms in each row.
fn residual_check(
    layout: &Layout,
    cfg: &SolverConfig,
    sys: &System,
    x: &DVector<f64>,
) -> (bool, (usize, f64)) {
    let mut ok = true;
    let mut worst = (0, 0.0);
    let mut worst_ratio = 0.0;
    for r in 0..layout.size {
        let mut sum = -sys.b[r];
        let mut mag = sys.b[r].abs();
        for k in 0..layout.size {
            let term = sys.a[(r, k)] * x[k];
            sum += term;
            mag += term.abs();
        }
        let abstol = if r < layout.n_nodes {
            cfg.abstol_i
        } else {
            cfg.abstol_v
        };
        let tol = abstol + 64.0 * f64::EPSILON * mag;
        let ratio = sum.abs() / tol;
        if !(ratio <= 1.0) {
            ok = false;
        }
        if !(ratio <= worst_ratio) {
            worst_ratio = ratio;
            worst = (r, sum.abs());
        }
    }
    (ok, worst)
}
