//! Brute-force oracle: classical RK4 on the explicit state equations of
//! small circuits. Shares nothing with the companion/Newton path beyond
//! the circuit description.

use std::f64::consts::PI;

use crate::devices::DeviceModel;
use crate::netlist::{Circuit, ProbeTarget};
use crate::units::{PHI0, TWO_E};

use super::{EngineError, WaveformSet};

const SUBSTEPS: usize = 100;
const MAX_STATES: usize = 2;
const LEAK: f64 = 1e-12;

/// Contribution of one device to the resistive network at a fixed state.
#[derive(Clone, Copy)]
enum Elem {
    Conductance(f64),
    /// Current from n+ to n-.
    Current(f64),
    /// `v = e + r·i` with `i` a branch unknown.
    Thevenin {
        e: f64,
        r: f64,
    },
    /// Conductance in parallel with a current source.
    Norton {
        g: f64,
        i: f64,
    },
}

#[derive(Clone, Copy)]
enum Var {
    CapV,
    IndI,
    Phase,
    JunctionV,
    Charge,
    BranchI,
}

struct Model<'a> {
    c: &'a Circuit,
    /// (device, var) per state slot.
    vars: Vec<(usize, Var)>,
    /// Slot of each device's first state, if any.
    first: Vec<Option<usize>>,
}

struct Solved {
    node_v: Vec<f64>,
    dev_i: Vec<f64>,
}

impl<'a> Model<'a> {
    fn new(c: &'a Circuit) -> Result<Self, EngineError> {
        let mut vars = Vec::new();
        let mut first = Vec::new();
        for (i, d) in c.devices.iter().enumerate() {
            first.push(
                (!matches!(
                    d.model,
                    DeviceModel::Resistor { .. }
                        | DeviceModel::VSource(_)
                        | DeviceModel::ISource(_)
                ))
                .then_some(vars.len()),
            );
            match &d.model {
                DeviceModel::Capacitor { .. } => vars.push((i, Var::CapV)),
                DeviceModel::Inductor { .. } => vars.push((i, Var::IndI)),
                DeviceModel::Qpsj(p) => {
                    vars.push((i, Var::Charge));
                    if p.ls > 0.0 {
                        vars.push((i, Var::BranchI));
                    }
                }
                m @ (DeviceModel::Jj(_) | DeviceModel::Mjj(_)) => {
                    vars.push((i, Var::Phase));
                    if m.jj_params().expect("junction").cj > 0.0 {
                        vars.push((i, Var::JunctionV));
                    }
                }
                _ => {}
            }
        }
        if vars.len() > MAX_STATES {
            return Err(EngineError::Unsupported(format!(
                "{} state variables; at most {MAX_STATES} supported",
                vars.len()
            )));
        }
        Ok(Self { c, vars, first })
    }

    fn initial(&self) -> Vec<f64> {
        self.vars
            .iter()
            .map(|&(d, var)| match (&self.c.devices[d].model, var) {
                (DeviceModel::Qpsj(p), Var::Charge) => p.q0,
                (m, Var::Phase) => m.jj_params().expect("junction").phi_init,
                _ => 0.0,
            })
            .collect()
    }

    fn elem(&self, d: usize, y: &[f64], t: f64) -> Elem {
        let s = self.first[d];
        match &self.c.devices[d].model {
            DeviceModel::Resistor { r } => Elem::Conductance(1.0 / r),
            DeviceModel::VSource(src) => Elem::Thevenin {
                e: src.value_at(t),
                r: 0.0,
            },
            DeviceModel::ISource(src) => Elem::Current(src.value_at(t)),
            DeviceModel::Capacitor { .. } => Elem::Thevenin {
                e: y[s.unwrap()],
                r: 0.0,
            },
            DeviceModel::Inductor { .. } => Elem::Current(y[s.unwrap()]),
            DeviceModel::Qpsj(p) => {
                let k = s.unwrap();
                if p.ls > 0.0 {
                    Elem::Current(y[k + 1])
                } else {
                    Elem::Thevenin {
                        e: p.vc * (2.0 * PI * y[k] / TWO_E).sin(),
                        r: p.rn,
                    }
                }
            }
            m => {
                let p = m.jj_params().expect("junction");
                let k = s.unwrap();
                if p.cj > 0.0 {
                    Elem::Thevenin {
                        e: y[k + 1],
                        r: 0.0,
                    }
                } else {
                    Elem::Norton {
                        g: 1.0 / p.rn,
                        i: p.ic * y[k].sin(),
                    }
                }
            }
        }
    }

    /// Node voltages and device currents for state `y` at time `t`.
    fn solve(&self, y: &[f64], t: f64) -> Solved {
        let c = self.c;
        let nn = c.node_count() - 1;
        let elems: Vec<Elem> = (0..c.devices.len()).map(|d| self.elem(d, y, t)).collect();
        let mut branch = vec![usize::MAX; elems.len()];
        let mut size = nn;
        for (d, e) in elems.iter().enumerate() {
            if matches!(e, Elem::Thevenin { .. }) {
                branch[d] = size;
                size += 1;
            }
        }
        let mut a = vec![vec![0.0; size]; size];
        let mut b = vec![0.0; size];
        for n in 0..nn {
            a[n][n] += LEAK;
        }
        let conduct = |a: &mut Vec<Vec<f64>>, p: usize, q: usize, g: f64| {
            if p > 0 {
                a[p - 1][p - 1] += g;
            }
            if q > 0 {
                a[q - 1][q - 1] += g;
            }
            if p > 0 && q > 0 {
                a[p - 1][q - 1] -= g;
                a[q - 1][p - 1] -= g;
            }
        };
        for (d, e) in elems.iter().enumerate() {
            let [p, q] = c.devices[d].nodes;
            let inject = |b: &mut Vec<f64>, i: f64| {
                if p > 0 {
                    b[p - 1] -= i;
                }
                if q > 0 {
                    b[q - 1] += i;
                }
            };
            match *e {
                Elem::Conductance(g) => conduct(&mut a, p, q, g),
                Elem::Current(i) => inject(&mut b, i),
                Elem::Norton { g, i } => {
                    conduct(&mut a, p, q, g);
                    inject(&mut b, i);
                }
                Elem::Thevenin { e, r } => {
                    let k = branch[d];
                    if p > 0 {
                        a[p - 1][k] += 1.0;
                        a[k][p - 1] += 1.0;
                    }
                    if q > 0 {
                        a[q - 1][k] -= 1.0;
                        a[k][q - 1] -= 1.0;
                    }
                    a[k][k] -= r;
                    b[k] = e;
                }
            }
        }
        let x = gauss(a, b);
        let mut node_v = vec![0.0; nn + 1];
        node_v[1..].copy_from_slice(&x[..nn]);
        let dev_i = elems
            .iter()
            .enumerate()
            .map(|(d, e)| {
                let [p, q] = c.devices[d].nodes;
                let v = node_v[p] - node_v[q];
                match *e {
                    Elem::Conductance(g) => g * v,
                    Elem::Current(i) => i,
                    Elem::Norton { g, i } => g * v + i,
                    Elem::Thevenin { .. } => x[branch[d]],
                }
            })
            .collect();
        Solved { node_v, dev_i }
    }

    fn rates(&self, y: &[f64], t: f64) -> Vec<f64> {
        let s = self.solve(y, t);
        self.vars
            .iter()
            .enumerate()
            .map(|(slot, &(d, var))| {
                let [p, q] = self.c.devices[d].nodes;
                let v = s.node_v[p] - s.node_v[q];
                let i = s.dev_i[d];
                match (&self.c.devices[d].model, var) {
                    (DeviceModel::Capacitor { c }, Var::CapV) => i / c,
                    (DeviceModel::Inductor { l }, Var::IndI) => v / l,
                    (DeviceModel::Qpsj(p), Var::Charge) => {
                        if p.ls > 0.0 {
                            y[slot + 1]
                        } else {
                            i
                        }
                    }
                    (DeviceModel::Qpsj(p), Var::BranchI) => {
                        let theta = 2.0 * PI * y[slot - 1] / TWO_E;
                        (v - p.vc * theta.sin() - p.rn * y[slot]) / p.ls
                    }
                    (m, Var::Phase) => {
                        let jv = if m.jj_params().expect("junction").cj > 0.0 {
                            y[slot + 1]
                        } else {
                            v
                        };
                        2.0 * PI * jv / PHI0
                    }
                    (m, Var::JunctionV) => {
                        let p = m.jj_params().expect("junction");
                        (i - p.ic * y[slot - 1].sin() - y[slot] / p.rn) / p.cj
                    }
                    _ => unreachable!("state slot does not match device"),
                }
            })
            .collect()
    }

    fn sample(&self, y: &[f64], t: f64) -> Vec<f64> {
        let s = self.solve(y, t);
        self.c
            .probes
            .iter()
            .map(|p| match p.target {
                ProbeTarget::Voltage(n) => s.node_v[n],
                ProbeTarget::Current(d) => s.dev_i[d],
            })
            .collect()
    }
}

/// Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / d;
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Integrate the circuit's state equations with classical RK4 at
/// `tstep / 100`, starting from rest (junctions at their initial phase or
/// charge). Circuits with more than two state variables are rejected.
pub fn reference_integrate(
    c: &Circuit,
    tstep: f64,
    tstop: f64,
) -> Result<WaveformSet, EngineError> {
    if !(tstep > 0.0 && tstop > tstep) {
        return Err(EngineError::Request(format!(
            "need 0 < tstep < tstop, got tstep={tstep} tstop={tstop}"
        )));
    }
    let m = Model::new(c)?;
    let mut y = m.initial();
    let h = tstep / SUBSTEPS as f64;
    let n_out = (tstop / tstep + 1e-9).floor() as usize;
    let mut out = WaveformSet::new(c.probes.iter().map(|p| p.name.clone()));
    out.push(0.0, &m.sample(&y, 0.0));
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    for step in 1..=n_out {
        let t0 = (step - 1) as f64 * tstep;
        for sub in 0..SUBSTEPS {
            let t = t0 + sub as f64 * h;
            let k1 = m.rates(&y, t);
            let k2 = m.rates(&axpy(&y, &k1, h / 2.0), t + h / 2.0);
            let k3 = m.rates(&axpy(&y, &k2, h / 2.0), t + h / 2.0);
            let k4 = m.rates(&axpy(&y, &k3, h), t + h);
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let t = step as f64 * tstep;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::NonFinite {
                time: t,
                device: "reference state".into(),
            });
        }
        out.push(t, &m.sample(&y, t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::load;

    #[test]
    fn lc_period() {
        // Starts with 1 µA in L: i(t) = cos(t/√(LC)).
        let c = load("t\nI1 0 1 pulse(0 0 0 0 0 1 0)\nL1 1 0 1n\nC1 1 0 1f\n.tran 0.01p 20p\n.end")
            .unwrap();
        let m = Model::new(&c).unwrap();
        assert_eq!(m.vars.len(), 2);
        // Manual initial current: integrate from y = [v, i] = [0, 1].
        let mut y = vec![0.0, 1.0];
        let h = 1e-4;
        let mut t = 0.0;
        let mut crossings = Vec::new();
        let mut prev = y[1];
        while t < 20.0 {
            let k1 = m.rates(&y, t);
            let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + h / 2.0 * b).collect();
            let k2 = m.rates(&y2, t);
            let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + h / 2.0 * b).collect();
            let k3 = m.rates(&y3, t);
            let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = m.rates(&y4, t);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
            if prev > 0.0 && y[1] <= 0.0 {
                crossings.push(t - h * y[1] / (y[1] - prev));
            }
            prev = y[1];
        }
        let period = crossings[2] - crossings[1];
        let expect = 2.0 * PI * (1.0f64 * 1.0).sqrt();
        assert!(
            (period - expect).abs() < 1e-3 * expect,
            "{period} vs {expect}"
        );
    }

    #[test]
    fn rc_matches_exponential() {
        let c =
            load("t\nV1 1 0 pulse(0 1m 0 0 0 1n 0)\nR1 1 2 10k\nC1 2 0 1f\n.tran 0.1p 50p\n.end")
                .unwrap();
        let w = reference_integrate(&c, 0.1, 50.0).unwrap();
        for (t, v) in w.time.iter().zip(w.get("v(2)").unwrap()).skip(1) {
            assert!((v - (1.0 - (-t / 10.0).exp())).abs() < 1e-4);
        }
    }

    #[test]
    fn too_many_states() {
        let c =
            load("t\nV1 1 0 dc 1m\nR1 1 2 1k\nC1 2 0 1f\nL1 2 3 1n\nC2 3 0 1f\n.tran 1p 10p\n.end")
                .unwrap();
        assert!(matches!(
            reference_integrate(&c, 1.0, 10.0),
            Err(EngineError::Unsupported(_))
        ));
    }
}
