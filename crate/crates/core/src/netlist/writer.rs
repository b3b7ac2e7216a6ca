//! AST → netlist text. Numbers are written in plain SI exponent form so the
//! parser reads back the identical `f64`.

use std::fmt::{self, Write as _};

use super::ast::{DeviceCard, DeviceKind, Directive, NetlistAst, ParamValue, Waveform};
use super::elaborate::Circuit;
use super::parser::parse_netlist;

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn card_prefix(kind: DeviceKind) -> char {
    match kind {
        DeviceKind::Resistor => 'R',
        DeviceKind::Inductor => 'L',
        DeviceKind::Capacitor => 'C',
        DeviceKind::VSource => 'V',
        DeviceKind::ISource => 'I',
        _ => 'X',
    }
}

fn write_card(out: &mut String, c: &DeviceCard) -> fmt::Result {
    if let Some(kw) = c.kind.keyword() {
        write!(out, "{kw} {} {} {}", c.name, c.nodes[0], c.nodes[1])?;
        for (k, v) in &c.params {
            match v {
                ParamValue::Scalar(x) => write!(out, " {k}={}", num(*x))?,
                ParamValue::List(xs) => {
                    let items: Vec<String> = xs.iter().map(|x| num(*x)).collect();
                    write!(out, " {k}={}", items.join(","))?
                }
            }
        }
        return Ok(());
    }
    // Names of R/L/C/V/I cards must start with their letter.
    let name =
        if c.name.chars().next().map(|ch| ch.to_ascii_uppercase()) == Some(card_prefix(c.kind)) {
            c.name.clone()
        } else {
            format!("{}{}", card_prefix(c.kind), c.name)
        };
    write!(out, "{name} {} {}", c.nodes[0], c.nodes[1])?;
    match c.waveform {
        Some(Waveform::Dc(v)) => write!(out, " dc {}", num(v)),
        Some(Waveform::Pulse {
            v1,
            v2,
            td,
            tr,
            tf,
            pw,
            per,
        }) => {
            let args: Vec<String> = [v1, v2, td, tr, tf, pw, per]
                .iter()
                .map(|x| num(*x))
                .collect();
            write!(out, " pulse({})", args.join(" "))
        }
        None => match c.scalar("value") {
            Some(v) => write!(out, " {}", num(v)),
            None => Ok(()),
        },
    }
}

/// Whether `title` survives a trip through line 1 unchanged.
fn title_is_safe(title: &str) -> bool {
    let t = title.trim();
    if t.is_empty() || t != title || t.starts_with('*') || t.starts_with('+') || t.contains('\n') {
        return false;
    }
    // A title that itself parses as a card would be read back as one.
    parse_netlist(&format!("{t}\n.tran 1e-12 1e-9\n.end"))
        .map(|a| a.title == t)
        .unwrap_or(false)
}

impl fmt::Display for NetlistAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if title_is_safe(&self.title) {
            writeln!(out, "{}", self.title)?;
        } else if self.title.trim().is_empty() {
            writeln!(out, "*")?;
        } else {
            writeln!(out, "* {}", self.title.replace('\n', " "))?;
        }
        for c in &self.cards {
            write_card(&mut out, c)?;
            out.push('\n');
        }
        let mut ended = false;
        for d in &self.directives {
            match d {
                Directive::Save(p) if !p.is_empty() => {
                    let items: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                    writeln!(out, ".save {}", items.join(" "))?;
                }
                Directive::Save(_) => {}
                Directive::Tran {
                    tstep,
                    tstop,
                    tstart,
                } => {
                    if *tstart > 0.0 {
                        writeln!(
                            out,
                            ".tran {} {} {}",
                            num(*tstep),
                            num(*tstop),
                            num(*tstart)
                        )?;
                    } else {
                        writeln!(out, ".tran {} {}", num(*tstep), num(*tstop))?;
                    }
                }
                Directive::End => ended = true,
            }
        }
        if ended {
            out.push_str(".end\n");
        }
        f.write_str(&out)
    }
}

impl Circuit {
    /// Netlist text for this circuit.
    pub fn to_netlist(&self) -> String {
        self.to_ast().to_string()
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Structural equality up to a relative tolerance on every parameter.
pub fn circuits_equivalent(a: &Circuit, b: &Circuit, rel: f64) -> bool {
    use crate::devices::DeviceModel as M;
    if a.node_names != b.node_names || a.devices.len() != b.devices.len() || a.probes != b.probes {
        return false;
    }
    let t = |x: f64, y: f64| close(x, y, rel);
    if !(t(a.tran.tstep, b.tran.tstep)
        && t(a.tran.tstop, b.tran.tstop)
        && t(a.tran.tstart, b.tran.tstart))
    {
        return false;
    }
    let wave = |x: &Waveform, y: &Waveform| match (x, y) {
        (Waveform::Dc(p), Waveform::Dc(q)) => t(*p, *q),
        (
            Waveform::Pulse {
                v1,
                v2,
                td,
                tr,
                tf,
                pw,
                per,
            },
            Waveform::Pulse {
                v1: w1,
                v2: w2,
                td: ud,
                tr: ur,
                tf: uf,
                pw: uw,
                per: up,
            },
        ) => {
            t(*v1, *w1)
                && t(*v2, *w2)
                && t(*td, *ud)
                && t(*tr, *ur)
                && t(*tf, *uf)
                && t(*pw, *uw)
                && t(*per, *up)
        }
        _ => false,
    };
    a.devices.iter().zip(&b.devices).all(|(x, y)| {
        x.name == y.name
            && x.kind == y.kind
            && x.nodes == y.nodes
            && match (&x.model, &y.model) {
                (M::Resistor { r: p }, M::Resistor { r: q }) => t(*p, *q),
                (M::Inductor { l: p }, M::Inductor { l: q }) => t(*p, *q),
                (M::Capacitor { c: p }, M::Capacitor { c: q }) => t(*p, *q),
                (M::VSource(p), M::VSource(q)) | (M::ISource(p), M::ISource(q)) => {
                    wave(&p.waveform, &q.waveform)
                }
                (M::Qpsj(p), M::Qpsj(q)) => {
                    t(p.vc, q.vc) && t(p.rn, q.rn) && t(p.ls, q.ls) && t(p.q0, q.q0)
                }
                (M::Jj(p), M::Jj(q)) => {
                    t(p.ic, q.ic) && t(p.rn, q.rn) && t(p.cj, q.cj) && t(p.phi_init, q.phi_init)
                }
                (M::Mjj(p), M::Mjj(q)) => {
                    p.active_state == q.active_state
                        && p.states.len() == q.states.len()
                        && p.states.iter().zip(&q.states).all(|(u, v)| t(*u, *v))
                        && t(p.rn, q.rn)
                        && t(p.cj, q.cj)
                        && t(p.phi_init, q.phi_init)
                }
                _ => false,
            }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_numbers() {
        for v in [1e-12, 0.7e-3, 12.7, 1.0 / 3.0, -4.5e-6, 3.204353e-19] {
            assert_eq!(crate::netlist::parse_value(&num(v)).unwrap(), v);
        }
    }

    #[test]
    fn awkward_titles() {
        for title in ["R1 1 0 1k", "", "* star", ".tran 1p 1n"] {
            let ast = NetlistAst {
                title: title.to_string(),
                ..parse_netlist("x\nR1 1 0 1k\nR2 1 0 1k\n.tran 1p 1n\n.end").unwrap()
            };
            let back = parse_netlist(&ast.to_string()).unwrap();
            assert_eq!(back.cards, ast.cards, "title {title:?}");
        }
    }
}
