//! Line-oriented parser for the netlist dialect.

use std::collections::{BTreeMap, HashMap};

use super::ast::{DeviceCard, DeviceKind, Directive, NetlistAst, ParamValue, Probe, Waveform};
use super::value::{parse_value, ValueError};
use super::{NetlistError, NetlistErrorKind};

/// A logical line after joining `+` continuations.
struct Logical {
    line: usize,
    text: String,
}

fn logical_lines(text: &str) -> Vec<Logical> {
    let mut out: Vec<Logical> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix('+') {
            if let Some(last) = out.last_mut() {
                last.text.push(' ');
                last.text.push_str(rest);
                continue;
            }
        }
        out.push(Logical {
            line,
            text: trimmed.to_string(),
        });
    }
    out
}

/// Whitespace tokens with parentheses split out and `k = v` / `a, b`
/// spellings glued back together.
fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                spaced.push(' ');
                spaced.push(ch);
                spaced.push(' ');
            }
            _ => spaced.push(ch),
        }
    }
    let mut out: Vec<String> = Vec::new();
    for tok in spaced.split_whitespace() {
        let glue = match out.last() {
            Some(prev) => {
                prev.ends_with('=')
                    || prev.ends_with(',')
                    || tok.starts_with('=')
                    || tok.starts_with(',')
            }
            None => false,
        };
        if glue {
            out.last_mut().unwrap().push_str(tok);
        } else {
            out.push(tok.to_string());
        }
    }
    out
}

fn err(line: usize, kind: NetlistErrorKind) -> NetlistError {
    NetlistError { line, kind }
}

fn value_at(line: usize, tok: &str) -> Result<f64, NetlistError> {
    parse_value(tok).map_err(|e: ValueError| err(line, NetlistErrorKind::Value(e)))
}

fn classify(tokens: &[String]) -> Option<DeviceKind> {
    let first = tokens.first()?.to_ascii_lowercase();
    match first.as_str() {
        "qpsj" => return Some(DeviceKind::Qpsj),
        "jj" => return Some(DeviceKind::Jj),
        "mjj" => return Some(DeviceKind::Mjj),
        _ => {}
    }
    match first.chars().next()? {
        'r' => Some(DeviceKind::Resistor),
        'l' => Some(DeviceKind::Inductor),
        'c' => Some(DeviceKind::Capacitor),
        'v' => Some(DeviceKind::VSource),
        'i' => Some(DeviceKind::ISource),
        _ => None,
    }
}

fn required_params(kind: DeviceKind) -> &'static [&'static str] {
    match kind {
        DeviceKind::Qpsj => &["vc", "rn", "ls"],
        DeviceKind::Jj => &["ic", "rn", "cj"],
        DeviceKind::Mjj => &["states", "state", "rn", "cj"],
        _ => &[],
    }
}

fn optional_params(kind: DeviceKind) -> &'static [&'static str] {
    match kind {
        DeviceKind::Qpsj => &["q0"],
        DeviceKind::Jj | DeviceKind::Mjj => &["phi0"],
        _ => &[],
    }
}

fn parse_waveform(line: usize, name: &str, toks: &[String]) -> Result<Waveform, NetlistError> {
    let missing = || {
        err(
            line,
            NetlistErrorKind::MissingParam {
                device: name.to_string(),
                param: "value".into(),
            },
        )
    };
    let head = toks.first().ok_or_else(missing)?.to_ascii_lowercase();
    match head.as_str() {
        "dc" => {
            let v = toks.get(1).ok_or_else(missing)?;
            if toks.len() > 2 {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(format!("trailing tokens after dc value of `{name}`")),
                ));
            }
            Ok(Waveform::Dc(value_at(line, v)?))
        }
        "pulse" => {
            if toks.get(1).map(String::as_str) != Some("(")
                || toks.last().map(String::as_str) != Some(")")
            {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(format!(
                        "pulse of `{name}` must be written pulse(v1 v2 td tr tf pw per)"
                    )),
                ));
            }
            let args = &toks[2..toks.len() - 1];
            if args.len() != 7 {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(format!(
                        "pulse of `{name}` needs 7 arguments, got {}",
                        args.len()
                    )),
                ));
            }
            let mut v = [0.0; 7];
            for (slot, tok) in v.iter_mut().zip(args) {
                *slot = value_at(line, tok)?;
            }
            Ok(Waveform::Pulse {
                v1: v[0],
                v2: v[1],
                td: v[2],
                tr: v[3],
                tf: v[4],
                pw: v[5],
                per: v[6],
            })
        }
        _ if toks.len() == 1 => Ok(Waveform::Dc(value_at(line, &toks[0])?)),
        _ => Err(err(
            line,
            NetlistErrorKind::Syntax(format!("unrecognised source specification for `{name}`")),
        )),
    }
}

fn parse_card(line: usize, kind: DeviceKind, toks: &[String]) -> Result<DeviceCard, NetlistError> {
    let keyword = kind.keyword().is_some();
    let (name, rest) = if keyword {
        let name = toks.get(1).ok_or_else(|| {
            err(
                line,
                NetlistErrorKind::Syntax(format!("{kind} card without a name")),
            )
        })?;
        (name.clone(), &toks[2..])
    } else {
        (toks[0].clone(), &toks[1..])
    };
    if rest.len() < 2 {
        return Err(err(
            line,
            NetlistErrorKind::Syntax(format!("`{name}` needs two nodes")),
        ));
    }
    let nodes = [rest[0].to_ascii_lowercase(), rest[1].to_ascii_lowercase()];
    for n in &nodes {
        if n.contains('=') || n == "(" || n == ")" {
            return Err(err(
                line,
                NetlistErrorKind::Syntax(format!("`{name}` needs two nodes")),
            ));
        }
    }
    let args = &rest[2..];
    let mut params = BTreeMap::new();
    let mut waveform = None;
    match kind {
        DeviceKind::Resistor | DeviceKind::Inductor | DeviceKind::Capacitor => match args {
            [] => {
                return Err(err(
                    line,
                    NetlistErrorKind::MissingParam {
                        device: name,
                        param: "value".into(),
                    },
                ))
            }
            [v] => {
                params.insert("value".to_string(), ParamValue::Scalar(value_at(line, v)?));
            }
            _ => {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(format!("trailing tokens after value of `{name}`")),
                ))
            }
        },
        DeviceKind::VSource | DeviceKind::ISource => {
            waveform = Some(parse_waveform(line, &name, args)?);
        }
        DeviceKind::Qpsj | DeviceKind::Jj | DeviceKind::Mjj => {
            for a in args {
                let (k, v) = a.split_once('=').ok_or_else(|| {
                    err(
                        line,
                        NetlistErrorKind::Syntax(format!("expected key=value, found `{a}`")),
                    )
                })?;
                let key = k.to_ascii_lowercase();
                if !required_params(kind).contains(&key.as_str())
                    && !optional_params(kind).contains(&key.as_str())
                {
                    return Err(err(
                        line,
                        NetlistErrorKind::UnknownParam {
                            device: name,
                            param: key,
                        },
                    ));
                }
                let value = if key == "states" {
                    let items: Result<Vec<f64>, _> = v
                        .trim_matches(|c| c == '<' || c == '>' || c == '[' || c == ']')
                        .split(',')
                        .map(|t| value_at(line, t))
                        .collect();
                    ParamValue::List(items?)
                } else {
                    ParamValue::Scalar(value_at(line, v)?)
                };
                if params.insert(key.clone(), value).is_some() {
                    return Err(err(
                        line,
                        NetlistErrorKind::Syntax(format!(
                            "parameter `{key}` given twice on `{name}`"
                        )),
                    ));
                }
            }
            for req in required_params(kind) {
                if !params.contains_key(*req) {
                    return Err(err(
                        line,
                        NetlistErrorKind::MissingParam {
                            device: name,
                            param: req.to_string(),
                        },
                    ));
                }
            }
        }
    }
    Ok(DeviceCard {
        kind,
        name,
        nodes,
        params,
        waveform,
        line,
    })
}

fn parse_probe(line: usize, toks: &[String]) -> Result<(Probe, usize), NetlistError> {
    let bad = |t: &str| {
        err(
            line,
            NetlistErrorKind::Syntax(format!("bad .save probe near `{t}`")),
        )
    };
    let head = toks[0].to_ascii_lowercase();
    if toks.len() < 4 || toks[1] != "(" || toks[3] != ")" {
        return Err(bad(&toks[0]));
    }
    let arg = toks[2].clone();
    let probe = match head.as_str() {
        "v" => Probe::Voltage(arg.to_ascii_lowercase()),
        "i" => Probe::Current(arg),
        _ => return Err(bad(&toks[0])),
    };
    Ok((probe, 4))
}

fn parse_directive(line: usize, toks: &[String]) -> Result<Directive, NetlistError> {
    let head = toks[0].to_ascii_lowercase();
    match head.as_str() {
        ".tran" => {
            let args = &toks[1..];
            if args.len() < 2 || args.len() > 3 {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(".tran expects <tstep> <tstop> [tstart]".into()),
                ));
            }
            let tstep = value_at(line, &args[0])?;
            let tstop = value_at(line, &args[1])?;
            let tstart = match args.get(2) {
                Some(t) => value_at(line, t)?,
                None => 0.0,
            };
            if !(tstep > 0.0) || !(tstop > tstep) || tstart < 0.0 || tstart >= tstop {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(
                        ".tran requires 0 < tstep < tstop and 0 <= tstart < tstop".into(),
                    ),
                ));
            }
            Ok(Directive::Tran {
                tstep,
                tstop,
                tstart,
            })
        }
        ".save" => {
            let mut probes = Vec::new();
            let mut rest = &toks[1..];
            while !rest.is_empty() {
                let (p, used) = parse_probe(line, rest)?;
                probes.push(p);
                rest = &rest[used..];
            }
            if probes.is_empty() {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax(".save needs at least one probe".into()),
                ));
            }
            Ok(Directive::Save(probes))
        }
        ".end" => {
            if toks.len() > 1 {
                return Err(err(
                    line,
                    NetlistErrorKind::Syntax("trailing tokens after .end".into()),
                ));
            }
            Ok(Directive::End)
        }
        other => Err(err(
            line,
            NetlistErrorKind::UnknownDirective(other.to_string()),
        )),
    }
}

enum Item {
    Card(DeviceCard),
    Directive(Directive),
}

fn parse_item(line: usize, toks: &[String]) -> Result<Item, NetlistError> {
    if toks[0].starts_with('.') {
        return parse_directive(line, toks).map(Item::Directive);
    }
    let kind = classify(toks)
        .ok_or_else(|| err(line, NetlistErrorKind::UnknownDevice(toks[0].clone())))?;
    parse_card(line, kind, toks).map(Item::Card)
}

/// Parse netlist text into an AST.
///
/// The first line is the title unless it already parses as a card or a
/// directive, in which case the title is empty and the line is kept.
pub fn parse_netlist(text: &str) -> Result<NetlistAst, NetlistError> {
    let lines = logical_lines(text);
    let mut ast = NetlistAst::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut end_line: Option<usize> = None;
    let mut tran_line: Option<usize> = None;

    for (idx, l) in lines.iter().enumerate() {
        if l.text.is_empty() || l.text.starts_with('*') {
            continue;
        }
        let toks = tokenize(&l.text);
        if toks.is_empty() {
            continue;
        }
        let item = match parse_item(l.line, &toks) {
            Ok(item) => item,
            Err(_) if idx == 0 => {
                ast.title = l.text.clone();
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(end) = end_line {
            return Err(err(l.line, NetlistErrorKind::AfterEnd { end_line: end }));
        }
        match item {
            Item::Card(card) => {
                let key = card.name.to_ascii_lowercase();
                if let Some(&first) = seen.get(&key) {
                    return Err(err(
                        l.line,
                        NetlistErrorKind::DuplicateName {
                            name: card.name,
                            first_line: first,
                        },
                    ));
                }
                seen.insert(key, l.line);
                ast.cards.push(card);
            }
            Item::Directive(d) => {
                match d {
                    Directive::End => end_line = Some(l.line),
                    Directive::Tran { .. } => {
                        if let Some(first) = tran_line {
                            return Err(err(
                                l.line,
                                NetlistErrorKind::DuplicateTran { first_line: first },
                            ));
                        }
                        tran_line = Some(l.line);
                    }
                    Directive::Save(_) => {}
                }
                ast.directives.push(d);
            }
        }
    }
    let last_line = text.lines().count().max(1);
    if end_line.is_none() {
        return Err(err(last_line, NetlistErrorKind::MissingEnd));
    }
    if tran_line.is_none() {
        return Err(err(last_line, NetlistErrorKind::MissingTran));
    }
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_resistor() {
        let ast = parse_netlist("R1 1 0 9k\n.tran 0.1p 1n\n.end").unwrap();
        assert_eq!(ast.title, "");
        assert_eq!(ast.cards.len(), 1);
        let r = &ast.cards[0];
        assert_eq!(r.kind, DeviceKind::Resistor);
        assert_eq!(r.scalar("value"), Some(9000.0));
        assert_eq!(
            ast.directives
                .iter()
                .filter(|d| matches!(d, Directive::Tran { .. }))
                .count(),
            1
        );
        let (tstep, tstop, tstart) = ast.tran().unwrap();
        assert!((tstep - 0.1e-12).abs() < 1e-27);
        assert!((tstop - 1e-9).abs() < 1e-24);
        assert_eq!(tstart, 0.0);
    }

    #[test]
    fn qpsj_card() {
        let ast = parse_netlist("qpsj Q0 1 2 vc=0.7m rn=10k ls=1n\n.tran 0.1p 1n\n.end").unwrap();
        let q = &ast.cards[0];
        assert_eq!(q.kind, DeviceKind::Qpsj);
        assert_eq!(q.name, "Q0");
        assert!((q.scalar("vc").unwrap() - 0.7e-3).abs() < 1e-18);
        assert_eq!(q.scalar("rn"), Some(1.0e4));
        assert!((q.scalar("ls").unwrap() - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn duplicate_name_reports_second_line() {
        let e = parse_netlist("R1 1 0 9k\nr1 2 0 1k\n.tran 1p 1n\n.end").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(
            e.kind,
            NetlistErrorKind::DuplicateName { first_line: 1, .. }
        ));
    }

    #[test]
    fn title_comments_and_continuations() {
        let text = "my test circuit\n* a comment\n\nqpsj q1 a 0 vc=0.7m\n+ rn=10k ls=0.1n\n.tran 0.1p\n+ 100p\n.end\n";
        let ast = parse_netlist(text).unwrap();
        assert_eq!(ast.title, "my test circuit");
        assert_eq!(ast.cards.len(), 1);
        assert_eq!(ast.cards[0].line, 4);
        assert!(ast.tran().is_some());
    }

    #[test]
    fn sources_and_save() {
        let text = "t\nVin in 0 pulse(0 0.8m 10p 0.5p 0.5p 3p 120p)\nIb 0 1 dc 140u\nV2 2 0 1m\nR1 in 1 1k\nR2 1 2 1k\n.save v(in) i(R1) v(1)\n.tran 0.1p 1n\n.end";
        let ast = parse_netlist(text).unwrap();
        assert_eq!(
            ast.cards[0].waveform,
            Some(Waveform::Pulse {
                v1: 0.0,
                v2: 0.8e-3,
                td: 10e-12,
                tr: 0.5e-12,
                tf: 0.5e-12,
                pw: 3e-12,
                per: 120e-12
            })
        );
        assert_eq!(ast.cards[1].waveform, Some(Waveform::Dc(140e-6)));
        assert_eq!(ast.cards[2].waveform, Some(Waveform::Dc(1e-3)));
        let probes: Vec<_> = ast.probes().cloned().collect();
        assert_eq!(
            probes,
            vec![
                Probe::Voltage("in".into()),
                Probe::Current("R1".into()),
                Probe::Voltage("1".into())
            ]
        );
    }

    #[test]
    fn mjj_states_list() {
        let ast = parse_netlist(
            "mjj J1 1 0 states=200u,300u state=1 rn=5 cj=0.1p\nI1 0 1 dc 1u\n.tran 1p 10p\n.end",
        )
        .unwrap();
        let Some(ParamValue::List(states)) = ast.cards[0].params.get("states") else {
            panic!()
        };
        assert_eq!(states.len(), 2);
        assert!((states[0] - 200e-6).abs() < 1e-18 && (states[1] - 300e-6).abs() < 1e-18);
        let spaced = parse_netlist(
            "mjj J1 1 0 states = 200u, 300u state=1 rn=5 cj=0.1p\nI1 0 1 dc 1u\n.tran 1p 10p\n.end",
        )
        .unwrap();
        assert_eq!(spaced.cards[0].params, ast.cards[0].params);
    }

    #[test]
    fn error_paths() {
        let cases: &[(&str, usize)] = &[
            ("R1 1 0 1k\nX1 1 0 5\n.tran 1p 1n\n.end", 2),
            ("R1 1 0 1k\nqpsj q1 1 0 vc=1m rn=1k\n.tran 1p 1n\n.end", 2),
            ("R1 1 0 1k\n.tran 1p 1n\n", 2),
            ("R1 1 0 1k\n.end", 2),
            ("R1 1 0 1k\n.tran 1p 1n\n.tran 1p 2n\n.end", 3),
            ("R1 1 0 1k\n.tran 1p 1n\n.end\nR2 1 0 1k", 4),
            ("R1 1 0 1k\nR2 1 0 1q\n.tran 1p 1n\n.end", 2),
            ("R1 1 0 1k\n.tran 1p 1n\n.foo\n.end", 3),
            (
                "R1 1 0 1k\njj b1 1 0 ic=1u rn=1 cj=1f bogus=2\n.tran 1p 1n\n.end",
                2,
            ),
        ];
        for (text, line) in cases {
            let e = parse_netlist(text).unwrap_err();
            assert_eq!(e.line, *line, "{text:?} -> {e}");
        }
    }

    #[test]
    fn missing_kinds() {
        assert!(matches!(
            parse_netlist("R1 1 0 1k\n.tran 1p 1n\n").unwrap_err().kind,
            NetlistErrorKind::MissingEnd
        ));
        assert!(matches!(
            parse_netlist("R1 1 0 1k\n.end").unwrap_err().kind,
            NetlistErrorKind::MissingTran
        ));
        assert!(matches!(
            parse_netlist("R1 1 0 1k\nX1 1 0 5\n.tran 1p 1n\n.end")
                .unwrap_err()
                .kind,
            NetlistErrorKind::UnknownDevice(_)
        ));
        assert!(matches!(
            parse_netlist("R1 1 0 1k\nqpsj q1 1 0 vc=1m rn=1k\n.tran 1p 1n\n.end")
                .unwrap_err()
                .kind,
            NetlistErrorKind::MissingParam { .. }
        ));
    }
}
