//! Text format for lasso traces:
//!
//! ```text
//! dim 1
//! prefix:
//! loop:
//! {q} -> 3
//! {p kappa1} -> 0
//! ```

use std::fmt::Write;

use super::{CostLetter, CostTrace, TraceError};
use crate::formula::{parse_prop, Prop};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceFormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] TraceError),
}

fn syntax(line: usize, msg: impl Into<String>) -> TraceFormatError {
    TraceFormatError::Syntax { line, msg: msg.into() }
}

enum Section {
    None,
    Prefix,
    Loop,
}

pub fn parse_trace(src: &str) -> Result<CostTrace, TraceFormatError> {
    let mut dim = None;
    let mut section = Section::None;
    let mut prefix = Vec::new();
    let mut cycle = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("dim") {
            if dim.is_some() {
                return Err(syntax(line_no, "duplicate 'dim' line"));
            }
            let d: usize =
                rest.trim().parse().map_err(|_| syntax(line_no, "expected 'dim <n>'"))?;
            if d == 0 {
                return Err(syntax(line_no, "dimension must be at least 1"));
            }
            dim = Some(d);
            continue;
        }
        match line {
            "prefix:" => {
                section = Section::Prefix;
                continue;
            }
            "loop:" => {
                section = Section::Loop;
                continue;
            }
            _ => {}
        }
        let d = dim.ok_or_else(|| syntax(line_no, "'dim' must come first"))?;
        let letter = parse_letter(line, d).map_err(|m| syntax(line_no, m))?;
        match section {
            Section::Prefix => prefix.push(letter),
            Section::Loop => cycle.push(letter),
            Section::None => return Err(syntax(line_no, "letter outside 'prefix:'/'loop:'")),
        }
    }
    let dim = dim.ok_or_else(|| syntax(0, "missing 'dim' line"))?;
    Ok(CostTrace::new(prefix, cycle, dim)?)
}

fn parse_letter(line: &str, dim: usize) -> Result<CostLetter, String> {
    let (set, costs) = line.split_once("->").ok_or("expected '{props} -> costs'")?;
    let set = set.trim();
    let inner = set
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or("proposition set must be enclosed in braces")?;
    let mut props = std::collections::BTreeSet::new();
    for name in inner.split_whitespace() {
        let p = parse_prop(name).map_err(|e| e.to_string())?;
        if p == Prop::Reserved {
            return Err("'@r' cannot appear in a trace".into());
        }
        props.insert(p);
    }
    let cost: Vec<u64> = costs
        .split_whitespace()
        .map(|c| c.parse().map_err(|_| format!("invalid cost '{c}'")))
        .collect::<Result<_, _>>()?;
    if cost.len() != dim {
        return Err(format!("expected {dim} cost entries, found {}", cost.len()));
    }
    Ok(CostLetter { props, cost })
}

fn write_letter(out: &mut String, l: &CostLetter) {
    let props: Vec<String> = l.props.iter().map(|p| p.to_string()).collect();
    let costs: Vec<String> = l.cost.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "{{{}}} -> {}", props.join(" "), costs.join(" "));
}

pub fn write_trace(t: &CostTrace) -> String {
    let mut out = format!("dim {}\nprefix:\n", t.dim());
    for l in t.prefix() {
        write_letter(&mut out, l);
    }
    out.push_str("loop:\n");
    for l in t.cycle() {
        write_letter(&mut out, l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::fixtures::t1;

    const T1: &str = "dim 1\nprefix:\nloop:\n{q} -> 3\n{p kappa1} -> 0\n";

    #[test]
    fn reads_and_writes_t1() {
        let t = parse_trace(T1).unwrap();
        assert_eq!(t, t1());
        // Propositions are written in canonical order.
        assert_eq!(write_trace(&t), T1.replace("p kappa1", "kappa1 p"));
        assert_eq!(parse_trace(&write_trace(&t)).unwrap(), t);
    }

    #[test]
    fn reports_violations() {
        let bad = "dim 1\nloop:\n{q} -> 3\n{p} -> 0\n";
        assert_eq!(
            parse_trace(bad),
            Err(TraceFormatError::Invalid(TraceError::KappaInconsistent { position: 1, coord: 1 }))
        );
        assert!(matches!(
            parse_trace("dim 2\nloop:\n{q} -> 3\n"),
            Err(TraceFormatError::Syntax { line: 3, .. })
        ));
        assert!(matches!(parse_trace("loop:\n{q} -> 0\n"), Err(TraceFormatError::Syntax { .. })));
        assert!(parse_trace("dim 1\nloop:\n{q -> 0\n").is_err());
    }
}
