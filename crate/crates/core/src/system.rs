//! Weighted transition systems with `kappa` labels.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write};

use crate::formula::{parse_prop, Prop};
use crate::trace::{CostLetter, CostTrace, TraceError};

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub target: StateId,
    pub cost: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    dim: usize,
    names: Vec<String>,
    labels: Vec<BTreeSet<Prop>>,
    succ: Vec<Vec<Edge>>,
    initial: Option<StateId>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("no initial state")]
    NoInitial,
    #[error("state '{0}' has no successor")]
    NoSuccessor(String),
    #[error("edge {from} -> {to} has {found} cost entries, expected {dim}")]
    CostArity { from: String, to: String, found: usize, dim: usize },
    #[error("edge {from} -> {to} is declared twice")]
    DuplicateEdge { from: String, to: String },
    #[error("kappa{coord} in the label of '{to}' but edge {from} -> {to} has zero cost in coordinate {coord}")]
    KappaWithoutCost { from: String, to: String, coord: u32 },
    #[error("kappa{coord} not in the label of '{to}' but edge {from} -> {to} has positive cost in coordinate {coord}")]
    CostWithoutKappa { from: String, to: String, coord: u32 },
    #[error("label of '{state}' mentions kappa{coord} beyond dimension {dim}")]
    KappaArity { state: String, coord: u32, dim: usize },
    #[error("label of '{state}' mentions the internal proposition '{prop}'")]
    InternalProp { state: String, prop: Prop },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SystemError {
    #[error("no edge {from} -> {to}")]
    NotAnEdge { from: String, to: String },
    #[error("empty loop")]
    EmptyLoop,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A path `prefix · cycle^ω` of states.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LassoPath {
    pub prefix: Vec<StateId>,
    pub cycle: Vec<StateId>,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> Option<StateId> {
        self.prefix.first().or(self.cycle.first()).copied()
    }

    pub fn at(&self, position: usize) -> StateId {
        let p = self.prefix.len();
        if position < p {
            self.prefix[position]
        } else {
            self.cycle[(position - p) % self.cycle.len()]
        }
    }

    /// The same infinite path with a primitive loop entered as early as
    /// possible.
    pub fn canonical(&self) -> LassoPath {
        let l = self.cycle.len();
        let period = (1..=l).find(|&d| l.is_multiple_of(d) && (d..l).all(|j| self.cycle[j] == self.cycle[j - d])).unwrap_or(l);
        let mut prefix = self.prefix.clone();
        let mut cycle = self.cycle[..period].to_vec();
        while !prefix.is_empty() && prefix.last() == cycle.last() {
            prefix.pop();
            cycle.rotate_right(1);
        }
        LassoPath { prefix, cycle }
    }
}

impl TransitionSystem {
    pub fn new(dim: usize) -> Self {
        TransitionSystem { dim, names: Vec::new(), labels: Vec::new(), succ: Vec::new(), initial: None }
    }

    pub fn add_state(&mut self, name: impl Into<String>, label: impl IntoIterator<Item = Prop>) -> StateId {
        self.names.push(name.into());
        self.labels.push(label.into_iter().collect());
        self.succ.push(Vec::new());
        self.names.len() - 1
    }

    pub fn set_initial(&mut self, s: StateId) {
        self.initial = Some(s);
    }

    pub fn add_edge(&mut self, from: StateId, to: StateId, cost: Vec<u64>) {
        self.succ[from].push(Edge { target: to, cost });
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// The initial state. Panics on a system that failed validation.
    pub fn initial(&self) -> StateId {
        self.initial.expect("transition system without initial state")
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn label(&self, s: StateId) -> &BTreeSet<Prop> {
        &self.labels[s]
    }

    pub fn successors(&self, s: StateId) -> &[Edge] {
        &self.succ[s]
    }

    pub fn cost(&self, from: StateId, to: StateId) -> Option<&[u64]> {
        self.succ[from].iter().find(|e| e.target == to).map(|e| e.cost.as_slice())
    }

    /// Largest single cost component over all edges.
    pub fn max_weight(&self) -> u64 {
        self.succ.iter().flatten().flat_map(|e| e.cost.iter().copied()).max().unwrap_or(0)
    }

    /// All user-visible propositions in labels, `kappa` included.
    pub fn props(&self) -> BTreeSet<Prop> {
        self.labels.iter().flatten().cloned().collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.initial.is_none() {
            out.push(Violation::NoInitial);
        }
        for (s, label) in self.labels.iter().enumerate() {
            for p in label {
                match p {
                    Prop::Reserved | Prop::Color(_) => {
                        out.push(Violation::InternalProp { state: self.names[s].clone(), prop: p.clone() })
                    }
                    Prop::Kappa(i) if *i as usize > self.dim || *i == 0 => out.push(Violation::KappaArity {
                        state: self.names[s].clone(),
                        coord: *i,
                        dim: self.dim,
                    }),
                    _ => {}
                }
            }
        }
        for (s, edges) in self.succ.iter().enumerate() {
            if edges.is_empty() {
                out.push(Violation::NoSuccessor(self.names[s].clone()));
            }
            let mut seen = BTreeSet::new();
            for e in edges {
                let (from, to) = (self.names[s].clone(), self.names[e.target].clone());
                if !seen.insert(e.target) {
                    out.push(Violation::DuplicateEdge { from, to });
                    continue;
                }
                if e.cost.len() != self.dim {
                    out.push(Violation::CostArity { from, to, found: e.cost.len(), dim: self.dim });
                    continue;
                }
                for i in 1..=self.dim as u32 {
                    let positive = e.cost[i as usize - 1] > 0;
                    let marked = self.labels[e.target].contains(&Prop::Kappa(i));
                    if marked && !positive {
                        out.push(Violation::KappaWithoutCost { from: from.clone(), to: to.clone(), coord: i });
                    } else if positive && !marked {
                        out.push(Violation::CostWithoutKappa { from: from.clone(), to: to.clone(), coord: i });
                    }
                }
            }
        }
        out
    }

    /// The cost-trace `ℓ(s0) cst(s0,s1) ℓ(s1) ...` of a lasso path.
    pub fn trace_of(&self, path: &LassoPath) -> Result<CostTrace, SystemError> {
        if path.cycle.is_empty() {
            return Err(SystemError::EmptyLoop);
        }
        let step = |j: usize| -> Result<CostLetter, SystemError> {
            let (s, t) = (path.at(j), path.at(j + 1));
            let cost = self.cost(s, t).ok_or_else(|| SystemError::NotAnEdge {
                from: self.names[s].clone(),
                to: self.names[t].clone(),
            })?;
            Ok(CostLetter { props: self.labels[s].clone(), cost: cost.to_vec() })
        };
        let p = path.prefix.len();
        let prefix = (0..p).map(step).collect::<Result<_, _>>()?;
        let cycle = (p..path.len()).map(step).collect::<Result<_, _>>()?;
        Ok(CostTrace::new(prefix, cycle, self.dim)?)
    }

    /// Every initial lasso `π0 π1^ω` with `|π0 π1| <= max_len`, each infinite
    /// path exactly once (primitive loop, prefix not shiftable into the loop).
    pub fn enumerate_lassos(&self, max_len: usize) -> LassoIter<'_> {
        let n = self.num_states();
        let mut adj = vec![false; n * n];
        for (s, edges) in self.succ.iter().enumerate() {
            for e in edges {
                adj[s * n + e.target] = true;
            }
        }
        LassoIter { sys: self, adj, max_len, path: Vec::new(), child: Vec::new(), k: 0, started: false }
    }

    /// Number of lassos [`enumerate_lassos`](Self::enumerate_lassos) yields,
    /// computed from adjacency-matrix powers instead of path search.
    pub fn count_lassos(&self, max_len: usize) -> u128 {
        let n = self.num_states();
        let mut a = vec![vec![0u128; n]; n];
        for (s, edges) in self.succ.iter().enumerate() {
            for e in edges {
                a[s][e.target] += 1;
            }
        }
        let mul = |x: &Vec<Vec<u128>>, y: &Vec<Vec<u128>>| {
            let mut z = vec![vec![0u128; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if x[i][k] != 0 {
                        for j in 0..n {
                            z[i][j] += x[i][k] * y[k][j];
                        }
                    }
                }
            }
            z
        };
        let mut pow = vec![(0..n).map(|i| (0..n).map(|j| u128::from(i == j)).collect()).collect::<Vec<Vec<u128>>>()];
        for _ in 0..max_len {
            let next = mul(pow.last().unwrap(), &a);
            pow.push(next);
        }
        let init = self.initial();
        // Walks of length `a` from the initial state to u, times primitive
        // closed walks of length `b` at u. Shiftable prefixes telescope away.
        let walks = |a: usize, b: usize| -> u128 {
            (0..n)
                .map(|u| {
                    let closed: i128 = (1..=b)
                        .filter(|e| b.is_multiple_of(*e))
                        .map(|e| mobius(e) as i128 * pow[b / e][u][u] as i128)
                        .sum();
                    pow[a][init][u] * closed as u128
                })
                .sum()
        };
        (1..=max_len).map(|b| walks(max_len - b, b)).sum()
    }
}

fn mobius(n: usize) -> i32 {
    let mut n = n;
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

pub struct LassoIter<'a> {
    sys: &'a TransitionSystem,
    adj: Vec<bool>,
    max_len: usize,
    path: Vec<StateId>,
    child: Vec<usize>,
    k: usize,
    started: bool,
}

impl LassoIter<'_> {
    fn edge(&self, a: StateId, b: StateId) -> bool {
        self.adj[a * self.sys.num_states() + b]
    }

    fn canonical(&self, k: usize) -> bool {
        let p = &self.path;
        let m = p.len();
        if k > 0 && p[k - 1] == p[m - 1] {
            return false;
        }
        let cyc = &p[k..];
        let b = cyc.len();
        (1..b).filter(|e| b.is_multiple_of(*e)).all(|e| (e..b).any(|j| cyc[j] != cyc[j - e]))
    }
}

impl Iterator for LassoIter<'_> {
    type Item = LassoPath;

    fn next(&mut self) -> Option<LassoPath> {
        loop {
            if self.path.is_empty() {
                if self.started || self.max_len == 0 || self.sys.initial.is_none() {
                    return None;
                }
                self.started = true;
                self.path.push(self.sys.initial());
                self.child.push(0);
                self.k = 0;
            }
            let m = self.path.len();
            while self.k < m {
                let k = self.k;
                self.k += 1;
                if self.edge(self.path[m - 1], self.path[k]) && self.canonical(k) {
                    return Some(LassoPath { prefix: self.path[..k].to_vec(), cycle: self.path[k..].to_vec() });
                }
            }
            if m < self.max_len {
                let last = self.path[m - 1];
                let i = self.child[m - 1];
                if let Some(e) = self.sys.succ[last].get(i) {
                    self.child[m - 1] += 1;
                    self.path.push(e.target);
                    self.child.push(0);
                    self.k = 0;
                    continue;
                }
            }
            self.path.pop();
            self.child.pop();
            self.k = usize::MAX;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SystemFormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid system: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Parses the line-based system format:
///
/// ```text
/// dim 1
/// state s0 init : q
/// state s1 : p kappa1
/// edge s0 s1 : 3
/// ```
pub fn parse_system(src: &str) -> Result<TransitionSystem, SystemFormatError> {
    let syntax = |line: usize, msg: String| SystemFormatError::Syntax { line, msg };
    let mut sys: Option<TransitionSystem> = None;
    let mut ids: HashMap<String, StateId> = HashMap::new();
    let mut edges: Vec<(usize, String, String, Vec<u64>)> = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, tail) = match line.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t.trim())),
            None => (line, None),
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        match words.as_slice() {
            ["dim", d] => {
                if sys.is_some() {
                    return Err(syntax(line_no, "duplicate 'dim' line".into()));
                }
                let d: usize = d.parse().map_err(|_| syntax(line_no, format!("invalid dimension '{d}'")))?;
                if d == 0 {
                    return Err(syntax(line_no, "dimension must be at least 1".into()));
                }
                sys = Some(TransitionSystem::new(d));
            }
            ["state", name, rest @ ..] => {
                let s = sys.as_mut().ok_or_else(|| syntax(line_no, "'dim' must come first".into()))?;
                let init = match rest {
                    [] => false,
                    ["init"] => true,
                    _ => return Err(syntax(line_no, "expected 'state <name> [init] : <props>'".into())),
                };
                if ids.contains_key(*name) {
                    return Err(syntax(line_no, format!("duplicate state '{name}'")));
                }
                let mut label = BTreeSet::new();
                for p in tail.unwrap_or("").split_whitespace() {
                    label.insert(parse_prop(p).map_err(|e| syntax(line_no, e.to_string()))?);
                }
                let id = s.add_state(*name, label);
                if init {
                    if s.initial.is_some() {
                        return Err(syntax(line_no, "more than one initial state".into()));
                    }
                    s.set_initial(id);
                }
                ids.insert(name.to_string(), id);
            }
            ["edge", from, to] => {
                let dim = sys.as_ref().ok_or_else(|| syntax(line_no, "'dim' must come first".into()))?.dim;
                let tail = tail.ok_or_else(|| syntax(line_no, "expected 'edge <from> <to> : <costs>'".into()))?;
                let cost: Vec<u64> = tail
                    .split_whitespace()
                    .map(|c| c.parse().map_err(|_| syntax(line_no, format!("invalid cost '{c}'"))))
                    .collect::<Result<_, _>>()?;
                if cost.len() != dim {
                    return Err(syntax(line_no, format!("expected {dim} cost entries, found {}", cost.len())));
                }
                edges.push((line_no, from.to_string(), to.to_string(), cost));
            }
            _ => return Err(syntax(line_no, format!("unrecognized line '{line}'"))),
        }
    }
    let mut sys = sys.ok_or_else(|| syntax(0, "missing 'dim' line".into()))?;
    for (line_no, from, to, cost) in edges {
        let lookup = |n: &str| ids.get(n).copied().ok_or_else(|| syntax(line_no, format!("unknown state '{n}'")));
        let (f, t) = (lookup(&from)?, lookup(&to)?);
        sys.add_edge(f, t, cost);
    }
    let violations = sys.validate();
    if violations.is_empty() {
        Ok(sys)
    } else {
        Err(SystemFormatError::Invalid(violations))
    }
}

pub fn write_system(sys: &TransitionSystem) -> String {
    let mut out = format!("dim {}\n", sys.dim);
    for s in 0..sys.num_states() {
        let init = if sys.initial == Some(s) { " init" } else { "" };
        let props: Vec<String> = sys.labels[s].iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "state {}{} : {}", sys.names[s], init, props.join(" "));
    }
    for (s, edges) in sys.succ.iter().enumerate() {
        for e in edges {
            let costs: Vec<String> = e.cost.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "edge {} {} : {}", sys.names[s], sys.names[e.target], costs.join(" "));
        }
    }
    out
}

impl fmt::Display for TransitionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_system(self))
    }
}

#[cfg(test)]
pub mod fixtures {
    use super::*;

    pub const SYS_A: &str = "dim 1
state s0 init : q
state s1 : p kappa1
edge s0 s1 : 3
edge s1 s0 : 0
edge s1 s1 : 1
";

    pub fn sys_a() -> TransitionSystem {
        parse_system(SYS_A).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::trace::parse_trace;
    use proptest::prelude::*;

    #[test]
    fn sys_a_parses_and_validates() {
        let s = sys_a();
        assert_eq!((s.num_states(), s.num_edges(), s.dim()), (2, 3, 1));
        assert!(s.validate().is_empty());
        assert_eq!(parse_system(&write_system(&s)).unwrap(), s);
        assert_eq!(s.max_weight(), 3);
    }

    #[test]
    fn canonical_lassos() {
        let l = LassoPath { prefix: vec![0, 1], cycle: vec![0, 1, 0, 1] };
        assert_eq!(l.canonical(), LassoPath { prefix: vec![], cycle: vec![0, 1] });
        let l = LassoPath { prefix: vec![2, 0], cycle: vec![1, 0] };
        assert_eq!(l.canonical(), LassoPath { prefix: vec![2], cycle: vec![0, 1] });
    }

    #[test]
    fn kappa_violations_are_named() {
        let bad = SYS_A.replace("edge s1 s0 : 0", "edge s1 s0 : 1");
        let Err(SystemFormatError::Invalid(v)) = parse_system(&bad) else { panic!() };
        assert_eq!(v, vec![Violation::CostWithoutKappa { from: "s1".into(), to: "s0".into(), coord: 1 }]);

        let bad = SYS_A.replace("edge s1 s1 : 1", "edge s1 s1 : 0");
        let Err(SystemFormatError::Invalid(v)) = parse_system(&bad) else { panic!() };
        assert_eq!(v, vec![Violation::KappaWithoutCost { from: "s1".into(), to: "s1".into(), coord: 1 }]);
    }

    #[test]
    fn totality_and_format_errors() {
        let mut s = TransitionSystem::new(1);
        let a = s.add_state("a", []);
        s.set_initial(a);
        assert_eq!(s.validate(), vec![Violation::NoSuccessor("a".into())]);

        let two = "dim 2\nstate a init :\nedge a a : 0\n";
        assert!(matches!(parse_system(two), Err(SystemFormatError::Syntax { line: 3, .. })));
        let dup = "dim 1\nstate a init :\nstate a :\n";
        assert!(matches!(parse_system(dup), Err(SystemFormatError::Syntax { line: 3, .. })));
        let unknown = "dim 1\nstate a init :\nedge a b : 0\n";
        assert!(matches!(parse_system(unknown), Err(SystemFormatError::Syntax { line: 3, .. })));
        let colored = "dim 1\nstate a init : p@1\nedge a a : 0\n";
        assert!(matches!(parse_system(colored), Err(SystemFormatError::Invalid(_))));
    }

    #[test]
    fn traces_of_paths() {
        let s = sys_a();
        let t = s.trace_of(&LassoPath { prefix: vec![], cycle: vec![0, 1] }).unwrap();
        let t1 = parse_trace("dim 1\nloop:\n{q} -> 3\n{p kappa1} -> 0\n").unwrap();
        assert_eq!(t, t1);
        let t = s.trace_of(&LassoPath { prefix: vec![0], cycle: vec![1] }).unwrap();
        let expect = parse_trace("dim 1\nprefix:\n{q} -> 3\nloop:\n{p kappa1} -> 1\n").unwrap();
        assert_eq!(t, expect);
        assert!(matches!(
            s.trace_of(&LassoPath { prefix: vec![], cycle: vec![0] }),
            Err(SystemError::NotAnEdge { .. })
        ));

        let mut z = TransitionSystem::new(1);
        let v = z.add_state("v", [Prop::named("a")]);
        z.add_edge(v, v, vec![0]);
        z.set_initial(v);
        let t = z.trace_of(&LassoPath { prefix: vec![], cycle: vec![v] }).unwrap();
        assert_eq!(t.loop_cost(1), 0);
    }

    #[test]
    fn lasso_enumeration_examples() {
        let s = sys_a();
        let two: Vec<LassoPath> = s.enumerate_lassos(2).collect();
        assert!(two.contains(&LassoPath { prefix: vec![0], cycle: vec![1] }));
        assert!(two.contains(&LassoPath { prefix: vec![], cycle: vec![0, 1] }));
        assert_eq!(two.len(), 2);

        let mut z = TransitionSystem::new(1);
        let v = z.add_state("v", []);
        z.add_edge(v, v, vec![0]);
        z.set_initial(v);
        assert_eq!(z.enumerate_lassos(3).count(), 1);

        for len in 1..=8 {
            assert_eq!(s.enumerate_lassos(len).count() as u128, s.count_lassos(len));
        }
    }

    fn arb_system() -> impl Strategy<Value = TransitionSystem> {
        (1usize..4).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), n))
            .prop_map(|rows| {
                let n = rows.len();
                let mut s = TransitionSystem::new(1);
                for i in 0..n {
                    s.add_state(format!("s{i}"), []);
                }
                s.set_initial(0);
                for (i, row) in rows.iter().enumerate() {
                    for (j, &b) in row.iter().enumerate() {
                        if b || j == (i + 1) % n {
                            s.add_edge(i, j, vec![0]);
                        }
                    }
                }
                s
            })
    }

    proptest! {
        #[test]
        fn enumeration_matches_matrix_count(s in arb_system(), len in 1usize..7) {
            prop_assert_eq!(s.enumerate_lassos(len).count() as u128, s.count_lassos(len));
        }

        #[test]
        fn enumerated_lassos_are_distinct_paths(s in arb_system(), len in 1usize..6) {
            let lassos: Vec<LassoPath> = s.enumerate_lassos(len).collect();
            // Distinct infinite paths differ within the first 2*len positions.
            let words: BTreeSet<Vec<StateId>> =
                lassos.iter().map(|l| (0..2 * len).map(|j| l.at(j)).collect()).collect();
            prop_assert_eq!(words.len(), lassos.len());
            for l in &lassos {
                prop_assert!(s.trace_of(l).is_ok());
            }
        }
    }
}
