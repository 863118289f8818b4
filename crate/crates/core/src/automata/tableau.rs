//! Hash-consed formula graph and the one-step tableau expansion shared by
//! the plain and the budgeted automata.

use std::collections::{BTreeMap, HashMap};

use super::AutomatonError;
use crate::formula::{Formula, Prop, Valuation};

pub(crate) type Id = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    True,
    False,
    Atom(u32),
    NegAtom(u32),
    And(Id, Id),
    Or(Id, Id),
    Next(Id),
    Until(Id, Id),
    Release(Id, Id),
    FLe { coord: u32, bound: u64, body: Id },
    GLe { coord: u32, bound: u64, body: Id },
}

/// Obligation: a node to satisfy at the current position, with the residual
/// budget for `FLe`/`GLe` nodes (0 otherwise).
pub(crate) type Obligation = (Id, u64);

pub(crate) const MAX_PROPS: usize = 128;
const MAX_EVENTUALITIES: usize = 64;

#[derive(Debug, Default)]
pub(crate) struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, Id>,
    pub props: Vec<Prop>,
    prop_index: HashMap<Prop, u32>,
    /// Eventuality number of every `Until`/`FLe` node.
    eventuality: HashMap<Id, u32>,
}

/// Outcome of expanding a state's obligations along one tableau branch.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Branch {
    pub pos: u128,
    pub neg: u128,
    pub next: Vec<Obligation>,
    /// Bit `e` set iff eventuality `e` was postponed.
    pub postponed: u64,
}

#[derive(Clone, Default)]
struct Partial {
    pos: u128,
    neg: u128,
    next: BTreeMap<Id, u64>,
    postponed: u64,
    seen: Vec<Obligation>,
}

impl Arena {
    /// Builds the graph of `f`. Bounded operators take their bound from
    /// `valuation`; without one they are rejected.
    pub fn build(f: &Formula, valuation: Option<&Valuation>) -> Result<(Arena, Id), AutomatonError> {
        let mut a = Arena::default();
        let root = a.intern_formula(f, valuation)?;
        if a.eventuality.len() > MAX_EVENTUALITIES {
            return Err(AutomatonError::TooLarge(format!("more than {MAX_EVENTUALITIES} eventualities")));
        }
        Ok((a, root))
    }

    pub fn node(&self, id: Id) -> &Node {
        &self.nodes[id as usize]
    }

    /// Largest bound of any bounded operator, 0 if there is none.
    pub fn max_bound(&self) -> u64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::FLe { bound, .. } | Node::GLe { bound, .. } => Some(*bound),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn num_eventualities(&self) -> u32 {
        self.eventuality.len() as u32
    }

    pub fn prop_mask<'p>(&self, props: impl IntoIterator<Item = &'p Prop>) -> u128 {
        props.into_iter().filter_map(|p| self.prop_index.get(p)).fold(0, |m, &i| m | 1 << i)
    }

    fn prop(&mut self, p: &Prop) -> Result<u32, AutomatonError> {
        if let Some(&i) = self.prop_index.get(p) {
            return Ok(i);
        }
        if self.props.len() == MAX_PROPS {
            return Err(AutomatonError::TooLarge(format!("more than {MAX_PROPS} propositions")));
        }
        let i = self.props.len() as u32;
        self.props.push(p.clone());
        self.prop_index.insert(p.clone(), i);
        Ok(i)
    }

    fn mk(&mut self, n: Node) -> Id {
        let n = match n {
            Node::And(a, b) => match (self.node(a), self.node(b)) {
                (Node::False, _) | (_, Node::False) => Node::False,
                (Node::True, _) => return b,
                (_, Node::True) => return a,
                _ if a == b => return a,
                (Node::Atom(x), Node::NegAtom(y)) | (Node::NegAtom(x), Node::Atom(y)) if x == y => Node::False,
                _ => Node::And(a, b),
            },
            Node::Or(a, b) => match (self.node(a), self.node(b)) {
                (Node::True, _) | (_, Node::True) => Node::True,
                (Node::False, _) => return b,
                (_, Node::False) => return a,
                _ if a == b => return a,
                (Node::Atom(x), Node::NegAtom(y)) | (Node::NegAtom(x), Node::Atom(y)) if x == y => Node::True,
                _ => Node::Or(a, b),
            },
            Node::Next(a) if matches!(self.node(a), Node::True | Node::False) => return a,
            Node::Until(_, b) if matches!(self.node(b), Node::True | Node::False) => return b,
            Node::Until(a, b) if matches!(self.node(a), Node::False) => return b,
            Node::Release(a, b) if matches!(self.node(a), Node::True) => return b,
            Node::Release(_, b) if matches!(self.node(b), Node::True | Node::False) => return b,
            Node::FLe { body, .. } | Node::GLe { body, .. }
                if matches!(self.node(body), Node::True | Node::False) =>
            {
                return body
            }
            n => n,
        };
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as Id;
        if matches!(n, Node::Until(..) | Node::FLe { .. }) {
            let e = self.eventuality.len() as u32;
            self.eventuality.insert(id, e);
        }
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    fn intern_formula(&mut self, f: &Formula, val: Option<&Valuation>) -> Result<Id, AutomatonError> {
        let n = match f {
            Formula::Atom(Prop::Reserved) => Node::False,
            Formula::NegAtom(Prop::Reserved) => Node::True,
            Formula::Atom(p) => Node::Atom(self.prop(p)?),
            Formula::NegAtom(p) => Node::NegAtom(self.prop(p)?),
            Formula::And(l, r) => Node::And(self.intern_formula(l, val)?, self.intern_formula(r, val)?),
            Formula::Or(l, r) => Node::Or(self.intern_formula(l, val)?, self.intern_formula(r, val)?),
            Formula::Next(g) => Node::Next(self.intern_formula(g, val)?),
            Formula::Until(l, r) => Node::Until(self.intern_formula(l, val)?, self.intern_formula(r, val)?),
            Formula::Release(l, r) => Node::Release(self.intern_formula(l, val)?, self.intern_formula(r, val)?),
            Formula::FLe { var, coord, body } | Formula::GLe { var, coord, body } => {
                let val = val.ok_or(AutomatonError::Parameterized)?;
                let body = self.intern_formula(body, Some(val))?;
                let bound = val.get(var);
                if matches!(f, Formula::FLe { .. }) {
                    Node::FLe { coord: *coord, bound, body }
                } else {
                    Node::GLe { coord: *coord, bound, body }
                }
            }
        };
        Ok(self.mk(n))
    }

    pub fn fresh(&self, id: Id) -> Obligation {
        match self.node(id) {
            Node::FLe { bound, .. } | Node::GLe { bound, .. } => (id, *bound),
            _ => (id, 0),
        }
    }

    /// Initial obligation set for `root`; `None` if it is unsatisfiable.
    pub fn initial(&self, root: Id) -> Option<Vec<Obligation>> {
        match self.node(root) {
            Node::False => None,
            Node::True => Some(vec![]),
            _ => Some(vec![self.fresh(root)]),
        }
    }

    /// All ways to satisfy `obligations` at a position whose outgoing step has
    /// cost `cost` (only consulted by bounded operators).
    pub fn expand(&self, obligations: &[Obligation], cost: &[u64]) -> Vec<Branch> {
        let mut out = Vec::new();
        self.go(obligations.to_vec(), Partial::default(), cost, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn go(&self, mut todo: Vec<Obligation>, mut p: Partial, cost: &[u64], out: &mut Vec<Branch>) {
        while let Some(ob @ (id, r)) = todo.pop() {
            if p.seen.contains(&ob) {
                continue;
            }
            p.seen.push(ob);
            match *self.node(id) {
                Node::True => {}
                Node::False => return,
                Node::Atom(i) => {
                    if p.neg >> i & 1 == 1 {
                        return;
                    }
                    p.pos |= 1 << i;
                }
                Node::NegAtom(i) => {
                    if p.pos >> i & 1 == 1 {
                        return;
                    }
                    p.neg |= 1 << i;
                }
                Node::And(a, b) => {
                    todo.push(self.fresh(a));
                    todo.push(self.fresh(b));
                }
                Node::Or(a, b) => {
                    let mut other = todo.clone();
                    other.push(self.fresh(b));
                    self.go(other, p.clone(), cost, out);
                    todo.push(self.fresh(a));
                }
                Node::Next(a) => {
                    if !self.push_next(&mut p, self.fresh(a)) {
                        return;
                    }
                }
                Node::Until(a, b) => {
                    let mut other = todo.clone();
                    other.push(self.fresh(b));
                    self.go(other, p.clone(), cost, out);
                    todo.push(self.fresh(a));
                    self.push_next(&mut p, (id, 0));
                    p.postponed |= 1 << self.eventuality[&id];
                }
                Node::Release(a, b) => {
                    if !matches!(self.node(a), Node::False) {
                        let mut other = todo.clone();
                        other.push(self.fresh(a));
                        other.push(self.fresh(b));
                        self.go(other, p.clone(), cost, out);
                    }
                    todo.push(self.fresh(b));
                    self.push_next(&mut p, (id, 0));
                }
                Node::FLe { coord, body, .. } => {
                    let c = cost[coord as usize - 1];
                    if r >= c {
                        let mut other = p.clone();
                        self.push_next(&mut other, (id, r - c));
                        other.postponed |= 1 << self.eventuality[&id];
                        self.go(todo.clone(), other, cost, out);
                    }
                    todo.push(self.fresh(body));
                }
                Node::GLe { coord, body, .. } => {
                    todo.push(self.fresh(body));
                    let c = cost[coord as usize - 1];
                    if r >= c {
                        self.push_next(&mut p, (id, r - c));
                    }
                }
            }
        }
        out.push(Branch {
            pos: p.pos,
            neg: p.neg,
            next: p.next.into_iter().collect(),
            postponed: p.postponed,
        });
    }

    /// Adds a next-step obligation, keeping only the strongest budget per
    /// bounded node. Returns false if the obligation is unsatisfiable.
    fn push_next(&self, p: &mut Partial, (id, r): Obligation) -> bool {
        match self.node(id) {
            Node::True => true,
            Node::False => false,
            Node::FLe { .. } => {
                let e = p.next.entry(id).or_insert(r);
                *e = (*e).min(r);
                true
            }
            Node::GLe { .. } => {
                let e = p.next.entry(id).or_insert(r);
                *e = (*e).max(r);
                true
            }
            _ => {
                p.next.insert(id, 0);
                true
            }
        }
    }
}

/// Degeneralized acceptance: the level counts the eventualities fulfilled in
/// order since the last visit to the top level `m`.
pub(crate) fn next_level(level: u32, m: u32, postponed: u64) -> u32 {
    let mut l = if level == m { 0 } else { level };
    while l < m && postponed >> l & 1 == 0 {
        l += 1;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    #[test]
    fn constants_fold() {
        let (a, root) = Arena::build(&parse("tt").unwrap(), None).unwrap();
        assert_eq!(a.node(root), &Node::True);
        let (a, root) = Arena::build(&parse("p & ff").unwrap(), None).unwrap();
        assert_eq!(a.node(root), &Node::False);
        let (a, root) = Arena::build(&parse("G p").unwrap(), None).unwrap();
        assert!(matches!(a.node(root), Node::Release(..)));
    }

    #[test]
    fn parameterized_needs_valuation() {
        assert!(matches!(
            Arena::build(&parse("F[<=x] p").unwrap(), None),
            Err(AutomatonError::Parameterized)
        ));
    }

    #[test]
    fn bounded_eventually_expands_by_cost() {
        let v = Valuation::new().with("x", 2);
        let (a, root) = Arena::build(&parse("F[<=x] p").unwrap(), Some(&v)).unwrap();
        let init = a.initial(root).unwrap();
        // Cheap step: fulfil now or postpone with residual 1.
        let bs = a.expand(&init, &[1]);
        assert_eq!(bs.len(), 2);
        assert!(bs.iter().any(|b| b.next == vec![(root, 1)] && b.postponed == 1));
        // Expensive step: must fulfil now.
        let bs = a.expand(&init, &[3]);
        assert_eq!(bs.len(), 1);
        assert!(bs[0].next.is_empty());
    }

    #[test]
    fn level_counter() {
        assert_eq!(next_level(0, 0, 0), 0);
        assert_eq!(next_level(0, 2, 0), 2);
        assert_eq!(next_level(2, 2, 0b01), 0);
        assert_eq!(next_level(0, 2, 0b10), 1);
    }
}
