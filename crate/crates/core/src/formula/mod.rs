//! Abstract syntax of parametric LTL with costs, in negation normal form.
//!
//! Only nine node kinds exist: literals, conjunction, disjunction, next,
//! until, release and the two cost-bounded operators. Every derived operator
//! of the concrete syntax is expanded by the parser.

mod parse;
mod print;
mod rewrite;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parse::{parse, parse_prop, ParseError};
pub use rewrite::{chi_formula, eliminate_always_vars, eliminate_parametric_always, relativize, RewriteError};

/// Atomic proposition.
///
/// User propositions, cost indicators and coloring propositions live in
/// disjoint namespaces, so a user name can never capture an internal one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prop {
    /// Internal atom used to spell `tt` and `ff`; never holds in any letter.
    Reserved,
    /// `kappa<i>`: the step into this position had positive cost in coordinate `i`.
    Kappa(u32),
    /// `p@<i>`: coloring proposition for coordinate `i`.
    Color(u32),
    Named(String),
}

impl Prop {
    pub fn named(name: impl Into<String>) -> Self {
        Prop::Named(name.into())
    }

    pub fn is_internal(&self) -> bool {
        !matches!(self, Prop::Named(_))
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Reserved => write!(f, "@r"),
            Prop::Kappa(i) => write!(f, "kappa{i}"),
            Prop::Color(i) => write!(f, "p@{i}"),
            Prop::Named(n) => f.write_str(n),
        }
    }
}

/// Parameter variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(Prop),
    NegAtom(Prop),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    /// Eventually within accumulated cost `var` in coordinate `coord` (1-based).
    FLe { var: Var, coord: u32, body: Box<Formula> },
    /// Always while accumulated cost in coordinate `coord` is at most `var`.
    GLe { var: Var, coord: u32, body: Box<Formula> },
}

impl Formula {
    pub fn atom(p: impl Into<String>) -> Self {
        Formula::Atom(Prop::named(p))
    }

    pub fn neg_atom(p: impl Into<String>) -> Self {
        Formula::NegAtom(Prop::named(p))
    }

    pub fn kappa(i: u32) -> Self {
        Formula::Atom(Prop::Kappa(i))
    }

    // `tt` and `ff` are each other's negation, literal order included.
    pub fn tt() -> Self {
        Formula::or(Formula::NegAtom(Prop::Reserved), Formula::Atom(Prop::Reserved))
    }

    pub fn ff() -> Self {
        Formula::and(Formula::Atom(Prop::Reserved), Formula::NegAtom(Prop::Reserved))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(l: Formula, r: Formula) -> Self {
        Formula::Until(Box::new(l), Box::new(r))
    }

    pub fn release(l: Formula, r: Formula) -> Self {
        Formula::Release(Box::new(l), Box::new(r))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::until(Formula::tt(), f)
    }

    pub fn always(f: Formula) -> Self {
        Formula::release(Formula::ff(), f)
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::or(l.negate(), r)
    }

    pub fn f_le(var: impl Into<String>, coord: u32, body: Formula) -> Self {
        Formula::FLe { var: Var::new(var), coord, body: Box::new(body) }
    }

    pub fn g_le(var: impl Into<String>, coord: u32, body: Formula) -> Self {
        Formula::GLe { var: Var::new(var), coord, body: Box::new(body) }
    }

    /// Conjunction of a non-empty list, associated to the left.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Option<Self> {
        items.into_iter().reduce(Formula::and)
    }

    pub fn is_tt(&self) -> bool {
        matches!(self, Formula::Or(l, r)
            if **l == Formula::NegAtom(Prop::Reserved) && **r == Formula::Atom(Prop::Reserved))
    }

    pub fn is_ff(&self) -> bool {
        matches!(self, Formula::And(l, r)
            if **l == Formula::Atom(Prop::Reserved) && **r == Formula::NegAtom(Prop::Reserved))
    }

    /// Dual formula with negation pushed to the literals.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(p) => Formula::NegAtom(p.clone()),
            Formula::NegAtom(p) => Formula::Atom(p.clone()),
            Formula::And(l, r) => Formula::or(l.negate(), r.negate()),
            Formula::Or(l, r) => Formula::and(l.negate(), r.negate()),
            Formula::Next(f) => Formula::next(f.negate()),
            Formula::Until(l, r) => Formula::release(l.negate(), r.negate()),
            Formula::Release(l, r) => Formula::until(l.negate(), r.negate()),
            Formula::FLe { var, coord, body } => {
                Formula::GLe { var: var.clone(), coord: *coord, body: Box::new(body.negate()) }
            }
            Formula::GLe { var, coord, body } => {
                Formula::FLe { var: var.clone(), coord: *coord, body: Box::new(body.negate()) }
            }
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => vec![],
            Formula::Next(f) => vec![f],
            Formula::FLe { body, .. } | Formula::GLe { body, .. } => vec![body],
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Until(l, r)
            | Formula::Release(l, r) => vec![l, r],
        }
    }

    /// All subformulas, including the formula itself.
    pub fn closure(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if out.insert(f.clone()) {
                stack.extend(f.children());
            }
        }
        out
    }

    /// Number of distinct subformulas.
    pub fn size(&self) -> usize {
        self.closure().len()
    }

    pub fn var_profile(&self) -> VarProfile {
        let mut profile = VarProfile::default();
        self.visit(&mut |f| match f {
            Formula::FLe { var, .. } => {
                profile.f_vars.insert(var.clone());
            }
            Formula::GLe { var, .. } => {
                profile.g_vars.insert(var.clone());
            }
            _ => {}
        });
        profile
    }

    pub fn is_variable_free(&self) -> bool {
        self.var_profile().all().is_empty()
    }

    /// Propositions mentioned anywhere in the formula.
    pub fn props(&self) -> BTreeSet<Prop> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(p) | Formula::NegAtom(p) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Largest coordinate index used by a bounded operator or a `kappa`/color atom.
    pub fn max_coord(&self) -> u32 {
        let mut max = 0;
        self.visit(&mut |f| match f {
            Formula::FLe { coord, .. } | Formula::GLe { coord, .. } => max = max.max(*coord),
            Formula::Atom(Prop::Kappa(i) | Prop::Color(i))
            | Formula::NegAtom(Prop::Kappa(i) | Prop::Color(i)) => max = max.max(*i),
            _ => {}
        });
        max
    }

    /// Checks that every coordinate index lies in `1..=dim`.
    pub fn validate_coords(&self, dim: usize) -> Result<(), CoordError> {
        let mut err = None;
        self.visit(&mut |f| {
            let c = match f {
                Formula::FLe { coord, .. } | Formula::GLe { coord, .. } => Some(*coord),
                Formula::Atom(Prop::Kappa(i) | Prop::Color(i))
                | Formula::NegAtom(Prop::Kappa(i) | Prop::Color(i)) => Some(*i),
                _ => None,
            };
            if let Some(c) = c {
                if (c == 0 || c as usize > dim) && err.is_none() {
                    err = Some(CoordError { coord: c, dim });
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    pub fn has_g_le(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::GLe { .. }));
        found
    }

    pub fn has_bounded(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::GLe { .. } | Formula::FLe { .. }));
        found
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_formula(f, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("coordinate {coord} out of range for dimension {dim}")]
pub struct CoordError {
    pub coord: u32,
    pub dim: usize,
}

/// Variables split by the kind of bounded operator they parameterize.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarProfile {
    pub f_vars: BTreeSet<Var>,
    pub g_vars: BTreeSet<Var>,
}

impl VarProfile {
    pub fn all(&self) -> BTreeSet<Var> {
        self.f_vars.union(&self.g_vars).cloned().collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.f_vars.is_disjoint(&self.g_vars)
    }
}

/// Total map from variables to naturals; unbound variables read as 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Valuation(BTreeMap<Var, u64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: impl Into<String>, value: u64) -> Self {
        self.set(Var::new(var), value);
        self
    }

    /// Every variable in `vars` mapped to `value`.
    pub fn uniform<'a>(vars: impl IntoIterator<Item = &'a Var>, value: u64) -> Self {
        Valuation(vars.into_iter().map(|v| (v.clone(), value)).collect())
    }

    pub fn set(&mut self, var: Var, value: u64) {
        self.0.insert(var, value);
    }

    pub fn get(&self, var: &Var) -> u64 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn get_bound(&self, var: &Var) -> Option<u64> {
        self.0.get(var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, u64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// First variable of `vars` that has no explicit binding.
    pub fn first_unbound<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Option<&'a Var> {
        vars.into_iter().find(|v| !self.0.contains_key(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad binding {0:?}; expected name=value")]
pub struct ValuationParseError(pub String);

/// Parses bindings like `x=3,y=0` (commas or whitespace between them).
impl std::str::FromStr for Valuation {
    type Err = ValuationParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut v = Valuation::new();
        for item in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let bad = || ValuationParseError(item.to_string());
            let (name, value) = item.split_once('=').ok_or_else(bad)?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(bad());
            }
            v.set(Var::new(name), value.trim().parse().map_err(|_| bad())?);
        }
        Ok(v)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromIterator<(Var, u64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (Var, u64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request_response() -> Formula {
        parse("G(q -> F[<=x] p)").unwrap()
    }

    #[test]
    fn valuations_parse_and_print() {
        let v: Valuation = "x=3, y=0".parse().unwrap();
        assert_eq!(v, Valuation::new().with("x", 3).with("y", 0));
        assert_eq!(v.to_string(), "x=3 y=0");
        assert_eq!(v.to_string().parse::<Valuation>().unwrap(), v);
        assert!("x".parse::<Valuation>().is_err());
        assert!("x=-1".parse::<Valuation>().is_err());
    }

    #[test]
    fn negate_swaps_duals() {
        assert_eq!(Formula::atom("p").negate(), Formula::neg_atom("p"));
        assert_eq!(
            Formula::f_le("x", 1, Formula::atom("p")).negate(),
            Formula::g_le("x", 1, Formula::neg_atom("p"))
        );
        let f = request_response();
        assert_eq!(f.negate().negate(), f);
    }

    #[test]
    fn closure_examples() {
        assert_eq!(Formula::atom("p").closure().len(), 1);
        let f = Formula::and(Formula::atom("p"), Formula::next(Formula::atom("q")));
        let cl = f.closure();
        assert_eq!(cl.len(), 4);
        assert!(cl.contains(&Formula::next(Formula::atom("q"))));
        let rr = request_response();
        let cl = rr.closure();
        assert!(cl.contains(&Formula::f_le("x", 1, Formula::atom("p"))));
        assert!(cl.contains(&Formula::atom("p")));
        assert_eq!(rr.size(), 8);
        assert_eq!(rr.negate().size(), rr.size());
    }

    #[test]
    fn var_profiles() {
        let p = request_response().var_profile();
        assert_eq!(p.f_vars.into_iter().collect::<Vec<_>>(), vec![Var::new("x")]);
        assert!(p.g_vars.is_empty());

        let bad = Formula::and(
            Formula::f_le("x", 1, Formula::atom("p")),
            Formula::g_le("x", 1, Formula::atom("q")),
        );
        assert!(!bad.var_profile().is_well_formed());

        let free = parse("G(p | X q)").unwrap().var_profile();
        assert!(free.f_vars.is_empty() && free.g_vars.is_empty() && free.is_well_formed());
    }

    #[test]
    fn coordinate_validation() {
        let f = parse("F[<=x@2] p").unwrap();
        assert!(f.validate_coords(2).is_ok());
        assert_eq!(f.validate_coords(1), Err(CoordError { coord: 2, dim: 1 }));
        assert!(parse("kappa3").unwrap().validate_coords(2).is_err());
    }

    #[test]
    fn valuation_defaults_to_zero() {
        let a = Valuation::new().with("x", 3);
        assert_eq!(a.get(&Var::new("x")), 3);
        assert_eq!(a.get(&Var::new("y")), 0);
        assert_eq!(a.get_bound(&Var::new("y")), None);
        assert_eq!(a.to_string(), "x=3");
    }
}
