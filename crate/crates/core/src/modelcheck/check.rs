use std::collections::HashMap;

use super::fair::{chi_fair_lasso, Arc};
use super::product::{build_product_for, ColoredCostGraph};
use super::pump::{pumped_fair_path, verify_pumpable};
use super::ModelCheckError;
use crate::automata::{cost_nba, lazy_accepting_lasso, CostBuchiAutomaton, GraphLasso, LazyGraph};
use crate::formula::{eliminate_parametric_always, relativize, Formula, Valuation};
use crate::system::{LassoPath, TransitionSystem};
use crate::trace::{evaluate, CostTrace};

/// Sizes of the structures built by a check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub automaton_states: usize,
    pub product_vertices: usize,
    pub product_edges: usize,
    pub search_states: usize,
}

/// A system lasso together with its trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub path: LassoPath,
    pub trace: CostTrace,
}

#[derive(Clone, Debug)]
pub struct ExistsReport {
    pub holds: bool,
    /// Every variable needs at most this value.
    pub bound: u64,
    /// Eventually-variables at `bound`, always-variables at 0.
    pub certificate: Option<Valuation>,
    /// On failure, a pumpable fair lasso of the product, and a system lasso
    /// obtained by pumping it that fails `φ` at the certificate valuation.
    pub witness: Option<(GraphLasso, Counterexample)>,
    pub stats: Stats,
}

#[derive(Clone, Debug)]
pub struct FixedReport {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
    pub stats: Stats,
}

#[derive(Clone, Debug)]
pub struct ForallReport {
    pub holds: bool,
    /// On failure, a lasso and a uniform valuation its trace violates.
    pub counterexample: Option<(Counterexample, Valuation)>,
    pub stats: Stats,
}

fn validate(sys: &TransitionSystem, f: &Formula) -> Result<(), ModelCheckError> {
    let profile = f.var_profile();
    if let Some(v) = profile.f_vars.intersection(&profile.g_vars).next() {
        return Err(ModelCheckError::IllFormed(v.clone()));
    }
    f.validate_coords(sys.dim())?;
    Ok(())
}

/// `¬rel(φ')`, where `φ'` has its parameterized always operators
/// eliminated. Its product with the system has a pumpable fair path iff no
/// valuation works.
pub fn exists_formula(f: &Formula) -> Result<Formula, ModelCheckError> {
    Ok(relativize(&eliminate_parametric_always(f))?.negate())
}

/// `rel(¬φ)` for a formula without parameterized eventualities. Its product
/// with the system has a fair path iff some valuation fails.
pub fn forall_formula(f: &Formula) -> Result<Formula, ModelCheckError> {
    if let Some(v) = f.var_profile().f_vars.into_iter().next() {
        return Err(ModelCheckError::HasEventuallyVars(v));
    }
    Ok(relativize(&f.negate())?)
}

/// `2·n·W + W + 2` for a product with `n` vertices and maximal weight `W`.
pub fn upper_bound_formula(vertices: usize, w: u64) -> u64 {
    (vertices as u64).saturating_mul(2).saturating_mul(w).saturating_add(w).saturating_add(2)
}

/// A value `N` such that if `S` satisfies `φ` for some valuation, it does so
/// for one with every value at most `N`.
pub fn valuation_upper_bound(sys: &TransitionSystem, f: &Formula) -> Result<u64, ModelCheckError> {
    validate(sys, f)?;
    let g = build_product_for(sys, &exists_formula(f)?)?;
    Ok(upper_bound_formula(useful_count(&g), sys.max_weight()))
}

/// For a formula without parameterized eventualities: a value `N` such that
/// if `S` violates it for some valuation, it also does for the uniform one
/// at `N`.
pub fn forall_upper_bound(sys: &TransitionSystem, f: &Formula) -> Result<u64, ModelCheckError> {
    validate(sys, f)?;
    let g = build_product_for(sys, &forall_formula(f)?)?;
    Ok(upper_bound_formula(2 * useful_count(&g), sys.max_weight()))
}

/// Only vertices on fair paths matter for the pumping bound.
fn useful_count(g: &ColoredCostGraph) -> usize {
    g.useful_vertices().iter().filter(|&&u| u).count()
}

fn project(sys: &TransitionSystem, g: &ColoredCostGraph, l: &GraphLasso) -> Result<Counterexample, ModelCheckError> {
    let path = LassoPath {
        prefix: l.prefix.iter().map(|&v| g.vertex(v).state).collect(),
        cycle: l.cycle.iter().map(|&v| g.vertex(v).state).collect(),
    }
    .canonical();
    let trace = sys.trace_of(&path)?;
    Ok(Counterexample { path, trace })
}

/// Whether `S` satisfies `φ` for some valuation.
pub fn check_exists(sys: &TransitionSystem, f: &Formula) -> Result<ExistsReport, ModelCheckError> {
    validate(sys, f)?;
    let g = build_product_for(sys, &exists_formula(f)?)?;
    let bound = upper_bound_formula(useful_count(&g), sys.max_weight());
    let (found, search) = pumped_fair_path(&g, bound);
    let stats = Stats {
        automaton_states: g.automaton_states(),
        product_vertices: g.num_vertices(),
        product_edges: g.num_edges(),
        search_states: search.search_states,
    };
    let profile = f.var_profile();
    let mut certificate = Valuation::uniform(&profile.f_vars, bound);
    for v in &profile.g_vars {
        certificate.set(v.clone(), 0);
    }
    if let Some((l, pumped)) = found {
        if sys.dim() > 1 && verify_pumpable(&g, &l) != Ok(true) {
            return Err(ModelCheckError::Inconclusive("pumped witness".into()));
        }
        // The pumped copy defeats every valuation up to the bound.
        let cex = project(sys, &g, &pumped)?;
        if evaluate(&cex.trace, 0, &certificate, f).map_err(|_| ModelCheckError::Unconfirmed)? {
            return Err(if sys.dim() > 1 {
                ModelCheckError::Inconclusive("pumped witness".into())
            } else {
                ModelCheckError::Unconfirmed
            });
        }
        return Ok(ExistsReport { holds: false, bound, certificate: None, witness: Some((l, cex)), stats });
    }
    // The pumping argument is only exact for a single coordinate; beyond
    // that the certificate is checked directly.
    if sys.dim() > 1 && !check_fixed(sys, f, &certificate)?.holds {
        return Err(ModelCheckError::Inconclusive(certificate.to_string()));
    }
    Ok(ExistsReport { holds: true, bound, certificate: Some(certificate), witness: None, stats })
}

/// `S × A` for the budgeted automaton `A` of the negated formula, explored
/// on demand.
struct FixedProduct<'s> {
    sys: &'s TransitionSystem,
    a: CostBuchiAutomaton,
    masks: Vec<u128>,
    verts: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    edges: usize,
}

impl LazyGraph for FixedProduct<'_> {
    fn successors(&mut self, v: usize) -> Vec<usize> {
        let (s, q) = self.verts[v];
        let mut out = Vec::new();
        for e in self.sys.successors(s) {
            for t in self.a.successors(q, self.masks[s], &e.cost) {
                let w = *self.index.entry((e.target, t)).or_insert_with(|| {
                    self.verts.push((e.target, t));
                    self.verts.len() - 1
                });
                out.push(w);
            }
        }
        self.edges += out.len();
        out
    }

    fn is_accepting(&self, v: usize) -> bool {
        self.a.is_accepting(self.verts[v].1)
    }
}

/// Whether every trace of `S` satisfies `φ` under `valuation`; unbound
/// variables read as 0.
pub fn check_fixed(sys: &TransitionSystem, f: &Formula, valuation: &Valuation) -> Result<FixedReport, ModelCheckError> {
    validate(sys, f)?;
    let a = cost_nba(&f.negate(), valuation, sys.dim())?;
    let masks: Vec<u128> = (0..sys.num_states()).map(|s| a.letter_mask(sys.label(s))).collect();
    let init = (sys.initial(), a.initial());
    let mut p = FixedProduct { sys, a, masks, verts: vec![init], index: HashMap::from([(init, 0)]), edges: 0 };
    let found = lazy_accepting_lasso(&mut p, 0);
    let stats = Stats {
        automaton_states: p.a.num_states(),
        product_vertices: p.verts.len(),
        product_edges: p.edges,
        search_states: p.verts.len(),
    };
    let Some(l) = found else {
        return Ok(FixedReport { holds: true, counterexample: None, stats });
    };
    let verts = p.verts;
    let path = LassoPath {
        prefix: l.prefix.iter().map(|&v| verts[v].0).collect(),
        cycle: l.cycle.iter().map(|&v| verts[v].0).collect(),
    }
    .canonical();
    let trace = sys.trace_of(&path)?;
    if evaluate(&trace, 0, valuation, f).map_err(|_| ModelCheckError::Unconfirmed)? {
        return Err(ModelCheckError::Unconfirmed);
    }
    Ok(FixedReport { holds: false, counterexample: Some(Counterexample { path, trace }), stats })
}

/// Whether `S` satisfies a formula without parameterized eventualities for
/// every valuation.
///
/// Decided exactly as emptiness of the product with `rel(¬φ) ∧ χ`: a fair
/// path colors some trace boundedly, so the trace violates `φ` once every
/// always-bound exceeds twice the block cost plus one step.
pub fn check_forall(sys: &TransitionSystem, f: &Formula) -> Result<ForallReport, ModelCheckError> {
    validate(sys, f)?;
    let g = build_product_for(sys, &forall_formula(f)?)?;
    let accepting: Vec<bool> = (0..g.num_vertices()).map(|v| g.is_accepting(v)).collect();
    let arcs: Vec<Vec<Arc>> = (0..g.num_vertices())
        .map(|v| {
            g.edges(v).iter().map(|e| Arc { target: e.target, changed: g.changed(v, e.target), costly: g.costly(e) }).collect()
        })
        .collect();
    let stats = Stats {
        automaton_states: g.automaton_states(),
        product_vertices: g.num_vertices(),
        product_edges: g.num_edges(),
        search_states: g.num_vertices(),
    };
    let Some(l) = chi_fair_lasso(&arcs, 0, &accepting, g.dim()) else {
        return Ok(ForallReport { holds: true, counterexample: None, stats });
    };
    let cex = project(sys, &g, &l)?;
    let dim = sys.dim() as u32;
    let worst = (1..=dim)
        .map(|i| {
            let t = &cex.trace;
            t.segment_cost(0, t.prefix().len() + t.cycle().len(), i)
        })
        .max()
        .unwrap_or(0);
    let k = worst.saturating_mul(2).saturating_add(sys.max_weight());
    let failing = Valuation::uniform(&f.var_profile().g_vars, k);
    if evaluate(&cex.trace, 0, &failing, f).map_err(|_| ModelCheckError::Unconfirmed)? {
        return Err(ModelCheckError::Unconfirmed);
    }
    Ok(ForallReport { holds: false, counterexample: Some((cex, failing)), stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::system::fixtures::{sys_a, SYS_A};
    use crate::system::parse_system;

    fn x(v: u64) -> Valuation {
        Valuation::new().with("x", v)
    }

    #[test]
    fn request_response_on_sys_a() {
        let sys = sys_a();
        let f = parse("G(q -> F[<=x] p)").unwrap();
        assert!(check_fixed(&sys, &f, &x(3)).unwrap().holds);
        let r = check_fixed(&sys, &f, &x(2)).unwrap();
        assert!(!r.holds);
        let cex = r.counterexample.unwrap();
        assert!(!evaluate(&cex.trace, 0, &x(2), &f).unwrap());
        assert_eq!(cex.path.first(), Some(0));
        let e = check_exists(&sys, &f).unwrap();
        assert!(e.holds);
        assert!(e.bound >= 3);
        assert!(check_fixed(&sys, &f, e.certificate.as_ref().unwrap()).unwrap().holds);
    }

    #[test]
    fn unreachable_response_fails_for_every_valuation() {
        let src = SYS_A.replace("state s1 : p kappa1", "state s1 : kappa1");
        let sys = parse_system(&src).unwrap();
        let f = parse("G(q -> F[<=x] p)").unwrap();
        let e = check_exists(&sys, &f).unwrap();
        assert!(!e.holds);
        let (_, cex) = e.witness.unwrap();
        for v in [0, 10, 1000] {
            assert!(!evaluate(&cex.trace, 0, &x(v), &f).unwrap());
        }
    }

    #[test]
    fn variable_free_formulas() {
        let sys = sys_a();
        for (src, expect) in [("tt", true), ("G(q | p)", true), ("F G p", false), ("G F q", false), ("ff", false)] {
            let f = parse(src).unwrap();
            let fixed = check_fixed(&sys, &f, &Valuation::new()).unwrap().holds;
            assert_eq!(fixed, expect, "{src}");
            assert_eq!(check_exists(&sys, &f).unwrap().holds, expect, "{src}");
        }
    }

    #[test]
    fn bounded_always_for_every_valuation() {
        let sys = sys_a();
        let r = check_forall(&sys, &parse("G[<=y] q").unwrap()).unwrap();
        assert!(!r.holds);
        let (cex, failing) = r.counterexample.unwrap();
        assert!(!evaluate(&cex.trace, 0, &failing, &parse("G[<=y] q").unwrap()).unwrap());
        assert!(check_forall(&sys, &parse("G[<=y] (q | p)").unwrap()).unwrap().holds);
        assert!(matches!(
            check_forall(&sys, &parse("F[<=x] p").unwrap()),
            Err(ModelCheckError::HasEventuallyVars(_))
        ));
        // The corner valuation agrees.
        let f = parse("G[<=y] q").unwrap();
        let n = forall_upper_bound(&sys, &f).unwrap();
        assert!(!check_fixed(&sys, &f, &Valuation::new().with("y", n)).unwrap().holds);
        assert!(check_fixed(&sys, &f, &Valuation::new().with("y", 2)).unwrap().holds);
    }

    #[test]
    fn bound_formula_instances() {
        assert_eq!(upper_bound_formula(4, 0), 2);
        assert_eq!(upper_bound_formula(4, 3), 2 * 4 * 3 + 3 + 2);
    }

    #[test]
    fn ill_formed_and_dimension_errors() {
        let sys = sys_a();
        let f = parse("F[<=x] p & G[<=x] q").unwrap();
        assert!(matches!(check_exists(&sys, &f), Err(ModelCheckError::IllFormed(_))));
        let f = parse("F[<=x@2] p").unwrap();
        assert!(matches!(check_fixed(&sys, &f, &x(1)), Err(ModelCheckError::Dimension { coord: 2, dim: 1 })));
    }
}
