//! Büchi automata over cost letters for a fixed valuation, built on the fly.
//!
//! States carry residual budgets for pending bounded obligations. Reading a
//! step cost `c` in coordinate `i` lowers an `F[<=]` residual by `c`; a
//! negative residual kills the branch. A `G[<=]` obligation whose residual
//! would go negative is simply discharged.

use std::collections::HashMap;

use super::emptiness::accepting_lasso;
use super::tableau::{next_level, Arena, Branch, Obligation};
use super::AutomatonError;
use crate::formula::{Formula, Prop, Valuation};
use crate::trace::CostTrace;

pub struct CostBuchiAutomaton {
    arena: Arena,
    dim: usize,
    m: u32,
    states: Vec<(Vec<Obligation>, u32)>,
    index: HashMap<(Vec<Obligation>, u32), usize>,
    expansions: HashMap<(Vec<Obligation>, Vec<u64>), Vec<Branch>>,
    /// Whether the formula is unsatisfiable outright.
    empty: bool,
    cost_cap: u64,
}

/// Automaton accepting exactly the cost-traces `w` with `(w, 0, α) ⊨ φ`.
pub fn cost_nba(f: &Formula, valuation: &Valuation, dim: usize) -> Result<CostBuchiAutomaton, AutomatonError> {
    f.validate_coords(dim)?;
    let (arena, root) = Arena::build(f, Some(valuation))?;
    let m = arena.num_eventualities();
    let mut a = CostBuchiAutomaton {
        arena,
        dim,
        m,
        states: Vec::new(),
        index: HashMap::new(),
        expansions: HashMap::new(),
        empty: false,
        cost_cap: 0,
    };
    a.cost_cap = a.arena.max_bound().saturating_add(1);
    match a.arena.initial(root) {
        Some(init) => {
            a.intern((init, 0));
        }
        None => {
            a.empty = true;
            a.intern((vec![], 0));
        }
    }
    Ok(a)
}

impl CostBuchiAutomaton {
    fn intern(&mut self, key: (Vec<Obligation>, u32)) -> usize {
        if let Some(&q) = self.index.get(&key) {
            return q;
        }
        let q = self.states.len();
        self.states.push(key.clone());
        self.index.insert(key, q);
        q
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// States discovered so far.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        !self.empty && self.states[q].1 == self.m
    }

    pub fn letter_mask<'p>(&self, props: impl IntoIterator<Item = &'p Prop>) -> u128 {
        self.arena.prop_mask(props)
    }

    /// Successor states after reading a letter with proposition mask `mask`
    /// (see [`letter_mask`](Self::letter_mask)) and step cost `cost`.
    pub fn successors(&mut self, q: usize, mask: u128, cost: &[u64]) -> Vec<usize> {
        if self.empty {
            return vec![];
        }
        let (obs, level) = self.states[q].clone();
        // Costs only matter through comparisons with budgets, so capping them
        // keeps the expansion cache small.
        let key = (obs, cost.iter().map(|&c| c.min(self.cost_cap)).collect::<Vec<u64>>());
        if !self.expansions.contains_key(&key) {
            let bs = self.arena.expand(&key.0, &key.1);
            self.expansions.insert(key.clone(), bs);
        }
        let targets: Vec<(Vec<Obligation>, u32)> = self.expansions[&key]
            .iter()
            .filter(|b| b.pos & !mask == 0 && b.neg & mask == 0)
            .map(|b| (b.next.clone(), next_level(level, self.m, b.postponed)))
            .collect();
        let mut out: Vec<usize> = targets.into_iter().map(|k| self.intern(k)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether the automaton accepts the lasso `w`.
    pub fn accepts(&mut self, w: &CostTrace) -> bool {
        let masks: Vec<u128> = w.letters().map(|l| self.letter_mask(&l.props)).collect();
        // Explore the product of slots and automaton states.
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut verts: Vec<(usize, usize)> = vec![(0, self.initial())];
        ids.insert((0, self.initial()), 0);
        let mut succ: Vec<Vec<usize>> = vec![];
        let mut i = 0;
        while i < verts.len() {
            let (s, q) = verts[i];
            let targets = self.successors(q, masks[s], &w.letter(s).cost);
            let ns = w.next_slot(s);
            let mut out = Vec::new();
            for t in targets {
                let v = *ids.entry((ns, t)).or_insert_with(|| {
                    verts.push((ns, t));
                    verts.len() - 1
                });
                out.push(v);
            }
            succ.push(out);
            i += 1;
        }
        let accepting: Vec<bool> = verts.iter().map(|&(_, q)| self.is_accepting(q)).collect();
        accepting_lasso(&succ, 0, &accepting).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::generate::{random_formula, random_trace, FormulaShape};
    use crate::trace::{evaluate, parse_trace};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t1() -> CostTrace {
        parse_trace("dim 1\nloop:\n{q} -> 3\n{p kappa1} -> 0\n").unwrap()
    }

    #[test]
    fn bounded_eventually_on_t1() {
        let f = parse("F[<=x] p").unwrap();
        let mut a = cost_nba(&f, &Valuation::new().with("x", 0), 1).unwrap();
        assert!(!a.accepts(&t1()));
        let shifted = parse_trace("dim 1\nloop:\n{p kappa1} -> 0\n{q} -> 3\n").unwrap();
        assert!(a.accepts(&shifted));
        let mut a = cost_nba(&f, &Valuation::new().with("x", 3), 1).unwrap();
        assert!(a.accepts(&t1()));
    }

    #[test]
    fn tt_accepts_everything() {
        let mut a = cost_nba(&parse("tt").unwrap(), &Valuation::new(), 1).unwrap();
        assert!(a.accepts(&t1()));
        let mut a = cost_nba(&parse("ff").unwrap(), &Valuation::new(), 1).unwrap();
        assert!(!a.accepts(&t1()));
    }

    #[test]
    fn request_response_and_bounded_always() {
        let rr = parse("G(q -> F[<=x] p)").unwrap();
        assert!(cost_nba(&rr, &Valuation::new().with("x", 3), 1).unwrap().accepts(&t1()));
        assert!(!cost_nba(&rr, &Valuation::new().with("x", 2), 1).unwrap().accepts(&t1()));
        let g = parse("G[<=y] q").unwrap();
        assert!(cost_nba(&g, &Valuation::new().with("y", 2), 1).unwrap().accepts(&t1()));
        assert!(!cost_nba(&g, &Valuation::new().with("y", 3), 1).unwrap().accepts(&t1()));
    }

    #[test]
    fn coordinate_beyond_dimension_is_rejected() {
        let f = parse("F[<=x@2] p").unwrap();
        assert!(matches!(cost_nba(&f, &Valuation::new(), 1), Err(AutomatonError::Coord(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(600))]
        #[test]
        fn agrees_with_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.gen_range(1..=2);
            let shape = FormulaShape::new(&["p", "q"], dim as u32).with_f_vars(&["x"]).with_g_vars(&["y"]);
            let size = rng.gen_range(1..=7);
            let f = random_formula(&mut rng, &shape, size);
            let w = random_trace(&mut rng, &["p", "q"], dim, 3, 4, 3);
            let v = Valuation::new().with("x", rng.gen_range(0..=5)).with("y", rng.gen_range(0..=5));
            let expect = evaluate(&w, 0, &v, &f).unwrap();
            let mut a = cost_nba(&f, &v, dim).unwrap();
            prop_assert_eq!(a.accepts(&w), expect, "{} on\n{}", f, w);
        }
    }
}
