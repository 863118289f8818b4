//! Product of a transition system with a Büchi automaton over the system's
//! propositions plus the coloring propositions `p@1 .. p@d`.

use std::collections::HashMap;
use std::fmt::Write;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::automata::{cost_nba, AutomatonError, BuchiAutomaton, CostBuchiAutomaton};
use crate::formula::{Formula, Prop, Valuation};
use crate::system::{StateId, TransitionSystem};

/// A vertex `(s, q, C)`; bit `i-1` of `colors` is the value of `p@i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub state: StateId,
    pub q: usize,
    pub colors: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductEdge {
    pub target: usize,
    cost: usize,
}

/// The reachable part of `S × A`. Vertex 0 is `(s_I, q_I, ∅)`.
#[derive(Clone, Debug)]
pub struct ColoredCostGraph {
    dim: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Vec<ProductEdge>>,
    accepting: Vec<bool>,
    costs: Vec<Vec<u64>>,
    names: Vec<String>,
    automaton_states: usize,
}

/// Automaton interface the product construction needs.
pub(crate) trait Stepper {
    fn start(&self) -> usize;
    fn mask<'p>(&self, props: impl IntoIterator<Item = &'p Prop>) -> u128;
    fn step(&mut self, q: usize, mask: u128, cost: &[u64]) -> Vec<usize>;
    fn accepting(&self, q: usize) -> bool;
    fn size(&self) -> usize;
}

impl Stepper for &BuchiAutomaton {
    fn start(&self) -> usize {
        self.initial()
    }
    fn mask<'p>(&self, props: impl IntoIterator<Item = &'p Prop>) -> u128 {
        self.letter_mask(props)
    }
    fn step(&mut self, q: usize, mask: u128, _: &[u64]) -> Vec<usize> {
        let mut out: Vec<usize> = self.successors_masked(q, mask).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
    fn accepting(&self, q: usize) -> bool {
        self.is_accepting(q)
    }
    fn size(&self) -> usize {
        self.num_states()
    }
}

impl Stepper for CostBuchiAutomaton {
    fn start(&self) -> usize {
        self.initial()
    }
    fn mask<'p>(&self, props: impl IntoIterator<Item = &'p Prop>) -> u128 {
        self.letter_mask(props)
    }
    fn step(&mut self, q: usize, mask: u128, cost: &[u64]) -> Vec<usize> {
        self.successors(q, mask, cost)
    }
    fn accepting(&self, q: usize) -> bool {
        self.is_accepting(q)
    }
    fn size(&self) -> usize {
        self.num_states()
    }
}

pub fn build_product(sys: &TransitionSystem, a: &BuchiAutomaton) -> ColoredCostGraph {
    build(sys, a)
}

/// Product with the automaton of a variable-free formula, translated only
/// as far as the product reaches.
pub fn build_product_for(sys: &TransitionSystem, f: &Formula) -> Result<ColoredCostGraph, AutomatonError> {
    Ok(build(sys, cost_nba(f, &Valuation::new(), sys.dim())?))
}

pub(crate) fn build(sys: &TransitionSystem, mut a: impl Stepper) -> ColoredCostGraph {
    let dim = sys.dim();
    assert!(dim <= 16, "too many cost coordinates for a product");
    let color_masks: Vec<u128> = (1..=dim as u32).map(|i| a.mask(&[Prop::Color(i)])).collect();
    let label_masks: Vec<u128> = (0..sys.num_states()).map(|s| a.mask(sys.label(s))).collect();
    // Cost vectors are shared by every product copy of a system edge.
    let mut costs = Vec::new();
    let mut edge_cost: Vec<Vec<usize>> = Vec::new();
    for s in 0..sys.num_states() {
        edge_cost.push(
            sys.successors(s)
                .iter()
                .map(|e| {
                    costs.push(e.cost.clone());
                    costs.len() - 1
                })
                .collect(),
        );
    }

    let init = Vertex { state: sys.initial(), q: a.start(), colors: 0 };
    let mut g = ColoredCostGraph {
        dim,
        vertices: vec![init],
        edges: Vec::new(),
        accepting: Vec::new(),
        costs,
        names: (0..sys.num_states()).map(|s| sys.name(s).to_string()).collect(),
        automaton_states: 0,
    };
    let mut index: HashMap<Vertex, usize> = HashMap::from([(init, 0)]);
    let mut i = 0;
    while i < g.vertices.len() {
        let v = g.vertices[i];
        let mut mask = label_masks[v.state];
        for (c, m) in color_masks.iter().enumerate() {
            if v.colors >> c & 1 == 1 {
                mask |= m;
            }
        }
        let mut out = Vec::new();
        for (k, e) in sys.successors(v.state).iter().enumerate() {
            for q in a.step(v.q, mask, &e.cost) {
                for colors in 0..1u32 << dim {
                    let w = Vertex { state: e.target, q, colors };
                    let t = *index.entry(w).or_insert_with(|| {
                        g.vertices.push(w);
                        g.vertices.len() - 1
                    });
                    out.push(ProductEdge { target: t, cost: edge_cost[v.state][k] });
                }
            }
        }
        g.edges.push(out);
        g.accepting.push(a.accepting(v.q));
        i += 1;
    }
    g.automaton_states = a.size();
    g
}

impl ColoredCostGraph {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Automaton states seen while building.
    pub fn automaton_states(&self) -> usize {
        self.automaton_states
    }

    /// Bits of the coordinates whose color differs between `v` and `w`.
    pub fn changed(&self, v: usize, w: usize) -> u32 {
        self.colors(v) ^ self.colors(w)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn vertex(&self, v: usize) -> Vertex {
        self.vertices[v]
    }

    pub fn colors(&self, v: usize) -> u32 {
        self.vertices[v].colors
    }

    pub fn is_accepting(&self, v: usize) -> bool {
        self.accepting[v]
    }

    pub fn edges(&self, v: usize) -> &[ProductEdge] {
        &self.edges[v]
    }

    pub fn edge_cost(&self, e: &ProductEdge) -> &[u64] {
        &self.costs[e.cost]
    }

    /// Bits of the coordinates in which `e` has positive cost.
    pub fn costly(&self, e: &ProductEdge) -> u32 {
        self.edge_cost(e).iter().enumerate().filter(|(_, &c)| c > 0).fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Cost of the edge `v -> w`, if there is one.
    pub fn cost(&self, v: usize, w: usize) -> Option<&[u64]> {
        self.edges[v].iter().find(|e| e.target == w).map(|e| self.edge_cost(e))
    }

    pub fn successors(&self) -> Vec<Vec<usize>> {
        self.edges.iter().map(|es| es.iter().map(|e| e.target).collect()).collect()
    }

    /// Vertices that lie on some infinite path through an accepting vertex:
    /// those that can reach an accepting vertex on a cycle.
    pub fn useful_vertices(&self) -> Vec<bool> {
        let n = self.num_vertices();
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, self.num_edges());
        for _ in 0..n {
            g.add_node(());
        }
        let mut pred = vec![Vec::new(); n];
        for (v, es) in self.edges.iter().enumerate() {
            for e in es {
                g.add_edge(NodeIndex::new(v), NodeIndex::new(e.target), ());
                pred[e.target].push(v);
            }
        }
        let mut useful = vec![false; n];
        let mut stack = Vec::new();
        for scc in kosaraju_scc(&g) {
            let v = scc[0].index();
            let cyclic = scc.len() > 1 || self.edges[v].iter().any(|e| e.target == v);
            if cyclic {
                for x in scc.iter().map(|x| x.index()).filter(|&x| self.accepting[x]) {
                    useful[x] = true;
                    stack.push(x);
                }
            }
        }
        while let Some(v) = stack.pop() {
            for &u in &pred[v] {
                if !useful[u] {
                    useful[u] = true;
                    stack.push(u);
                }
            }
        }
        useful
    }

    pub fn describe(&self, v: usize) -> String {
        let x = self.vertices[v];
        let colors: Vec<String> =
            (0..self.dim).filter(|c| x.colors >> c & 1 == 1).map(|c| format!("p@{}", c + 1)).collect();
        format!("({},{},{{{}}})", self.names[x.state], x.q, colors.join(" "))
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices {}", self.num_vertices());
        let _ = writeln!(out, "initial {}", self.describe(0));
        let acc: Vec<String> = (0..self.num_vertices()).filter(|&v| self.accepting[v]).map(|v| v.to_string()).collect();
        let _ = writeln!(out, "accepting {}", acc.join(" "));
        for v in 0..self.num_vertices() {
            let _ = writeln!(out, "{v} = {}", self.describe(v));
        }
        for (v, es) in self.edges.iter().enumerate() {
            for e in es {
                let c: Vec<String> = self.edge_cost(e).iter().map(u64::to_string).collect();
                let _ = writeln!(out, "{v} --[{}]--> {}", c.join(","), e.target);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::ltl_to_nba;
    use crate::formula::{parse, Formula};
    use crate::system::fixtures::sys_a;

    #[test]
    fn self_loop_with_universal_automaton() {
        let mut s = TransitionSystem::new(1);
        s.add_state("s", []);
        s.set_initial(0);
        s.add_edge(0, 0, vec![0]);
        let g = build_product(&s, &ltl_to_nba(&Formula::tt()).unwrap());
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.edges(0).len(), 2);
    }

    #[test]
    fn sys_a_costs_are_inherited() {
        let sys = sys_a();
        let g = build_product(&sys, &ltl_to_nba(&Formula::tt()).unwrap());
        assert!(g.num_vertices() <= 4);
        let s0 = sys.state_by_name("s0").unwrap();
        let s1 = sys.state_by_name("s1").unwrap();
        for v in 0..g.num_vertices() {
            for e in g.edges(v) {
                let (a, b) = (g.vertex(v).state, g.vertex(e.target).state);
                assert_eq!(g.edge_cost(e), sys.cost(a, b).unwrap());
                if a == s0 && b == s1 {
                    assert_eq!(g.edge_cost(e), &[3]);
                }
            }
        }
    }

    #[test]
    fn edges_follow_the_automaton_on_colored_letters() {
        let sys = sys_a();
        let a = ltl_to_nba(&parse("G((!p@1 | p) & (!p | p@1))").unwrap()).unwrap();
        let g = build_product(&sys, &a);
        for v in 0..g.num_vertices() {
            let x = g.vertex(v);
            let mut letter = sys.label(x.state).clone();
            if x.colors & 1 == 1 {
                letter.insert(Prop::Color(1));
            }
            let expect = a.successors(x.q, &letter);
            for e in g.edges(v) {
                assert!(expect.contains(&g.vertex(e.target).q));
            }
            // Every automaton successor, system successor and color shows up.
            let n = expect.len() * sys.successors(x.state).len() * 2;
            assert_eq!(g.edges(v).len(), n);
        }
        assert!(g.dump().starts_with("vertices "));
        let useful = g.useful_vertices();
        assert!(useful[0]);
        for v in (0..g.num_vertices()).filter(|&v| useful[v]) {
            assert!(g.edges(v).iter().any(|e| useful[e.target]));
        }
    }
}
