//! Lassos whose loop is accepting and changes color in a coordinate exactly
//! when it also accumulates cost there.

use std::collections::VecDeque;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::automata::{reachable, GraphLasso};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Arc {
    pub target: usize,
    /// Coordinates whose color flips along the arc.
    pub changed: u32,
    /// Coordinates in which the arc has positive cost.
    pub costly: u32,
}

/// A lasso from `init` whose loop visits an accepting vertex and, in every
/// coordinate, either both flips the color and has positive cost somewhere,
/// or does neither anywhere.
pub(crate) fn chi_fair_lasso(arcs: &[Vec<Arc>], init: usize, accepting: &[bool], dim: usize) -> Option<GraphLasso> {
    let n = arcs.len();
    let reach = reachable(&plain(arcs, |_| true), init);
    let all = (1u32 << dim) - 1;
    // Quiet coordinates never flip or cost inside the loop; prefer many.
    let mut quiet_sets: Vec<u32> = (0..=all).collect();
    quiet_sets.sort_by_key(|q| std::cmp::Reverse(q.count_ones()));
    for quiet in quiet_sets {
        let active = all & !quiet;
        let allowed = |a: &Arc| (a.changed | a.costly) & quiet == 0;
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
        for _ in 0..n {
            g.add_node(());
        }
        for v in (0..n).filter(|&v| reach[v]) {
            for a in arcs[v].iter().filter(|a| allowed(a)) {
                g.add_edge(NodeIndex::new(v), NodeIndex::new(a.target), ());
            }
        }
        let mut comp = vec![usize::MAX; n];
        let sccs = kosaraju_scc(&g);
        for (c, scc) in sccs.iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        for (c, scc) in sccs.iter().enumerate() {
            if !reach[scc[0].index()] {
                continue;
            }
            let inner = |v: usize, a: &Arc| comp[v] == c && comp[a.target] == c && allowed(a);
            let mut flips = 0;
            let mut costs = 0;
            let mut any = false;
            for v in scc.iter().map(|v| v.index()) {
                for a in arcs[v].iter().filter(|a| inner(v, a)) {
                    any = true;
                    flips |= a.changed;
                    costs |= a.costly;
                }
            }
            if !any || flips & active != active || costs & active != active {
                continue;
            }
            let Some(acc) = scc.iter().map(|v| v.index()).find(|&v| accepting[v]) else { continue };
            // Arcs the loop must use: one flip and one cost per active coordinate.
            let mut required: Vec<(usize, usize)> = Vec::new();
            for i in 0..dim {
                if active >> i & 1 == 0 {
                    continue;
                }
                let wants: [fn(&Arc, usize) -> bool; 2] =
                    [|a, i| a.changed >> i & 1 == 1, |a, i| a.costly >> i & 1 == 1];
                for want in wants {
                    let pick = scc
                        .iter()
                        .map(|v| v.index())
                        .find_map(|v| arcs[v].iter().find(|a| inner(v, a) && want(a, i)).map(|a| (v, a.target)));
                    required.push(pick.expect("component has the arc"));
                }
            }
            let keep = |v: usize, a: &Arc| inner(v, a);
            let mut cycle = vec![acc];
            let mut cur = acc;
            for (u, w) in required {
                let p = bfs(arcs, cur, u, &keep)?;
                cycle.extend_from_slice(&p[1..]);
                cycle.push(w);
                cur = w;
            }
            if cycle.len() == 1 {
                let w = arcs[acc].iter().find(|a| inner(acc, a)).expect("non-trivial component").target;
                cycle.push(w);
                cur = w;
            }
            let p = bfs(arcs, cur, acc, &keep)?;
            cycle.extend_from_slice(&p[1..]);
            cycle.pop();
            let mut prefix = bfs(arcs, init, acc, &|_, _| true)?;
            prefix.pop();
            return Some(GraphLasso { prefix, cycle });
        }
    }
    None
}

fn plain(arcs: &[Vec<Arc>], keep: impl Fn(&Arc) -> bool) -> Vec<Vec<usize>> {
    arcs.iter().map(|es| es.iter().filter(|a| keep(a)).map(|a| a.target).collect()).collect()
}

/// Shortest path `from ..= to` using arcs accepted by `keep`.
fn bfs(arcs: &[Vec<Arc>], from: usize, to: usize, keep: &dyn Fn(usize, &Arc) -> bool) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; arcs.len()];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![v];
            let mut x = v;
            while x != from {
                x = parent[x];
                path.push(x);
            }
            path.reverse();
            return Some(path);
        }
        for a in arcs[v].iter().filter(|a| keep(v, a)) {
            if parent[a.target] == usize::MAX {
                parent[a.target] = v;
                queue.push_back(a.target);
            }
        }
    }
    None
}
