//! Pumpable fair paths: fair lassos in which every completed block of every
//! coordinate encloses a vertex repetition with positive cost.
//!
//! A vertex is pump-capable for coordinate `i` when its strongly connected
//! component in the subgraph of color-preserving edges contains an inner
//! edge with positive `i`-cost. Such a cycle can be spliced into any block
//! that visits the vertex without moving a changepoint of any coordinate.

use std::collections::{HashMap, VecDeque};

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::product::ColoredCostGraph;
use super::fair::{chi_fair_lasso, Arc};
use crate::automata::GraphLasso;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PumpError {
    #[error("lasso has an empty loop")]
    EmptyLoop,
    #[error("lasso does not start at the initial vertex")]
    NotInitial,
    #[error("no edge {0} -> {1} in the product")]
    NotAnEdge(usize, usize),
}

#[derive(Clone, Debug)]
pub struct PumpInfo {
    /// Component of every vertex in the color-preserving subgraph.
    pub component: Vec<usize>,
    /// Bit `i-1` set iff the vertex is pump-capable for coordinate `i`.
    pub capable: Vec<u32>,
}

pub fn pump_info(g: &ColoredCostGraph) -> PumpInfo {
    let n = g.num_vertices();
    let mut h: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        h.add_node(());
    }
    for v in 0..n {
        for e in g.edges(v) {
            if g.colors(v) == g.colors(e.target) {
                h.add_edge(NodeIndex::new(v), NodeIndex::new(e.target), ());
            }
        }
    }
    let mut component = vec![0; n];
    let sccs = kosaraju_scc(&h);
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            component[v.index()] = c;
        }
    }
    let mut comp_cap = vec![0u32; sccs.len()];
    for v in 0..n {
        for e in g.edges(v) {
            if g.colors(v) == g.colors(e.target) && component[v] == component[e.target] {
                for (i, &c) in g.edge_cost(e).iter().enumerate() {
                    if c > 0 {
                        comp_cap[component[v]] |= 1 << i;
                    }
                }
            }
        }
    }
    let capable = component.iter().map(|&c| comp_cap[c]).collect();
    PumpInfo { component, capable }
}

/// Augmented search state: a vertex plus the per-coordinate flags "the
/// current block has visited a pump-capable vertex".
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Aug {
    v: usize,
    flags: u32,
}

fn step(g: &ColoredCostGraph, info: &PumpInfo, from: Aug, w: usize) -> Option<Aug> {
    let changed = g.colors(from.v) ^ g.colors(w);
    // A changepoint closes a block, which must have been pumpable.
    if changed & !from.flags != 0 {
        return None;
    }
    Some(Aug { v: w, flags: (from.flags & !changed) | info.capable[w] })
}

/// Size statistics of the last search, for reporting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub search_states: usize,
}

/// An initial pumpable fair lasso, if one exists.
pub fn pumpable_fair_path(g: &ColoredCostGraph) -> Option<GraphLasso> {
    pumpable_fair_path_with_stats(g).0
}

pub fn pumpable_fair_path_with_stats(g: &ColoredCostGraph) -> (Option<GraphLasso>, SearchStats) {
    let (found, stats) = pumped_fair_path(g, 0);
    (found.map(|(l, _)| l), stats)
}

/// Like [`pumpable_fair_path`], but also returns a copy of the lasso in
/// which every spliced cycle is repeated until each completed block costs
/// more than `k` in its coordinate.
pub fn pumped_fair_path(g: &ColoredCostGraph, k: u64) -> (Option<(GraphLasso, GraphLasso)>, SearchStats) {
    let info = pump_info(g);
    let init = Aug { v: 0, flags: info.capable[0] };
    let mut states = vec![init];
    let mut index: HashMap<Aug, usize> = HashMap::from([(init, 0)]);
    let mut arcs: Vec<Vec<Arc>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let a = states[i];
        let mut out = Vec::new();
        for e in g.edges(a.v) {
            if let Some(b) = step(g, &info, a, e.target) {
                let j = *index.entry(b).or_insert_with(|| {
                    states.push(b);
                    states.len() - 1
                });
                out.push(Arc { target: j, changed: g.changed(a.v, e.target), costly: g.costly(e) });
            }
        }
        out.sort_unstable_by_key(|a| (a.target, a.changed, a.costly));
        out.dedup();
        arcs.push(out);
        i += 1;
    }
    let stats = SearchStats { search_states: states.len() };
    let accepting: Vec<bool> = states.iter().map(|a| g.is_accepting(a.v)).collect();
    let Some(l) = chi_fair_lasso(&arcs, 0, &accepting, g.dim()) else { return (None, stats) };
    let prefix: Vec<Aug> = l.prefix.iter().map(|&k| states[k]).collect();
    let cycle: Vec<Aug> = l.cycle.iter().map(|&k| states[k]).collect();
    let witness = splice_pumps(g, &info, &prefix, &cycle, 0);
    if g.dim() == 1 {
        debug_assert_eq!(verify_pumpable(g, &witness), Ok(true));
    }
    let pumped = if k == 0 { witness.clone() } else { splice_pumps(g, &info, &prefix, &cycle, k) };
    (Some((witness, pumped)), stats)
}

/// Inserts a positive-cost cycle at the first pump-capable vertex of every
/// completed block, turning a flag-consistent lasso into an explicitly
/// pumpable one. Each cycle is repeated often enough to cost more than `k`.
fn splice_pumps(g: &ColoredCostGraph, info: &PumpInfo, prefix: &[Aug], cycle: &[Aug], k: u64) -> GraphLasso {
    let p = prefix.len();
    let path: Vec<Aug> = prefix.iter().chain(cycle).copied().collect();
    let last = *cycle.last().expect("non-empty loop");
    // Flags carried into position `t`. The loop start is entered both from
    // the prefix and from the loop end; a block may need its pump on either.
    let carried = |t: usize| -> u32 {
        let from = |b: Aug, v: usize| b.flags & !g.changed(b.v, v);
        let v = path[t].v;
        let linear = if t == 0 { 0 } else { from(path[t - 1], v) };
        if t == p {
            linear & from(last, v)
        } else {
            linear
        }
    };
    let next = |t: usize| if t + 1 == path.len() { path[p].v } else { path[t + 1].v };
    // Coordinates that change color somewhere in the loop, and, for every
    // position, the coordinates changing at or after it.
    let loop_changes = (p..path.len()).fold(0, |m, t| m | g.changed(path[t].v, next(t)));
    let mut later = vec![loop_changes; path.len() + 1];
    for t in (0..p).rev() {
        later[t] = later[t + 1] | g.changed(path[t].v, next(t));
    }
    let mut cache: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut out = Vec::new();
    let mut loop_start = 0;
    for (t, a) in path.iter().enumerate() {
        if t == p {
            loop_start = out.len();
        }
        out.push(a.v);
        let fresh = info.capable[a.v] & !carried(t) & later[t];
        for i in 0..g.dim() {
            if fresh >> i & 1 == 1 {
                let c = cache.entry((a.v, i)).or_insert_with(|| pump_cycle(g, info, a.v, i));
                let mut cost = 0;
                let mut from = a.v;
                for &w in c.iter() {
                    cost += g.cost(from, w).expect("pump cycle follows edges")[i];
                    from = w;
                }
                for _ in 0..(k + 1).div_ceil(cost).max(1) {
                    out.extend_from_slice(c);
                }
            }
        }
    }
    let cycle = out.split_off(loop_start);
    GraphLasso { prefix: out, cycle }
}

/// A cycle `v -> .. -> v` inside `v`'s color-preserving component that uses
/// an edge with positive `i`-cost; returned without the leading `v`.
fn pump_cycle(g: &ColoredCostGraph, info: &PumpInfo, v: usize, i: usize) -> Vec<usize> {
    let comp = info.component[v];
    let inside = |a: usize, b: usize| info.component[a] == comp && info.component[b] == comp && g.colors(a) == g.colors(b);
    // Shortest over all positive edges (u, w): v ~> u -> w ~> v.
    let from_v = bfs_tree(g, v, &inside, false);
    let to_v = bfs_tree(g, v, &inside, true);
    let mut best: Option<(usize, usize, usize)> = None;
    for u in 0..g.num_vertices() {
        if info.component[u] != comp || from_v[u].is_none() {
            continue;
        }
        for e in g.edges(u) {
            let w = e.target;
            if inside(u, w) && g.edge_cost(e)[i] > 0 {
                if let (Some((du, _)), Some((dw, _))) = (from_v[u], to_v[w]) {
                    let len = du + 1 + dw;
                    if best.is_none_or(|b| len < b.0) {
                        best = Some((len, u, w));
                    }
                }
            }
        }
    }
    let (_, u, w) = best.expect("capable vertex has a positive cycle");
    let mut forward = vec![u];
    let mut x = u;
    while x != v {
        x = from_v[x].unwrap().1;
        forward.push(x);
    }
    forward.reverse();
    let mut out: Vec<usize> = forward[1..].to_vec();
    let mut x = w;
    out.push(x);
    while x != v {
        x = to_v[x].unwrap().1;
        out.push(x);
    }
    out
}

/// BFS distances and parents from `root` (or, with `reverse`, towards it).
fn bfs_tree(
    g: &ColoredCostGraph,
    root: usize,
    inside: &dyn Fn(usize, usize) -> bool,
    reverse: bool,
) -> Vec<Option<(usize, usize)>> {
    let n = g.num_vertices();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        for e in g.edges(a) {
            if inside(a, e.target) {
                if reverse {
                    adj[e.target].push(a);
                } else {
                    adj[a].push(e.target);
                }
            }
        }
    }
    let mut dist = vec![None; n];
    dist[root] = Some((0, root));
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        let d = dist[a].unwrap().0;
        for &b in &adj[a] {
            if dist[b].is_none() {
                dist[b] = Some((d + 1, a));
                queue.push_back(b);
            }
        }
    }
    dist
}

/// Whether `lasso` is a fair path from the initial vertex in which every
/// completed block of every coordinate contains a vertex repetition with
/// positive cost in that coordinate between the two visits.
pub fn verify_pumpable(g: &ColoredCostGraph, lasso: &GraphLasso) -> Result<bool, PumpError> {
    if lasso.cycle.is_empty() {
        return Err(PumpError::EmptyLoop);
    }
    let (p, l) = (lasso.prefix.len(), lasso.cycle.len());
    let at = |t: usize| if t < p { lasso.prefix[t] } else { lasso.cycle[(t - p) % l] };
    if at(0) != 0 {
        return Err(PumpError::NotInitial);
    }
    let horizon = p + 3 * l;
    let mut costs = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (a, b) = (at(t), at(t + 1));
        costs.push(g.cost(a, b).ok_or(PumpError::NotAnEdge(a, b))?.to_vec());
    }
    if !lasso.cycle.iter().any(|&v| g.is_accepting(v)) {
        return Ok(false);
    }
    // Infinitely many changepoints exactly in the coordinates of infinite cost.
    let (mut flips, mut costly) = (0, 0);
    for t in p..p + l {
        flips |= g.changed(at(t), at(t + 1));
        costly |= costs[t].iter().enumerate().filter(|(_, &c)| c > 0).fold(0, |m, (i, _)| m | 1 << i);
    }
    if flips != costly {
        return Ok(false);
    }
    for i in 0..g.dim() {
        let color = |t: usize| g.colors(at(t)) >> i & 1;
        let changes: Vec<usize> = (1..=horizon).filter(|&t| color(t) != color(t - 1)).collect();
        let mut start = 0;
        for &end in &changes {
            if start >= p + l {
                break;
            }
            if !has_pump(&at, &costs, i, start, end) {
                return Ok(false);
            }
            start = end;
        }
    }
    Ok(true)
}

fn has_pump(at: &dyn Fn(usize) -> usize, costs: &[Vec<u64>], i: usize, start: usize, end: usize) -> bool {
    let mut acc = vec![0u64; end - start + 1];
    for t in start..end {
        acc[t - start + 1] = acc[t - start] + costs[t][i];
    }
    (start..end).any(|s| (s + 1..end).any(|t| at(s) == at(t) && acc[t - start] > acc[s - start]))
}
