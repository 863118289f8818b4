//! Accepting-lasso search on explicit graphs.

use std::collections::VecDeque;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};

/// A vertex lasso `prefix · cycle^ω`; `cycle` is non-empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphLasso {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

/// Finds a lasso from `init` whose cycle visits an accepting vertex.
/// `succ[v]` lists the successors of `v`.
pub fn accepting_lasso(succ: &[Vec<usize>], init: usize, accepting: &[bool]) -> Option<GraphLasso> {
    let n = succ.len();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        g.add_node(());
    }
    for (v, ws) in succ.iter().enumerate() {
        for &w in ws {
            g.add_edge(NodeIndex::new(v), NodeIndex::new(w), ());
        }
    }
    let reach = reachable(succ, init);
    let mut comp = vec![usize::MAX; n];
    let sccs = kosaraju_scc(&g);
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    for (c, scc) in sccs.iter().enumerate() {
        let nontrivial = scc.len() > 1 || succ[scc[0].index()].contains(&scc[0].index());
        if !nontrivial || !reach[scc[0].index()] {
            continue;
        }
        let Some(a) = scc.iter().map(|v| v.index()).find(|&v| accepting[v]) else { continue };
        let mut prefix = bfs_path(succ, init, Some(a), |_| true)?;
        prefix.pop();
        let back = bfs_path(succ, a, None, |v| comp[v] == c)?;
        return Some(GraphLasso { prefix, cycle: back });
    }
    None
}

/// A graph explored on demand; vertices are numbered by the implementor.
pub trait LazyGraph {
    fn successors(&mut self, v: usize) -> Vec<usize>;
    fn is_accepting(&self, v: usize) -> bool;
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Color {
    White,
    Cyan,
    Blue,
    Red,
}

/// Nested depth-first search for a lasso from `init` through an accepting
/// vertex on the loop. Stops at the first one found, so only part of the
/// graph may be explored.
pub fn lazy_accepting_lasso(g: &mut impl LazyGraph, init: usize) -> Option<GraphLasso> {
    let mut succ: Vec<Option<Vec<usize>>> = Vec::new();
    let mut color: Vec<Color> = Vec::new();
    fn next<G: LazyGraph>(g: &mut G, succ: &mut Vec<Option<Vec<usize>>>, v: usize) -> Vec<usize> {
        if succ.len() <= v {
            succ.resize(v + 1, None);
        }
        succ[v].get_or_insert_with(|| g.successors(v)).clone()
    }
    fn paint(color: &mut Vec<Color>, v: usize, c: Color) {
        if color.len() <= v {
            color.resize(v + 1, Color::White);
        }
        color[v] = c;
    }
    let get = |color: &Vec<Color>, v: usize| color.get(v).copied().unwrap_or(Color::White);

    // Blue search: stack of (vertex, successors, next index).
    let mut blue: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    paint(&mut color, init, Color::Cyan);
    let s0 = next(g, &mut succ, init);
    blue.push((init, s0, 0));
    while let Some(top) = blue.last_mut() {
        let v = top.0;
        if top.2 < top.1.len() {
            let w = top.1[top.2];
            top.2 += 1;
            match get(&color, w) {
                Color::Cyan if g.is_accepting(v) || g.is_accepting(w) => {
                    let stack: Vec<usize> = blue.iter().map(|e| e.0).collect();
                    let at = stack.iter().position(|&x| x == w).unwrap();
                    return Some(GraphLasso { prefix: stack[..at].to_vec(), cycle: stack[at..].to_vec() });
                }
                Color::White => {
                    paint(&mut color, w, Color::Cyan);
                    let sw = next(g, &mut succ, w);
                    blue.push((w, sw, 0));
                }
                _ => {}
            }
            continue;
        }
        if g.is_accepting(v) {
            // Red search from the seed for a vertex still on the blue stack.
            let mut red: Vec<(usize, Vec<usize>, usize)> = vec![(v, top.1.clone(), 0)];
            while let Some(r) = red.last_mut() {
                if r.2 < r.1.len() {
                    let w = r.1[r.2];
                    r.2 += 1;
                    match get(&color, w) {
                        Color::Cyan => {
                            let stack: Vec<usize> = blue.iter().map(|e| e.0).collect();
                            let at = stack.iter().position(|&x| x == w).unwrap();
                            let mut cycle = stack[at..].to_vec();
                            cycle.extend(red.iter().skip(1).map(|e| e.0));
                            return Some(GraphLasso { prefix: stack[..at].to_vec(), cycle });
                        }
                        Color::Blue => {
                            paint(&mut color, w, Color::Red);
                            let sw = next(g, &mut succ, w);
                            red.push((w, sw, 0));
                        }
                        _ => {}
                    }
                } else {
                    red.pop();
                }
            }
            paint(&mut color, v, Color::Red);
        } else {
            paint(&mut color, v, Color::Blue);
        }
        blue.pop();
    }
    None
}

/// Vertices reachable from `init`.
pub fn reachable(succ: &[Vec<usize>], init: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![init];
    seen[init] = true;
    while let Some(v) = stack.pop() {
        for &w in &succ[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Shortest path `from .. target` (both included) through vertices allowed by
/// `keep`. Without a target, finds the shortest cycle back to `from` instead
/// and returns it without the closing repetition.
fn bfs_path(
    succ: &[Vec<usize>],
    from: usize,
    target: Option<usize>,
    keep: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    if target == Some(from) {
        return Some(vec![from]);
    }
    let mut parent = vec![usize::MAX; succ.len()];
    let mut queue = VecDeque::from([from]);
    let mut seen = vec![false; succ.len()];
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &succ[v] {
            if !keep(w) {
                continue;
            }
            if w == from && target.is_none() {
                return Some(unwind(&parent, from, v));
            }
            if seen[w] {
                continue;
            }
            seen[w] = true;
            parent[w] = v;
            if target == Some(w) {
                return Some(unwind(&parent, from, w));
            }
            queue.push_back(w);
        }
    }
    None
}

fn unwind(parent: &[usize], from: usize, mut v: usize) -> Vec<usize> {
    let mut path = vec![v];
    while v != from {
        v = parent[v];
        path.push(v);
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(succ: &[Vec<usize>], accepting: &[bool], l: &GraphLasso) {
        let path: Vec<usize> = l.prefix.iter().chain(&l.cycle).copied().collect();
        assert_eq!(path[0], 0);
        for w in path.windows(2) {
            assert!(succ[w[0]].contains(&w[1]));
        }
        assert!(succ[*l.cycle.last().unwrap()].contains(&l.cycle[0]));
        assert!(l.cycle.iter().any(|&v| accepting[v]));
    }

    #[test]
    fn finds_lassos() {
        let succ = vec![vec![1], vec![2], vec![1, 3], vec![3]];
        let acc = vec![false, false, true, false];
        let l = accepting_lasso(&succ, 0, &acc).unwrap();
        check(&succ, &acc, &l);
        assert_eq!(l, GraphLasso { prefix: vec![0, 1], cycle: vec![2, 1] });

        // A self-loop at the start must not cut the prefix search short.
        let looped = vec![vec![0, 1], vec![1]];
        let l = accepting_lasso(&looped, 0, &[false, true]).unwrap();
        assert_eq!(l, GraphLasso { prefix: vec![0], cycle: vec![1] });

        let acc = vec![false, false, false, true];
        let l = accepting_lasso(&succ, 0, &acc).unwrap();
        check(&succ, &acc, &l);
        assert_eq!(l.cycle, vec![3]);
    }

    struct Explicit<'a>(&'a [Vec<usize>], &'a [bool]);

    impl LazyGraph for Explicit<'_> {
        fn successors(&mut self, v: usize) -> Vec<usize> {
            self.0[v].clone()
        }
        fn is_accepting(&self, v: usize) -> bool {
            self.1[v]
        }
    }

    #[test]
    fn nested_search_agrees_with_scc_search() {
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut rand = move |n: u64| {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed % n
        };
        for _ in 0..2000 {
            let n = 1 + rand(7) as usize;
            let succ: Vec<Vec<usize>> =
                (0..n).map(|_| (0..n).filter(|_| rand(3) == 0).collect()).collect();
            let acc: Vec<bool> = (0..n).map(|_| rand(3) == 0).collect();
            let lazy = lazy_accepting_lasso(&mut Explicit(&succ, &acc), 0);
            assert_eq!(lazy.is_some(), accepting_lasso(&succ, 0, &acc).is_some(), "{succ:?} {acc:?}");
            if let Some(l) = lazy {
                check(&succ, &acc, &l);
            }
        }
    }

    #[test]
    fn unreachable_or_acyclic_acceptance() {
        let succ = vec![vec![0], vec![1]];
        assert_eq!(accepting_lasso(&succ, 0, &[false, true]), None);
        let succ = vec![vec![1], vec![2], vec![2]];
        assert_eq!(accepting_lasso(&succ, 0, &[false, true, false]), None);
    }
}
