//! Colorings of cost-traces with the fresh propositions `p@1 .. p@d`.

use std::collections::HashMap;

use super::{CostLetter, CostTrace, TraceError};
use crate::formula::Prop;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ColoringError {
    #[error("color proposition p@{coord} exceeds trace dimension {dim}")]
    ColorArity { coord: u32, dim: usize },
    #[error("unrolled prefix of length {prefix} and loop of length {looplen} do not fit the base trace")]
    Shape { prefix: usize, looplen: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A trace carrying coloring propositions. Only `Prop::Color(i)` with
/// `i <= dim` may occur; all other propositions and costs are the base trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    trace: CostTrace,
}

/// The changepoints of one coordinate of a lasso coloring: the `finite` ones
/// lie in `0..=|prefix|`, and each `r` in `recurring` (all in
/// `|prefix|+1 ..= |prefix|+period`) stands for `r, r+period, r+2*period, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Changepoints {
    pub finite: Vec<usize>,
    pub recurring: Vec<usize>,
    pub period: usize,
}

impl Changepoints {
    pub fn is_finite(&self) -> bool {
        self.recurring.is_empty()
    }

    /// Start of the tail, if there are finitely many changepoints.
    pub fn tail_start(&self) -> Option<usize> {
        if self.is_finite() {
            self.finite.last().copied()
        } else {
            None
        }
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.finite.contains(&pos)
            || self.recurring.iter().any(|&r| pos >= r && (pos - r).is_multiple_of(self.period))
    }

    /// Smallest changepoint strictly after `pos`.
    pub fn next_after(&self, pos: usize) -> Option<usize> {
        let finite = self.finite.iter().copied().find(|&c| c > pos);
        let recurring = self
            .recurring
            .iter()
            .map(|&r| if r > pos { r } else { r + self.period * ((pos - r) / self.period + 1) })
            .min();
        match (finite, recurring) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// All changepoints below `limit`, in order.
    pub fn up_to(&self, limit: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.finite.first().copied();
        while let Some(c) = cur.filter(|&c| c < limit) {
            out.push(c);
            cur = self.next_after(c);
        }
        out
    }
}

/// A block `[start, end)` of a coloring, or the tail when `end` is `None`.
/// `cost` is `None` for an infinite tail cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub end: Option<usize>,
    pub cost: Option<u64>,
}

fn color_prop(i: u32) -> Prop {
    Prop::Color(i)
}

impl Coloring {
    pub fn from_trace(trace: CostTrace) -> Result<Self, ColoringError> {
        for l in trace.letters() {
            for p in &l.props {
                if let Prop::Color(i) = p {
                    if *i == 0 || *i as usize > trace.dim() {
                        return Err(ColoringError::ColorArity { coord: *i, dim: trace.dim() });
                    }
                }
            }
        }
        Ok(Coloring { trace })
    }

    /// Unrolls `base` into a lasso with the given prefix and loop lengths and
    /// sets `p@i` at position `n` iff `color(n, i)`. The loop length must be
    /// a multiple of the base loop length, the prefix at least the base prefix.
    pub fn unroll(
        base: &CostTrace,
        prefix: usize,
        looplen: usize,
        color: impl Fn(usize, u32) -> bool,
    ) -> Result<Self, ColoringError> {
        let bp = base.prefix().len();
        if prefix < bp || looplen == 0 || !looplen.is_multiple_of(base.cycle().len()) {
            return Err(ColoringError::Shape { prefix, looplen });
        }
        let letter = |n: usize| {
            let mut l = base.at(n).clone();
            l.props.retain(|p| !matches!(p, Prop::Color(_)));
            for i in 1..=base.dim() as u32 {
                if color(n, i) {
                    l.props.insert(color_prop(i));
                }
            }
            l
        };
        let pre: Vec<CostLetter> = (0..prefix).map(letter).collect();
        let cyc: Vec<CostLetter> = (prefix..prefix + looplen).map(letter).collect();
        Ok(Coloring { trace: CostTrace::new(pre, cyc, base.dim())? })
    }

    pub fn trace(&self) -> &CostTrace {
        &self.trace
    }

    pub fn into_trace(self) -> CostTrace {
        self.trace
    }

    /// The underlying trace with all coloring propositions removed.
    pub fn base(&self) -> CostTrace {
        self.trace.map_props(|_, props| {
            props.iter().filter(|p| !matches!(p, Prop::Color(_))).cloned().collect()
        })
    }

    /// Whether this is a coloring of `w`: same letters (ignoring colors) and
    /// costs at every position.
    pub fn conforms_to(&self, w: &CostTrace) -> bool {
        if w.dim() != self.trace.dim() {
            return false;
        }
        let base = self.base();
        let horizon = base.prefix().len().max(w.prefix().len())
            + lcm(base.cycle().len(), w.cycle().len());
        (0..horizon).all(|n| base.at(n) == w.at(n))
    }

    pub fn color(&self, position: usize, coord: u32) -> bool {
        self.trace.at(position).props.contains(&color_prop(coord))
    }

    pub fn changepoints(&self, coord: u32) -> Changepoints {
        let p = self.trace.prefix().len();
        let period = self.trace.cycle().len();
        let differs = |m: usize| self.color(m - 1, coord) != self.color(m, coord);
        let mut finite = vec![0];
        finite.extend((1..=p).filter(|&m| differs(m)));
        let recurring = (p + 1..=p + period).filter(|&m| differs(m)).collect();
        Changepoints { finite, recurring, period }
    }

    /// Every distinct block of coordinate `coord`: the ones starting at a
    /// finite changepoint, one period of the recurring ones, and the tail.
    pub fn blocks(&self, coord: u32) -> Vec<Block> {
        let cps = self.changepoints(coord);
        let w = &self.trace;
        let starts = cps.finite.iter().chain(cps.recurring.iter()).copied();
        starts
            .map(|start| match cps.next_after(start) {
                Some(end) => Block { start, end: Some(end), cost: Some(w.segment_cost(start, end - 1, coord)) },
                None => {
                    let cost = if w.loop_cost(coord) > 0 {
                        None
                    } else {
                        Some(w.segment_cost(start, start.max(w.prefix().len()), coord))
                    };
                    Block { start, end: None, cost }
                }
            })
            .collect()
    }

    /// Every block and the tail cost at most `k` in coordinate `coord`.
    pub fn check_bounded(&self, k: u64, coord: u32) -> bool {
        self.blocks(coord).iter().all(|b| b.cost.is_some_and(|c| c <= k))
    }

    /// Every block (the tail excepted) costs at least `k` in coordinate `coord`.
    pub fn check_spaced(&self, k: u64, coord: u32) -> bool {
        self.blocks(coord).iter().filter(|b| b.end.is_some()).all(|b| b.cost.is_some_and(|c| c >= k))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Greedy `k`-spaced coloring of `w` in every coordinate: all colors start
/// off, and `p@i` flips at the first position whose block so far already
/// costs at least `k` in coordinate `i`.
pub fn make_spaced_coloring(w: &CostTrace, k: u64) -> Coloring {
    let d = w.dim();
    // State at position m: slot, then per coordinate the color and the
    // block cost up to m capped at k.
    type State = (usize, Vec<(bool, u64)>);
    let mut seen: HashMap<State, usize> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut cur: State = (w.slot(0), vec![(false, 0); d]);
    let loop_start = loop {
        if let Some(&at) = seen.get(&cur) {
            break at;
        }
        seen.insert(cur.clone(), states.len());
        states.push(cur.clone());
        let (slot, coords) = &cur;
        let step = &w.letter(*slot).cost;
        let next = coords
            .iter()
            .enumerate()
            .map(|(i, &(bit, acc))| {
                if acc >= k {
                    (!bit, 0)
                } else {
                    (bit, acc.saturating_add(step[i]).min(k))
                }
            })
            .collect();
        cur = (w.next_slot(*slot), next);
    };
    let letter = |(slot, coords): &State| {
        let mut l = w.letter(*slot).clone();
        l.props.retain(|p| !matches!(p, Prop::Color(_)));
        for (i, (bit, _)) in coords.iter().enumerate() {
            if *bit {
                l.props.insert(color_prop(i as u32 + 1));
            }
        }
        l
    };
    let prefix = states[..loop_start].iter().map(letter).collect();
    let cycle = states[loop_start..].iter().map(letter).collect();
    let trace = CostTrace::new(prefix, cycle, d).expect("unrolling preserves kappa consistency");
    Coloring { trace }
}
