//! Ultimately periodic cost-traces and the reference semantics.

mod coloring;
mod eval;
mod format;

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::Prop;

pub use coloring::{make_spaced_coloring, Block, Changepoints, Coloring, ColoringError};
pub use eval::{evaluate, evaluate_strict, EvalError};
pub use format::{parse_trace, write_trace, TraceFormatError};

/// One position of a cost-trace: the propositions holding there and the
/// cost vector of the step leaving it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CostLetter {
    pub props: BTreeSet<Prop>,
    pub cost: Vec<u64>,
}

impl CostLetter {
    pub fn new(props: impl IntoIterator<Item = Prop>, cost: Vec<u64>) -> Self {
        CostLetter { props: props.into_iter().collect(), cost }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("the loop of a lasso trace must not be empty")]
    EmptyLoop,
    #[error("letter {position} has {found} cost entries, expected {dim}")]
    CostArity { position: usize, found: usize, dim: usize },
    #[error("kappa{coord} at position {position} disagrees with the cost of the step into it")]
    KappaInconsistent { position: usize, coord: u32 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// A lasso `prefix · loop^ω` over cost letters.
///
/// Positions index the infinite unrolling; a *slot* is the index into
/// `prefix ++ loop` that a position maps to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CostTrace {
    prefix: Vec<CostLetter>,
    cycle: Vec<CostLetter>,
    dim: usize,
}

impl CostTrace {
    /// Builds a trace and checks the `kappa` invariant at every step, including
    /// the prefix/loop and loop/loop seams. Position 0 is unconstrained.
    pub fn new(
        prefix: Vec<CostLetter>,
        cycle: Vec<CostLetter>,
        dim: usize,
    ) -> Result<Self, TraceError> {
        let trace = CostTrace { prefix, cycle, dim };
        trace.check()?;
        Ok(trace)
    }

    /// Builds a trace whose `kappa_i` propositions are derived from the costs,
    /// discarding whatever `kappa` atoms the letters carried. Position 0 keeps
    /// its `kappa` atoms unless it is also a loop position.
    pub fn with_derived_kappa(
        mut prefix: Vec<CostLetter>,
        mut cycle: Vec<CostLetter>,
        dim: usize,
    ) -> Result<Self, TraceError> {
        if cycle.is_empty() {
            return Err(TraceError::EmptyLoop);
        }
        let len = prefix.len() + cycle.len();
        let costs: Vec<Vec<u64>> =
            prefix.iter().chain(cycle.iter()).map(|l| l.cost.clone()).collect();
        let p = prefix.len();
        let pred = |slot: usize| -> Option<usize> {
            if slot == 0 {
                if p == 0 {
                    Some(len - 1)
                } else {
                    None
                }
            } else if slot == p {
                // Reached both from prefix end (if any) and loop end.
                Some(len - 1)
            } else {
                Some(slot - 1)
            }
        };
        for slot in 0..len {
            let letter = if slot < p { &mut prefix[slot] } else { &mut cycle[slot - p] };
            let Some(from) = pred(slot) else { continue };
            for i in 1..=dim as u32 {
                letter.props.remove(&Prop::Kappa(i));
                if costs[from].get(i as usize - 1).copied().unwrap_or(0) > 0 {
                    letter.props.insert(Prop::Kappa(i));
                }
            }
        }
        CostTrace::new(prefix, cycle, dim)
    }

    fn check(&self) -> Result<(), TraceError> {
        if self.dim == 0 {
            return Err(TraceError::ZeroDimension);
        }
        if self.cycle.is_empty() {
            return Err(TraceError::EmptyLoop);
        }
        for (position, l) in self.letters().enumerate() {
            if l.cost.len() != self.dim {
                return Err(TraceError::CostArity { position, found: l.cost.len(), dim: self.dim });
            }
        }
        // Steps j -> j+1 for j in 0..len cover every distinct step of the lasso.
        for j in 0..self.len() {
            let next = self.slot(j + 1);
            for i in 1..=self.dim as u32 {
                let positive = self.letter(j).cost[i as usize - 1] > 0;
                let marked = self.letter(next).props.contains(&Prop::Kappa(i));
                if positive != marked {
                    return Err(TraceError::KappaInconsistent { position: j + 1, coord: i });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prefix(&self) -> &[CostLetter] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[CostLetter] {
        &self.cycle
    }

    /// Number of slots, `|prefix| + |loop|`.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letters(&self) -> impl Iterator<Item = &CostLetter> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    pub fn slot(&self, position: usize) -> usize {
        let p = self.prefix.len();
        if position < p {
            position
        } else {
            p + (position - p) % self.cycle.len()
        }
    }

    pub fn next_slot(&self, slot: usize) -> usize {
        if slot + 1 == self.len() {
            self.prefix.len()
        } else {
            slot + 1
        }
    }

    pub fn letter(&self, slot: usize) -> &CostLetter {
        let p = self.prefix.len();
        if slot < p {
            &self.prefix[slot]
        } else {
            &self.cycle[slot - p]
        }
    }

    pub fn at(&self, position: usize) -> &CostLetter {
        self.letter(self.slot(position))
    }

    /// Cost of one period of the loop in `coord` (1-based).
    pub fn loop_cost(&self, coord: u32) -> u64 {
        self.cycle.iter().map(|l| l.cost[coord as usize - 1]).sum()
    }

    /// Sum of coordinate-`coord` step costs for the steps `from .. to`.
    pub fn segment_cost(&self, from: usize, to: usize, coord: u32) -> u64 {
        assert!(from <= to, "segment must not be reversed");
        let c = coord as usize - 1;
        let p = self.prefix.len();
        let n = self.cycle.len();
        let mut sum = 0;
        let mut pos = from;
        while pos < to && pos < p {
            sum += self.prefix[pos].cost[c];
            pos += 1;
        }
        if pos < to {
            let full = ((to - pos) / n) as u64;
            sum += full * self.loop_cost(coord);
            pos += (full as usize) * n;
            while pos < to {
                sum += self.at(pos).cost[c];
                pos += 1;
            }
        }
        sum
    }

    /// A copy with the given letters' propositions replaced; costs unchanged.
    pub(crate) fn map_props(&self, mut f: impl FnMut(usize, &BTreeSet<Prop>) -> BTreeSet<Prop>) -> Self {
        let mut slot = 0;
        let mut map = |l: &CostLetter| {
            let out = CostLetter { props: f(slot, &l.props), cost: l.cost.clone() };
            slot += 1;
            out
        };
        let prefix = self.prefix.iter().map(&mut map).collect();
        let cycle = self.cycle.iter().map(&mut map).collect();
        CostTrace { prefix, cycle, dim: self.dim }
    }
}

impl fmt::Display for CostTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_trace(self))
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn segment_costs_on_t1() {
        let t = t1();
        assert_eq!(t.segment_cost(5, 5, 1), 0);
        assert_eq!(t.segment_cost(0, 1, 1), 3);
        assert_eq!(t.segment_cost(0, 4, 1), 6);
        assert_eq!(t.segment_cost(1, 2, 1), 0);
        assert_eq!(t.segment_cost(1, 102, 1), 150);
    }

    #[test]
    fn kappa_consistency_is_checked_across_seams() {
        // Loop seam: the last loop step has cost 1, so loop[0] needs kappa.
        let bad = CostTrace::new(vec![], vec![letter(&["q"], 3), letter(&["p", "kappa1"], 1)], 1);
        assert_eq!(bad, Err(TraceError::KappaInconsistent { position: 2, coord: 1 }));
        // Prefix seam.
        let bad = CostTrace::new(vec![letter(&["q"], 2)], vec![letter(&["p"], 0)], 1);
        assert_eq!(bad, Err(TraceError::KappaInconsistent { position: 1, coord: 1 }));
        // Position 0 is unconstrained.
        let ok = CostTrace::new(vec![letter(&["kappa1"], 0)], vec![letter(&[], 0)], 1);
        assert!(ok.is_ok());
        assert_eq!(CostTrace::new(vec![], vec![], 1), Err(TraceError::EmptyLoop));
        assert!(matches!(
            CostTrace::new(vec![], vec![letter(&[], 0)], 2),
            Err(TraceError::CostArity { .. })
        ));
    }

    #[test]
    fn derived_kappa_matches_costs() {
        let t = CostTrace::with_derived_kappa(
            vec![letter(&["kappa1"], 2)],
            vec![letter(&[], 0), letter(&["kappa1"], 5)],
            1,
        )
        .unwrap();
        assert!(t.letter(0).props.contains(&Prop::Kappa(1)));
        assert!(t.letter(1).props.contains(&Prop::Kappa(1)));
        assert!(!t.letter(2).props.contains(&Prop::Kappa(1)));
    }
}
