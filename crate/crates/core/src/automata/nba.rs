//! Explicit Büchi automata with conjunctive literal guards.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write};

use super::emptiness::accepting_lasso;
use super::tableau::{next_level, Arena, Obligation};
use super::AutomatonError;
use crate::formula::{Formula, Prop};

/// A conjunction of literals; the empty guard is `tt`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guard {
    pub pos: BTreeSet<Prop>,
    pub neg: BTreeSet<Prop>,
}

impl Guard {
    pub fn holds(&self, letter: &BTreeSet<Prop>) -> bool {
        self.pos.is_subset(letter) && self.neg.is_disjoint(letter)
    }

    pub fn to_formula(&self) -> Formula {
        let lits = self
            .pos
            .iter()
            .map(|p| Formula::Atom(p.clone()))
            .chain(self.neg.iter().map(|p| Formula::NegAtom(p.clone())));
        Formula::conjunction(lits).unwrap_or_else(Formula::tt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub guard: Guard,
    pub target: usize,
    pos: u128,
    neg: u128,
}

#[derive(Clone, Debug)]
pub struct BuchiAutomaton {
    props: Vec<Prop>,
    prop_index: HashMap<Prop, u32>,
    initial: usize,
    accepting: Vec<bool>,
    transitions: Vec<Vec<Transition>>,
}

/// A lasso word over proposition sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropLasso {
    pub prefix: Vec<BTreeSet<Prop>>,
    pub cycle: Vec<BTreeSet<Prop>>,
}

impl PropLasso {
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slot(&self, s: usize) -> &BTreeSet<Prop> {
        if s < self.prefix.len() {
            &self.prefix[s]
        } else {
            &self.cycle[s - self.prefix.len()]
        }
    }
}

/// Translates a variable-free formula into a Büchi automaton accepting
/// exactly its models (over proposition-set words).
pub fn ltl_to_nba(f: &Formula) -> Result<BuchiAutomaton, AutomatonError> {
    let (arena, root) = Arena::build(f, None)?;
    let m = arena.num_eventualities();
    let mut states: Vec<(Vec<Obligation>, u32)> = Vec::new();
    let mut index: HashMap<(Vec<Obligation>, u32), usize> = HashMap::new();
    let mut raw: Vec<Vec<(u128, u128, usize)>> = Vec::new();
    let Some(init) = arena.initial(root) else {
        // Unsatisfiable: a single non-accepting state without transitions.
        return Ok(BuchiAutomaton::from_parts(arena.props.clone(), vec![false], vec![vec![]]));
    };
    let key = (init, 0);
    index.insert(key.clone(), 0);
    states.push(key);
    raw.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    let no_cost: Vec<u64> = Vec::new();
    let mut memo: HashMap<Vec<Obligation>, Vec<super::tableau::Branch>> = HashMap::new();
    while let Some(q) = queue.pop_front() {
        let (obs, level) = states[q].clone();
        let branches = memo.entry(obs.clone()).or_insert_with(|| arena.expand(&obs, &no_cost)).clone();
        let mut out = Vec::new();
        for b in branches {
            let key = (b.next, next_level(level, m, b.postponed));
            let t = match index.get(&key) {
                Some(&t) => t,
                None => {
                    let t = states.len();
                    index.insert(key.clone(), t);
                    states.push(key);
                    raw.push(Vec::new());
                    queue.push_back(t);
                    t
                }
            };
            out.push((b.pos, b.neg, t));
        }
        out.sort();
        out.dedup();
        raw[q] = out;
    }
    let accepting: Vec<bool> = states.iter().map(|(_, l)| *l == m).collect();
    Ok(BuchiAutomaton::from_raw(arena.props.clone(), accepting, raw))
}

impl BuchiAutomaton {
    fn from_parts(props: Vec<Prop>, accepting: Vec<bool>, transitions: Vec<Vec<Transition>>) -> Self {
        let prop_index = props.iter().enumerate().map(|(i, p)| (p.clone(), i as u32)).collect();
        BuchiAutomaton { props, prop_index, initial: 0, accepting, transitions }
    }

    /// Assembles an automaton from mask-encoded transitions, dropping states
    /// from which no infinite run exists (the initial state is kept).
    fn from_raw(props: Vec<Prop>, accepting: Vec<bool>, raw: Vec<Vec<(u128, u128, usize)>>) -> Self {
        let n = raw.len();
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for q in 0..n {
                if alive[q] && !raw[q].iter().any(|&(_, _, t)| alive[t]) {
                    alive[q] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        alive[0] = true;
        let mut renum = vec![usize::MAX; n];
        let mut k = 0;
        for q in 0..n {
            if alive[q] {
                renum[q] = k;
                k += 1;
            }
        }
        let guard = |mask: u128| -> BTreeSet<Prop> {
            (0..props.len()).filter(|&i| mask >> i & 1 == 1).map(|i| props[i].clone()).collect()
        };
        let mut transitions = Vec::with_capacity(k);
        let mut acc = Vec::with_capacity(k);
        for q in 0..n {
            if !alive[q] {
                continue;
            }
            acc.push(accepting[q]);
            transitions.push(
                raw[q]
                    .iter()
                    .filter(|&&(_, _, t)| alive[t])
                    .map(|&(pos, neg, t)| Transition {
                        guard: Guard { pos: guard(pos), neg: guard(neg) },
                        target: renum[t],
                        pos,
                        neg,
                    })
                    .collect(),
            );
        }
        BuchiAutomaton::from_parts(props, acc, transitions)
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn transitions(&self, q: usize) -> &[Transition] {
        &self.transitions[q]
    }

    /// Propositions mentioned by guards.
    pub fn alphabet(&self) -> &[Prop] {
        &self.props
    }

    /// Encodes a letter for [`successors_masked`](Self::successors_masked).
    pub fn letter_mask<'p>(&self, letter: impl IntoIterator<Item = &'p Prop>) -> u128 {
        letter.into_iter().filter_map(|p| self.prop_index.get(p)).fold(0, |m, &i| m | 1 << i)
    }

    pub fn successors_masked(&self, q: usize, mask: u128) -> impl Iterator<Item = usize> + '_ {
        self.transitions[q].iter().filter(move |t| t.pos & !mask == 0 && t.neg & mask == 0).map(|t| t.target)
    }

    pub fn successors(&self, q: usize, letter: &BTreeSet<Prop>) -> Vec<usize> {
        let mut out: Vec<usize> = self.successors_masked(q, self.letter_mask(letter)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether the automaton has an accepting run on `w`.
    pub fn accepts_lasso(&self, w: &PropLasso) -> bool {
        nba_accepts_lasso(self, w)
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states {}", self.num_states());
        let _ = writeln!(out, "initial {}", self.initial);
        let acc: Vec<String> =
            (0..self.num_states()).filter(|&q| self.accepting[q]).map(|q| q.to_string()).collect();
        let _ = writeln!(out, "accepting {}", acc.join(" "));
        for (q, ts) in self.transitions.iter().enumerate() {
            for t in ts {
                let _ = writeln!(out, "{q} --[{}]--> {}", t.guard.to_formula(), t.target);
            }
        }
        out
    }
}

impl fmt::Display for BuchiAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

pub fn nba_accepts_lasso(a: &BuchiAutomaton, w: &PropLasso) -> bool {
    if w.cycle.is_empty() {
        return false;
    }
    let len = w.len();
    let n = a.num_states();
    let next_slot = |s: usize| if s + 1 == len { w.prefix.len() } else { s + 1 };
    let masks: Vec<u128> = (0..len).map(|s| a.letter_mask(w.slot(s))).collect();
    let succ: Vec<Vec<usize>> = (0..len * n)
        .map(|v| {
            let (s, q) = (v / n, v % n);
            a.successors_masked(q, masks[s]).map(|t| next_slot(s) * n + t).collect()
        })
        .collect();
    let accepting: Vec<bool> = (0..len * n).map(|v| a.accepting[v % n]).collect();
    accepting_lasso(&succ, a.initial, &accepting).is_some()
}

/// An accepted lasso word, or `None` if the language is empty.
pub fn buchi_empty(a: &BuchiAutomaton) -> Option<PropLasso> {
    let mut succ: Vec<Vec<usize>> = a.transitions.iter().map(|ts| ts.iter().map(|t| t.target).collect()).collect();
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let l = accepting_lasso(&succ, a.initial, &a.accepting)?;
    let path: Vec<usize> = l.prefix.iter().chain(&l.cycle).copied().collect();
    let letter = |i: usize| -> BTreeSet<Prop> {
        let (q, t) = (path[i], if i + 1 < path.len() { path[i + 1] } else { l.cycle[0] });
        let tr = a.transitions[q].iter().find(|tr| tr.target == t).expect("lasso follows transitions");
        tr.guard.pos.clone()
    };
    let letters: Vec<BTreeSet<Prop>> = (0..path.len()).map(letter).collect();
    let (prefix, cycle) = letters.split_at(l.prefix.len());
    let w = PropLasso { prefix: prefix.to_vec(), cycle: cycle.to_vec() };
    debug_assert!(nba_accepts_lasso(a, &w));
    Some(w)
}
