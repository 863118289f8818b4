//! Optimal valuations for model checking against the unipolar fragments.
//!
//! Each objective is reduced to searches over a single value using
//! monotonicity: larger eventually-bounds and smaller always-bounds never
//! hurt. With several cost coordinates this reduction is not available and
//! only exhaustive box search is offered.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::formula::{eliminate_always_vars, Formula, Valuation, Var};
use crate::modelcheck::{check_exists, check_fixed, check_forall, forall_upper_bound, ModelCheckError};
use crate::system::TransitionSystem;
use crate::trace::{evaluate, CostTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Least value of the smallest eventually-bound.
    MinMin,
    /// Least value of the largest eventually-bound.
    MinMax,
    /// Greatest value of the largest always-bound.
    MaxMax,
    /// Greatest value of the smallest always-bound.
    MaxMin,
}

impl Objective {
    pub const ALL: [Objective; 4] = [Objective::MinMin, Objective::MinMax, Objective::MaxMax, Objective::MaxMin];

    /// Whether the objective ranges over eventually-variables.
    pub fn minimizes(self) -> bool {
        matches!(self, Objective::MinMin | Objective::MinMax)
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::MinMin => "min-min",
            Objective::MinMax => "min-max",
            Objective::MaxMax => "max-max",
            Objective::MaxMin => "max-min",
        }
    }

    /// The inner aggregate over the variables of a valuation.
    fn inner(self, values: &[u64]) -> u64 {
        match self {
            Objective::MinMin | Objective::MaxMin => values.iter().copied().min().unwrap_or(0),
            Objective::MinMax | Objective::MaxMax => values.iter().copied().max().unwrap_or(0),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown objective {0:?}; expected min-min, min-max, max-max or max-min")]
pub struct ParseObjectiveError(String);

impl FromStr for Objective {
    type Err = ParseObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| ParseObjectiveError(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// No valuation works.
    Infeasible,
    /// Every value of some always-bound works (maximizing objectives only).
    Unbounded,
    Optimum { value: u64, witness: Valuation },
}

#[derive(Clone, Debug)]
pub struct OptimizeReport {
    pub outcome: Outcome,
    /// The formula has no variables of the optimized kind; the value 0 is
    /// then a convention.
    pub empty_vars: bool,
    /// Values were searched in `[0, bound]`.
    pub bound: u64,
    /// Number of fixed-valuation model-checking calls.
    pub probes: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OptimizeOptions {
    /// Search the whole box instead of reducing to single variables.
    /// Required for systems with several cost coordinates.
    pub exhaustive: bool,
    /// Threads for independent per-variable searches; 0 or 1 runs them in turn.
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OptimizeError {
    #[error("objective {objective} needs a formula without parameterized {forbidden}, found variable {var}")]
    Fragment { objective: Objective, forbidden: &'static str, var: Var },
    #[error("the system has {0} cost coordinates; single-variable reductions do not apply, use exhaustive search")]
    NeedsExhaustive(usize),
    #[error("witness {0} does not pass the fixed-valuation check")]
    Witness(Valuation),
    #[error(transparent)]
    ModelCheck(#[from] ModelCheckError),
}

/// Which end of a monotone predicate to look for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// The predicate is false then true; find the least true value.
    Least,
    /// The predicate is true then false; find the greatest true value.
    Greatest,
}

/// Threshold of a monotone predicate on `[lo, hi]`, or `None` if no value
/// satisfies it. Uses at most `⌈log₂(hi−lo+2)⌉` calls.
pub fn binary_search_threshold(mut pred: impl FnMut(u64) -> bool, lo: u64, hi: u64, dir: Direction) -> Option<u64> {
    try_binary_search_threshold(|n| Ok::<_, std::convert::Infallible>(pred(n)), lo, hi, dir).unwrap()
}

pub fn try_binary_search_threshold<E>(
    mut pred: impl FnMut(u64) -> Result<bool, E>,
    lo: u64,
    hi: u64,
    dir: Direction,
) -> Result<Option<u64>, E> {
    if lo > hi {
        return Ok(None);
    }
    match dir {
        Direction::Least => {
            // Invariant: the answer lies in [a, b], where b = hi + 1 means none.
            let (mut a, mut b) = (lo, hi + 1);
            while a < b {
                let mid = a + (b - a) / 2;
                if pred(mid)? {
                    b = mid;
                } else {
                    a = mid + 1;
                }
            }
            Ok((a <= hi).then_some(a))
        }
        Direction::Greatest => {
            // Answer in [a, b] shifted by one: a = lo means none.
            let (mut a, mut b) = (lo, hi + 1);
            while a < b {
                let mid = a + (b - a) / 2;
                if pred(mid)? {
                    a = mid + 1;
                } else {
                    b = mid;
                }
            }
            Ok((a > lo).then(|| a - 1))
        }
    }
}

/// Like [`try_binary_search_threshold`], but probes `lo, lo+1, lo+3, lo+7, …`
/// first and bisects only the bracket found. Cheap when the threshold is
/// near `lo`, which is where fixed-valuation checks are fastest.
pub fn gallop_threshold<E>(
    mut pred: impl FnMut(u64) -> Result<bool, E>,
    lo: u64,
    hi: u64,
    dir: Direction,
) -> Result<Option<u64>, E> {
    if lo > hi {
        return Ok(None);
    }
    let flips = |v: bool| match dir {
        Direction::Least => v,
        Direction::Greatest => !v,
    };
    let mut before = None;
    let mut step = 1u64;
    let mut at = lo;
    loop {
        if flips(pred(at)?) {
            let from = before.map_or(lo, |b: u64| b + 1);
            return match dir {
                Direction::Least if from == at => Ok(Some(at)),
                Direction::Least => try_binary_search_threshold(&mut pred, from, at - 1, dir).map(|r| r.or(Some(at))),
                Direction::Greatest if at == lo => Ok(None),
                Direction::Greatest => {
                    try_binary_search_threshold(&mut pred, from, at - 1, dir).map(|r| r.or(Some(before.unwrap())))
                }
            };
        }
        before = Some(at);
        if at == hi {
            return Ok(match dir {
                Direction::Least => None,
                Direction::Greatest => Some(hi),
            });
        }
        at = at.saturating_add(step).min(hi);
        step = step.saturating_mul(2);
    }
}

/// Memoized fixed-valuation checks that reuse counterexamples: a trace that
/// refutes one valuation is tried on later ones before model checking.
struct Prober<'a> {
    sys: &'a TransitionSystem,
    f: &'a Formula,
    memo: HashMap<Valuation, bool>,
    refuting: Vec<CostTrace>,
    probes: &'a AtomicUsize,
}

impl<'a> Prober<'a> {
    fn new(sys: &'a TransitionSystem, f: &'a Formula, probes: &'a AtomicUsize) -> Self {
        Prober { sys, f, memo: HashMap::new(), refuting: Vec::new(), probes }
    }

    fn holds(&mut self, v: &Valuation) -> Result<bool, ModelCheckError> {
        if let Some(&r) = self.memo.get(v) {
            return Ok(r);
        }
        // Most recent refuter first: neighbouring probes tend to fail the same way.
        for i in (0..self.refuting.len()).rev() {
            if !evaluate(&self.refuting[i], 0, v, self.f).map_err(|_| ModelCheckError::Unconfirmed)? {
                let w = self.refuting.remove(i);
                self.refuting.push(w);
                self.memo.insert(v.clone(), false);
                return Ok(false);
            }
        }
        self.probes.fetch_add(1, Ordering::Relaxed);
        let r = check_fixed(self.sys, self.f, v)?;
        if let Some(cex) = r.counterexample {
            self.refuting.push(cex.trace);
        }
        self.memo.insert(v.clone(), r.holds);
        Ok(r.holds)
    }
}

fn check_fragment(f: &Formula, obj: Objective) -> Result<Vec<Var>, OptimizeError> {
    let profile = f.var_profile();
    let (wanted, other, forbidden) = if obj.minimizes() {
        (profile.f_vars, profile.g_vars, "always operators")
    } else {
        (profile.g_vars, profile.f_vars, "eventually operators")
    };
    if let Some(var) = other.into_iter().next() {
        return Err(OptimizeError::Fragment { objective: obj, forbidden, var });
    }
    Ok(wanted.into_iter().collect())
}

fn assign(vars: &[Var], base: u64, one: Option<(usize, u64)>) -> Valuation {
    let mut v = Valuation::uniform(vars, base);
    if let Some((i, k)) = one {
        v.set(vars[i].clone(), k);
    }
    v
}

/// Runs `search(i)` for every variable index, on up to `jobs` threads.
fn per_variable<T: Send>(
    n: usize,
    jobs: usize,
    search: impl Fn(usize) -> Result<T, OptimizeError> + Sync,
) -> Result<Vec<T>, OptimizeError> {
    if jobs <= 1 || n <= 1 {
        return (0..n).map(&search).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Vec<Vec<(usize, Result<T, OptimizeError>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs.min(n))
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            break out;
                        }
                        out.push((i, search(i)));
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
    });
    let mut flat: Vec<(usize, Result<T, OptimizeError>)> = results.into_iter().flatten().collect();
    flat.sort_by_key(|(i, _)| *i);
    flat.into_iter().map(|(_, r)| r).collect()
}

/// The optimum of `obj` over all valuations under which `S` satisfies `φ`.
pub fn optimize_mc(
    sys: &TransitionSystem,
    f: &Formula,
    obj: Objective,
    opts: OptimizeOptions,
) -> Result<OptimizeReport, OptimizeError> {
    let vars = check_fragment(f, obj)?;
    let probes = AtomicUsize::new(0);
    if vars.is_empty() {
        let mut p = Prober::new(sys, f, &probes);
        let outcome = if p.holds(&Valuation::new())? {
            Outcome::Optimum { value: 0, witness: Valuation::new() }
        } else {
            Outcome::Infeasible
        };
        return Ok(OptimizeReport { outcome, empty_vars: true, bound: 0, probes: probes.into_inner() });
    }
    if sys.dim() > 1 && !opts.exhaustive {
        return Err(OptimizeError::NeedsExhaustive(sys.dim()));
    }
    let (outcome, bound) = if obj.minimizes() { minimize(sys, f, obj, &vars, opts, &probes)? } else { maximize(sys, f, obj, &vars, opts, &probes)? };
    if let Outcome::Optimum { witness, .. } = &outcome {
        if !check_fixed(sys, f, witness)?.holds {
            return Err(OptimizeError::Witness(witness.clone()));
        }
    }
    Ok(OptimizeReport { outcome, empty_vars: false, bound, probes: probes.into_inner() })
}

fn minimize(
    sys: &TransitionSystem,
    f: &Formula,
    obj: Objective,
    vars: &[Var],
    opts: OptimizeOptions,
    probes: &AtomicUsize,
) -> Result<(Outcome, u64), OptimizeError> {
    let exists = if sys.dim() > 1 {
        // The pumping characterization may be inconclusive here; the box
        // search below is exact on its own.
        match check_exists(sys, f) {
            Ok(r) => Some(r),
            Err(ModelCheckError::Inconclusive(_)) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        Some(check_exists(sys, f)?)
    };
    let n = match &exists {
        Some(r) => r.bound,
        None => crate::modelcheck::valuation_upper_bound(sys, f)?,
    };
    if exists.as_ref().is_some_and(|r| !r.holds) {
        return Ok((Outcome::Infeasible, n));
    }
    if opts.exhaustive {
        return Ok((box_search(sys, f, obj, vars, n, probes)?, n));
    }
    let outcome = match obj {
        Objective::MinMin => {
            let found = per_variable(vars.len(), opts.jobs, |i| {
                let mut p = Prober::new(sys, f, probes);
                let k = gallop_threshold(|k| p.holds(&assign(vars, n, Some((i, k)))), 0, n, Direction::Least)?;
                Ok(k.map(|k| (k, assign(vars, n, Some((i, k))))))
            })?;
            best(found.into_iter().flatten(), |a, b| a < b)
        }
        _ => {
            let mut p = Prober::new(sys, f, probes);
            let k = gallop_threshold(|k| p.holds(&Valuation::uniform(vars, k)), 0, n, Direction::Least)?;
            k.map(|k| (k, Valuation::uniform(vars, k)))
        }
    };
    Ok((to_outcome(outcome), n))
}

fn maximize(
    sys: &TransitionSystem,
    f: &Formula,
    obj: Objective,
    vars: &[Var],
    opts: OptimizeOptions,
    probes: &AtomicUsize,
) -> Result<(Outcome, u64), OptimizeError> {
    let mut zero = Prober::new(sys, f, probes);
    if !zero.holds(&Valuation::uniform(vars, 0))? {
        return Ok((Outcome::Infeasible, 0));
    }
    match obj {
        Objective::MaxMin => {
            let n = forall_upper_bound(sys, f)?;
            if check_forall(sys, f)?.holds {
                return Ok((Outcome::Unbounded, n));
            }
            if opts.exhaustive {
                return Ok((box_search(sys, f, obj, vars, n, probes)?, n));
            }
            let k = gallop_threshold(|k| zero.holds(&Valuation::uniform(vars, k)), 0, n, Direction::Greatest)?;
            Ok((to_outcome(k.map(|k| (k, Valuation::uniform(vars, k)))), n))
        }
        _ => {
            // One variable at a time, the others fixed at 0.
            let single: Vec<Formula> =
                vars.iter().map(|y| eliminate_always_vars(f, &|v: &Var| v != y)).collect();
            let mut n = 0;
            for g in &single {
                if check_forall(sys, g)?.holds {
                    return Ok((Outcome::Unbounded, forall_upper_bound(sys, g)?));
                }
                n = n.max(forall_upper_bound(sys, g)?);
            }
            if opts.exhaustive {
                return Ok((box_search(sys, f, obj, vars, n, probes)?, n));
            }
            let found = per_variable(vars.len(), opts.jobs, |i| {
                let mut p = Prober::new(sys, f, probes);
                let k = gallop_threshold(|k| p.holds(&assign(vars, 0, Some((i, k)))), 0, n, Direction::Greatest)?;
                Ok(k.map(|k| (k, assign(vars, 0, Some((i, k))))))
            })?;
            Ok((to_outcome(best(found.into_iter().flatten(), |a, b| a > b)), n))
        }
    }
}

fn best(found: impl Iterator<Item = (u64, Valuation)>, better: impl Fn(u64, u64) -> bool) -> Option<(u64, Valuation)> {
    found.fold(None, |acc, (k, v)| match acc {
        Some((a, _)) if !better(k, a) => acc,
        _ => Some((k, v)),
    })
}

fn to_outcome(found: Option<(u64, Valuation)>) -> Outcome {
    match found {
        Some((value, witness)) => Outcome::Optimum { value, witness },
        None => Outcome::Infeasible,
    }
}

/// Every valuation in `[0, n]^vars`, visited in order of objective value
/// (best first) and stopping at the first that works. Exponential in the
/// number of variables; no monotonicity is assumed.
fn box_search(
    sys: &TransitionSystem,
    f: &Formula,
    obj: Objective,
    vars: &[Var],
    n: u64,
    probes: &AtomicUsize,
) -> Result<Outcome, OptimizeError> {
    let mut p = Prober::new(sys, f, probes);
    let mut points: Vec<(u64, Vec<u64>)> = BoxIter::new(vars.len(), n).map(|v| (obj.inner(&v), v)).collect();
    // Stable, so points within a level stay in lexicographic order.
    if obj.minimizes() {
        points.sort_by_key(|e| e.0);
    } else {
        points.sort_by_key(|e| std::cmp::Reverse(e.0));
    }
    for (level, values) in points {
        let mut v = Valuation::new();
        for (x, &k) in vars.iter().zip(&values) {
            v.set(x.clone(), k);
        }
        if p.holds(&v)? {
            return Ok(Outcome::Optimum { value: level, witness: v });
        }
    }
    Ok(Outcome::Infeasible)
}

/// Optimum of `obj` over the box `[0, n]^vars` by plain enumeration of
/// fixed-valuation checks. Exponential; meant as a reference.
pub fn exhaustive_optimum(
    sys: &TransitionSystem,
    f: &Formula,
    obj: Objective,
    n: u64,
) -> Result<Outcome, OptimizeError> {
    let vars = check_fragment(f, obj)?;
    let probes = AtomicUsize::new(0);
    if vars.is_empty() {
        let mut p = Prober::new(sys, f, &probes);
        return Ok(if p.holds(&Valuation::new())? {
            Outcome::Optimum { value: 0, witness: Valuation::new() }
        } else {
            Outcome::Infeasible
        });
    }
    box_search(sys, f, obj, &vars, n, &probes)
}

/// All vectors in `[0, n]^len` in lexicographic order.
struct BoxIter {
    cur: Option<Vec<u64>>,
    n: u64,
}

impl BoxIter {
    fn new(len: usize, n: u64) -> Self {
        BoxIter { cur: Some(vec![0; len]), n }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.cur.clone()?;
        let cur = self.cur.as_mut().unwrap();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
        }
        Some(out)
    }
}
