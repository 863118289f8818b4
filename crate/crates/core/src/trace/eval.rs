//! Reference semantics on lasso traces.
//!
//! Truth of a formula at a position only depends on the slot the position
//! maps to, so every subformula is evaluated once per slot, bottom-up.
//! Until/release are the least/greatest fixpoints over the slot successor
//! function. For the bounded operators the run from a slot is a single
//! infinite path with non-decreasing accumulated cost, so `F[<=b] f` holds
//! exactly when the first `f`-position is reached with cost at most `b`
//! (and dually for `G[<=b]`); every reachable slot is met within `len` steps.

use super::CostTrace;
use crate::formula::{CoordError, Formula, Prop, Valuation, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("dimension mismatch: {0}")]
    Dimension(#[from] CoordError),
    #[error("variable '{0}' has no value")]
    Unbound(Var),
}

/// `(w, n, α) ⊨ φ`, with unbound variables read as 0.
pub fn evaluate(
    w: &CostTrace,
    position: usize,
    valuation: &Valuation,
    f: &Formula,
) -> Result<bool, EvalError> {
    f.validate_coords(w.dim())?;
    let sat = Oracle { w, valuation }.sat(f);
    Ok(sat[w.slot(position)])
}

/// As [`evaluate`], but every variable of `f` must be bound.
pub fn evaluate_strict(
    w: &CostTrace,
    position: usize,
    valuation: &Valuation,
    f: &Formula,
) -> Result<bool, EvalError> {
    let vars = f.var_profile().all();
    if let Some(v) = valuation.first_unbound(&vars) {
        return Err(EvalError::Unbound(v.clone()));
    }
    evaluate(w, position, valuation, f)
}

struct Oracle<'a> {
    w: &'a CostTrace,
    valuation: &'a Valuation,
}

impl Oracle<'_> {
    fn sat(&self, f: &Formula) -> Vec<bool> {
        let w = self.w;
        let n = w.len();
        match f {
            Formula::Atom(p) => (0..n).map(|s| holds(w, s, p)).collect(),
            Formula::NegAtom(p) => (0..n).map(|s| !holds(w, s, p)).collect(),
            Formula::And(l, r) => {
                let (l, r) = (self.sat(l), self.sat(r));
                l.iter().zip(&r).map(|(a, b)| *a && *b).collect()
            }
            Formula::Or(l, r) => {
                let (l, r) = (self.sat(l), self.sat(r));
                l.iter().zip(&r).map(|(a, b)| *a || *b).collect()
            }
            Formula::Next(g) => {
                let g = self.sat(g);
                (0..n).map(|s| g[w.next_slot(s)]).collect()
            }
            Formula::Until(l, r) => {
                let (l, r) = (self.sat(l), self.sat(r));
                self.fixpoint(false, |s, next| r[s] || (l[s] && next))
            }
            Formula::Release(l, r) => {
                let (l, r) = (self.sat(l), self.sat(r));
                self.fixpoint(true, |s, next| r[s] && (l[s] || next))
            }
            Formula::FLe { var, coord, body } => {
                let body = self.sat(body);
                let bound = self.valuation.get(var);
                (0..n).map(|s| self.first_reached(s, *coord, |t| body[t]).is_some_and(|c| c <= bound)).collect()
            }
            Formula::GLe { var, coord, body } => {
                let body = self.sat(body);
                let bound = self.valuation.get(var);
                (0..n)
                    .map(|s| !self.first_reached(s, *coord, |t| !body[t]).is_some_and(|c| c <= bound))
                    .collect()
            }
        }
    }

    /// Iterates `step` over all slots from `init` until stable.
    fn fixpoint(&self, init: bool, step: impl Fn(usize, bool) -> bool) -> Vec<bool> {
        let w = self.w;
        let mut val = vec![init; w.len()];
        loop {
            let mut changed = false;
            for s in (0..w.len()).rev() {
                let v = step(s, val[w.next_slot(s)]);
                if v != val[s] {
                    val[s] = v;
                    changed = true;
                }
            }
            if !changed {
                return val;
            }
        }
    }

    /// Accumulated coordinate cost from slot `start` to the first slot
    /// satisfying `target`, if any.
    fn first_reached(&self, start: usize, coord: u32, target: impl Fn(usize) -> bool) -> Option<u64> {
        let w = self.w;
        let mut slot = start;
        let mut spent = 0u64;
        for _ in 0..w.len() {
            if target(slot) {
                return Some(spent);
            }
            spent = spent.saturating_add(w.letter(slot).cost[coord as usize - 1]);
            slot = w.next_slot(slot);
        }
        None
    }
}

fn holds(w: &CostTrace, slot: usize, p: &Prop) -> bool {
    *p != Prop::Reserved && w.letter(slot).props.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::trace::fixtures::{letter, t1};
    use crate::trace::CostTrace;

    fn eval(w: &CostTrace, n: usize, a: &Valuation, f: &str) -> bool {
        evaluate(w, n, a, &parse(f).unwrap()).unwrap()
    }

    #[test]
    fn request_response_on_t1() {
        let t = t1();
        let f = "G(q -> F[<=x] p)";
        assert!(eval(&t, 0, &Valuation::new().with("x", 3), f));
        assert!(!eval(&t, 0, &Valuation::new().with("x", 2), f));
    }

    #[test]
    fn bounded_always_on_t1() {
        let t = t1();
        assert!(eval(&t, 0, &Valuation::new().with("y", 2), "G[<=y] q"));
        assert!(!eval(&t, 0, &Valuation::new().with("y", 3), "G[<=y] q"));
    }

    #[test]
    fn tt_and_ff() {
        let t = t1();
        for n in 0..4 {
            assert!(eval(&t, n, &Valuation::new(), "tt"));
            assert!(!eval(&t, n, &Valuation::new(), "ff"));
        }
    }

    #[test]
    fn unbounded_operators() {
        let t = t1();
        let a = Valuation::new();
        assert!(eval(&t, 0, &a, "G F p"));
        assert!(eval(&t, 0, &a, "q U p"));
        assert!(!eval(&t, 0, &a, "F G p"));
        assert!(eval(&t, 1, &a, "X q"));
        assert!(eval(&t, 0, &a, "G (q -> X kappa)"));
        assert!(eval(&t, 0, &a, "ff R (p | q)"));
        assert!(!eval(&t, 0, &a, "q R p"));
    }

    #[test]
    fn zero_cost_loop_satisfies_every_bound() {
        // {p} 1 {kappa} 0 {} 0 {} 0 ...
        let w = CostTrace::new(
            vec![letter(&["p"], 1), letter(&["kappa1"], 0)],
            vec![letter(&[], 0)],
            1,
        )
        .unwrap();
        let a = Valuation::new().with("y", 1);
        assert!(!eval(&w, 0, &a, "G[<=y] p"));
        assert!(eval(&w, 0, &Valuation::new(), "G[<=y] p | X G !p"));
        assert!(eval(&w, 1, &Valuation::new(), "G[<=y] !p"));
        assert!(!eval(&w, 0, &Valuation::new(), "F[<=x] kappa"));
        assert!(eval(&w, 0, &Valuation::new().with("x", 1), "F[<=x] kappa"));
    }

    #[test]
    fn strict_mode_and_dimension_errors() {
        let t = t1();
        let f = parse("F[<=x] p").unwrap();
        assert_eq!(
            evaluate_strict(&t, 0, &Valuation::new(), &f),
            Err(EvalError::Unbound(Var::new("x")))
        );
        assert!(evaluate_strict(&t, 0, &Valuation::new().with("x", 0), &f).is_ok());
        let g = parse("F[<=x@2] p").unwrap();
        assert!(matches!(evaluate(&t, 0, &Valuation::new(), &g), Err(EvalError::Dimension(_))));
    }
}
