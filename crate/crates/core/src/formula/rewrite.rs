//! Source-to-source rewrites feeding the model-checking pipeline.

use super::{Formula, Prop, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("relativization requires a formula without parameterized always operators")]
    ContainsParametricAlways,
    #[error("formula already mentions coloring proposition {0}")]
    ColorInUse(Prop),
}

fn map_children(f: &Formula, g: &mut impl FnMut(&Formula) -> Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => f.clone(),
        Formula::And(l, r) => Formula::and(g(l), g(r)),
        Formula::Or(l, r) => Formula::or(g(l), g(r)),
        Formula::Next(a) => Formula::next(g(a)),
        Formula::Until(l, r) => Formula::until(g(l), g(r)),
        Formula::Release(l, r) => Formula::release(g(l), g(r)),
        Formula::FLe { var, coord, body } => {
            Formula::FLe { var: var.clone(), coord: *coord, body: Box::new(g(body)) }
        }
        Formula::GLe { var, coord, body } => {
            Formula::GLe { var: var.clone(), coord: *coord, body: Box::new(g(body)) }
        }
    }
}

/// Replaces every `G[<=y@i] f` by `f & X(kappa_i R (kappa_i | f))`: `f` holds
/// now and at every later position reached at zero cost. This agrees with
/// the original whenever `y` is mapped to 0.
pub fn eliminate_parametric_always(f: &Formula) -> Formula {
    eliminate_always_vars(f, &|_| true)
}

/// [`eliminate_parametric_always`] restricted to the variables selected by
/// `which`; other bounded always operators are kept.
pub fn eliminate_always_vars(f: &Formula, which: &dyn Fn(&Var) -> bool) -> Formula {
    match f {
        Formula::GLe { var, coord, body } if which(var) => {
            let body = eliminate_always_vars(body, which);
            let paid = Formula::Atom(Prop::Kappa(*coord));
            Formula::and(
                body.clone(),
                Formula::next(Formula::release(paid.clone(), Formula::or(paid, body))),
            )
        }
        _ => map_children(f, &mut |g| eliminate_always_vars(g, which)),
    }
}

/// Replaces every `F[<=x@i] f` by the requirement that `f` holds within at
/// most one changepoint of the coloring proposition `p@i`.
pub fn relativize(f: &Formula) -> Result<Formula, RewriteError> {
    if f.has_g_le() {
        return Err(RewriteError::ContainsParametricAlways);
    }
    if let Some(p) = f.props().into_iter().find(|p| matches!(p, Prop::Color(_))) {
        return Err(RewriteError::ColorInUse(p));
    }
    Ok(rel(f))
}

fn rel(f: &Formula) -> Formula {
    match f {
        Formula::FLe { coord, body, .. } => {
            let inner = rel(body);
            let on = Formula::Atom(Prop::Color(*coord));
            let off = Formula::NegAtom(Prop::Color(*coord));
            let from_on = Formula::or(
                off.clone(),
                Formula::until(on.clone(), Formula::until(off.clone(), inner.clone())),
            );
            let from_off = Formula::or(
                on.clone(),
                Formula::until(off, Formula::until(on, inner)),
            );
            Formula::and(from_on, from_off)
        }
        _ => map_children(f, &mut rel),
    }
}

fn infinitely_often(f: Formula) -> Formula {
    Formula::always(Formula::eventually(f))
}

/// Conjunction over coordinates of
/// `(GF p@i & GF !p@i) <-> GF kappa_i`: infinitely many changepoints exactly
/// when the cost in coordinate `i` diverges.
pub fn chi_formula(dim: usize) -> Formula {
    assert!(dim >= 1, "dimension must be positive");
    let parts = (1..=dim as u32).map(|i| {
        let flips = Formula::and(
            infinitely_often(Formula::Atom(Prop::Color(i))),
            infinitely_often(Formula::NegAtom(Prop::Color(i))),
        );
        let costly = infinitely_often(Formula::kappa(i));
        Formula::and(
            Formula::implies(flips.clone(), costly.clone()),
            Formula::implies(costly, flips),
        )
    });
    Formula::conjunction(parts).expect("dim >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, Valuation};
    use crate::generate::{random_formula, random_trace, FormulaShape};
    use crate::trace::evaluate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parametric_always_rewrite_shape() {
        let f = Formula::g_le("y", 1, Formula::atom("p"));
        let expected = parse("p & X(kappa1 R (kappa1 | p))").unwrap();
        assert_eq!(eliminate_parametric_always(&f), expected);

        let g = Formula::g_le("y", 2, Formula::atom("p"));
        assert!(eliminate_parametric_always(&g).props().contains(&Prop::Kappa(2)));

        let free = parse("G(q -> F[<=x] p)").unwrap();
        assert_eq!(eliminate_parametric_always(&free), free);

        let two = parse("G[<=y] p & G[<=z] q").unwrap();
        let only_y = eliminate_always_vars(&two, &|v| v.name() == "y");
        assert_eq!(only_y, parse("(p & X(kappa1 R (kappa1 | p))) & G[<=z] q").unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn elimination_agrees_with_zero_always_bounds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.gen_range(1..=2);
            let shape = FormulaShape::new(&["p", "q"], dim as u32).with_f_vars(&["x"]).with_g_vars(&["y", "z"]);
            let size = rng.gen_range(1..=7);
            let f = random_formula(&mut rng, &shape, size);
            let w = random_trace(&mut rng, &["p", "q"], dim, 3, 3, 2);
            let x = rng.gen_range(0..=4);
            let at_zero = Valuation::new().with("x", x).with("y", 0).with("z", 0);
            let e = eliminate_parametric_always(&f);
            prop_assert!(!e.has_g_le());
            for n in 0..4 {
                prop_assert_eq!(evaluate(&w, n, &at_zero, &e).unwrap(), evaluate(&w, n, &at_zero, &f).unwrap(), "{} on\n{}", f, w);
            }
        }
    }

    #[test]
    fn relativized_eventually() {
        let f = Formula::f_le("x", 1, Formula::atom("q"));
        let r = relativize(&f).unwrap();
        assert_eq!(
            r,
            parse("(p@1 -> p@1 U (!p@1 U q)) & (!p@1 -> !p@1 U (p@1 U q))").unwrap()
        );
        assert!(r.is_variable_free());
        let free = parse("G(p | X q)").unwrap();
        assert_eq!(relativize(&free).unwrap(), free);
    }

    #[test]
    fn nested_relativization() {
        let inner = Formula::f_le("x", 1, Formula::atom("q"));
        let outer = Formula::f_le("x", 1, inner.clone());
        let expected_inner = relativize(&inner).unwrap();
        let r = relativize(&outer).unwrap();
        let on = Formula::Atom(Prop::Color(1));
        let off = Formula::NegAtom(Prop::Color(1));
        let expected = Formula::and(
            Formula::or(
                off.clone(),
                Formula::until(on.clone(), Formula::until(off.clone(), expected_inner.clone())),
            ),
            Formula::or(on.clone(), Formula::until(off, Formula::until(on, expected_inner))),
        );
        assert_eq!(r, expected);
        assert!(!r.has_bounded());
    }

    #[test]
    fn relativize_rejects_always_and_colors() {
        let f = Formula::g_le("y", 1, Formula::atom("q"));
        assert_eq!(relativize(&f), Err(RewriteError::ContainsParametricAlways));
        assert!(matches!(relativize(&parse("p@1").unwrap()), Err(RewriteError::ColorInUse(_))));
    }

    #[test]
    fn chi_shapes() {
        let one = chi_formula(1);
        let expected =
            parse("((G F p@1 & G F !p@1) -> G F kappa1) & (G F kappa1 -> (G F p@1 & G F !p@1))")
                .unwrap();
        assert_eq!(one, expected);
        let two = chi_formula(2);
        match &two {
            Formula::And(l, r) => {
                assert_eq!(**l, one);
                assert!(r.props().contains(&Prop::Color(2)));
                assert!(r.props().contains(&Prop::Kappa(2)));
            }
            _ => panic!("expected a conjunction"),
        }
    }
}
