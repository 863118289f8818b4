use std::fmt::{self, Write};

use super::Formula;

const OR: u8 = 1;
const AND: u8 = 2;
const TEMPORAL: u8 = 3;
const UNARY: u8 = 4;

fn level(f: &Formula) -> u8 {
    match f {
        _ if f.is_tt() || f.is_ff() => UNARY,
        Formula::Or(..) => OR,
        Formula::And(..) => AND,
        Formula::Until(l, _) if l.is_tt() => UNARY,
        Formula::Release(l, _) if l.is_ff() => UNARY,
        Formula::Until(..) | Formula::Release(..) => TEMPORAL,
        _ => UNARY,
    }
}

pub(super) fn write_formula(out: &mut fmt::Formatter<'_>, f: &Formula) -> fmt::Result {
    write_at(out, f, 0)
}

fn write_at(out: &mut impl Write, f: &Formula, min: u8) -> fmt::Result {
    if level(f) < min {
        out.write_char('(')?;
        write_node(out, f)?;
        return out.write_char(')');
    }
    write_node(out, f)
}

fn bound(out: &mut impl Write, var: &super::Var, coord: u32) -> fmt::Result {
    if coord == 1 {
        write!(out, "[<={var}]")
    } else {
        write!(out, "[<={var}@{coord}]")
    }
}

fn write_node(out: &mut impl Write, f: &Formula) -> fmt::Result {
    if f.is_tt() {
        return out.write_str("tt");
    }
    if f.is_ff() {
        return out.write_str("ff");
    }
    match f {
        Formula::Atom(p) => write!(out, "{p}"),
        Formula::NegAtom(p) => write!(out, "!{p}"),
        Formula::Or(l, r) => {
            write_at(out, l, OR)?;
            out.write_str(" | ")?;
            write_at(out, r, AND)
        }
        Formula::And(l, r) => {
            write_at(out, l, AND)?;
            out.write_str(" & ")?;
            write_at(out, r, TEMPORAL)
        }
        Formula::Next(g) => {
            out.write_str("X ")?;
            write_at(out, g, UNARY)
        }
        Formula::Until(l, r) if l.is_tt() => {
            out.write_str("F ")?;
            write_at(out, r, UNARY)
        }
        Formula::Release(l, r) if l.is_ff() => {
            out.write_str("G ")?;
            write_at(out, r, UNARY)
        }
        Formula::Until(l, r) | Formula::Release(l, r) => {
            let op = if matches!(f, Formula::Until(..)) { " U " } else { " R " };
            write_at(out, l, UNARY)?;
            out.write_str(op)?;
            write_at(out, r, TEMPORAL)
        }
        Formula::FLe { var, coord, body } => {
            out.write_char('F')?;
            bound(out, var, *coord)?;
            out.write_char(' ')?;
            write_at(out, body, UNARY)
        }
        Formula::GLe { var, coord, body } => {
            out.write_char('G')?;
            bound(out, var, *coord)?;
            out.write_char(' ')?;
            write_at(out, body, UNARY)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Formula, Prop};
    use proptest::prelude::*;

    #[test]
    fn simple_forms() {
        assert_eq!(Formula::atom("p").to_string(), "p");
        assert_eq!(Formula::f_le("x", 1, Formula::atom("p")).to_string(), "F[<=x] p");
        assert_eq!(Formula::g_le("y", 2, Formula::atom("p")).to_string(), "G[<=y@2] p");
        assert_eq!(parse("G(q -> F[<=x] p)").unwrap().to_string(), "G (!q | F[<=x] p)");
        assert_eq!(Formula::tt().to_string(), "tt");
        assert_eq!(Formula::tt().negate().to_string(), "ff");
        assert_eq!(parse("F p").unwrap().negate().to_string(), "G !p");
    }

    fn arb_prop() -> impl Strategy<Value = Prop> {
        prop_oneof![
            Just(Prop::named("p")),
            Just(Prop::named("q")),
            Just(Prop::Kappa(1)),
            Just(Prop::Kappa(2)),
            Just(Prop::Color(1)),
            Just(Prop::Reserved),
        ]
    }

    pub(crate) fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            arb_prop().prop_map(Formula::Atom),
            arb_prop().prop_map(Formula::NegAtom),
            Just(Formula::tt()),
            Just(Formula::ff()),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                inner.clone().prop_map(Formula::next),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::release(a, b)),
                (inner.clone(), 1u32..3).prop_map(|(a, c)| Formula::f_le("x", c, a)),
                (inner, 1u32..3).prop_map(|(a, c)| Formula::g_le("y", c, a)),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_inverts_print(f in arb_formula()) {
            let text = f.to_string();
            let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(&back, &f, "{}", text);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn negation_is_an_involution_preserving_size(f in arb_formula()) {
            let n = f.negate();
            prop_assert_eq!(n.negate(), f.clone());
            prop_assert_eq!(n.size(), f.size());
        }
    }
}
