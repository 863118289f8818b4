//! Random formulas, traces and systems for testing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Formula, Prop};
use crate::system::TransitionSystem;
use crate::trace::{CostLetter, CostTrace};

/// Which operators a random formula may use.
#[derive(Clone, Debug)]
pub struct FormulaShape {
    pub props: Vec<String>,
    pub f_vars: Vec<String>,
    pub g_vars: Vec<String>,
    pub dim: u32,
    /// Allow `kappa_i` atoms.
    pub kappa: bool,
    /// Allow unparameterized `X`, `U`, `R`.
    pub temporal: bool,
}

impl FormulaShape {
    pub fn new(props: &[&str], dim: u32) -> Self {
        FormulaShape {
            props: props.iter().map(|s| s.to_string()).collect(),
            f_vars: vec![],
            g_vars: vec![],
            dim,
            kappa: true,
            temporal: true,
        }
    }

    pub fn with_f_vars(mut self, vars: &[&str]) -> Self {
        self.f_vars = vars.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_g_vars(mut self, vars: &[&str]) -> Self {
        self.g_vars = vars.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// A random formula with about `size` operator nodes. Well-formed as long
/// as `f_vars` and `g_vars` are disjoint.
pub fn random_formula(rng: &mut impl Rng, shape: &FormulaShape, size: usize) -> Formula {
    if size <= 1 {
        return random_literal(rng, shape);
    }
    let mut ops: Vec<u8> = vec![0, 1];
    if shape.temporal {
        ops.extend([2, 3, 4]);
    }
    if !shape.f_vars.is_empty() {
        ops.extend([5, 5]);
    }
    if !shape.g_vars.is_empty() {
        ops.extend([6, 6]);
    }
    let op = *ops.choose(rng).unwrap();
    match op {
        0 => {
            let (l, r) = split(rng, shape, size);
            Formula::and(l, r)
        }
        1 => {
            let (l, r) = split(rng, shape, size);
            Formula::or(l, r)
        }
        2 => Formula::next(random_formula(rng, shape, size - 1)),
        3 => {
            let (l, r) = split(rng, shape, size);
            Formula::until(l, r)
        }
        4 => {
            let (l, r) = split(rng, shape, size);
            Formula::release(l, r)
        }
        5 => {
            let v = shape.f_vars.choose(rng).unwrap().clone();
            let c = rng.gen_range(1..=shape.dim);
            Formula::f_le(v, c, random_formula(rng, shape, size - 1))
        }
        _ => {
            let v = shape.g_vars.choose(rng).unwrap().clone();
            let c = rng.gen_range(1..=shape.dim);
            Formula::g_le(v, c, random_formula(rng, shape, size - 1))
        }
    }
}

fn split(rng: &mut impl Rng, shape: &FormulaShape, size: usize) -> (Formula, Formula) {
    let left: usize = rng.gen_range(1..size.max(2));
    let right = (size - 1).saturating_sub(left).max(1);
    (random_formula(rng, shape, left), random_formula(rng, shape, right))
}

fn random_literal(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    let kappa = shape.kappa && rng.gen_ratio(1, 5);
    let p = if kappa || shape.props.is_empty() {
        Prop::Kappa(rng.gen_range(1..=shape.dim))
    } else {
        Prop::named(shape.props.choose(rng).unwrap().clone())
    };
    match rng.gen_range(0..8) {
        0 => Formula::tt(),
        1..=4 => Formula::Atom(p),
        _ => Formula::NegAtom(p),
    }
}

/// A random κ-consistent lasso trace.
pub fn random_trace(
    rng: &mut impl Rng,
    props: &[&str],
    dim: usize,
    max_prefix: usize,
    max_loop: usize,
    max_cost: u64,
) -> CostTrace {
    let prefix_len = rng.gen_range(0..=max_prefix);
    let loop_len = rng.gen_range(1..=max_loop.max(1));
    let mut prefix: Vec<CostLetter> = (0..prefix_len).map(|_| random_letter(rng, props, dim, max_cost)).collect();
    let cycle: Vec<CostLetter> = (0..loop_len).map(|_| random_letter(rng, props, dim, max_cost)).collect();
    // Both steps into the loop start must agree on which costs are positive.
    if let Some(last) = prefix.last_mut() {
        let back = &cycle[cycle.len() - 1].cost;
        for (c, b) in last.cost.iter_mut().zip(back) {
            *c = if *b > 0 { (*c).max(1) } else { 0 };
        }
    }
    CostTrace::with_derived_kappa(prefix, cycle, dim).expect("generated trace is consistent")
}

/// A random κ-consistent trace in which every step costs 1 in every coordinate.
pub fn random_unit_trace(rng: &mut impl Rng, props: &[&str], dim: usize, max_prefix: usize, max_loop: usize) -> CostTrace {
    let prefix_len = rng.gen_range(0..=max_prefix);
    let loop_len = rng.gen_range(1..=max_loop.max(1));
    let mut letters: Vec<CostLetter> = (0..prefix_len + loop_len).map(|_| random_letter(rng, props, dim, 0)).collect();
    for l in &mut letters {
        l.cost = vec![1; dim];
    }
    let cycle = letters.split_off(prefix_len);
    let prefix = letters;
    CostTrace::with_derived_kappa(prefix, cycle, dim).expect("generated trace is consistent")
}

fn random_letter(rng: &mut impl Rng, props: &[&str], dim: usize, max_cost: u64) -> CostLetter {
    let set: Vec<Prop> = props.iter().filter(|_| rng.gen_bool(0.5)).map(|p| Prop::named(*p)).collect();
    let cost = (0..dim)
        .map(|_| if max_cost == 0 || rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..=max_cost) })
        .collect();
    CostLetter::new(set, cost)
}

/// A random valid transition system: each state gets a random label and
/// `kappa` flags, and every edge cost is positive exactly where the target
/// carries the matching `kappa`.
pub fn random_system(
    rng: &mut impl Rng,
    states: usize,
    props: &[&str],
    dim: usize,
    max_cost: u64,
    edge_prob: f64,
) -> TransitionSystem {
    let mut sys = TransitionSystem::new(dim);
    let mut kappa = Vec::new();
    for s in 0..states {
        let mut label: Vec<Prop> = props.iter().filter(|_| rng.gen_bool(0.5)).map(|p| Prop::named(*p)).collect();
        let flags: Vec<bool> = (0..dim).map(|_| max_cost > 0 && rng.gen_bool(0.5)).collect();
        for (i, &f) in flags.iter().enumerate() {
            if f {
                label.push(Prop::Kappa(i as u32 + 1));
            }
        }
        sys.add_state(format!("s{s}"), label);
        kappa.push(flags);
    }
    sys.set_initial(0);
    for s in 0..states {
        let mut targets: Vec<usize> = (0..states).filter(|_| rng.gen_bool(edge_prob)).collect();
        if targets.is_empty() {
            targets.push(rng.gen_range(0..states));
        }
        for t in targets {
            let cost = kappa[t].iter().map(|&k| if k { rng.gen_range(1..=max_cost) } else { 0 }).collect();
            sys.add_edge(s, t, cost);
        }
    }
    sys
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_objects_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = FormulaShape::new(&["p", "q"], 2).with_f_vars(&["x"]).with_g_vars(&["y"]);
        for _ in 0..200 {
            let f = random_formula(&mut rng, &shape, 6);
            assert!(f.var_profile().is_well_formed());
            assert!(f.validate_coords(2).is_ok());
            let _ = random_trace(&mut rng, &["p", "q"], 2, 3, 3, 3);
            let _ = random_unit_trace(&mut rng, &["p"], 1, 3, 3);
            let s = random_system(&mut rng, 3, &["p", "q"], 2, 3, 0.4);
            assert!(s.validate().is_empty());
        }
    }
}
