use cpltl::formula::Formula;
use cpltl::generate::{random_formula, random_system, FormulaShape};
use cpltl::modelcheck::check_fixed;
use cpltl::optimize::{exhaustive_optimum, optimize_mc, Objective, OptimizeOptions, Outcome};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, eventually: bool) -> (cpltl::system::TransitionSystem, Formula) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let sys = random_system(&mut rng, n, &["p", "q"], 1, 3, 0.5);
    let shape = FormulaShape::new(&["p", "q"], 1);
    let shape = if eventually { shape.with_f_vars(&["x", "u"]) } else { shape.with_g_vars(&["y", "z"]) };
    let size = rng.gen_range(2..=6);
    (sys, random_formula(&mut rng, &shape, size))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn reductions_match_box_search(seed in any::<u64>(), eventually in any::<bool>()) {
        let (sys, f) = instance(seed, eventually);
        let objectives = if eventually { [Objective::MinMin, Objective::MinMax] } else { [Objective::MaxMax, Objective::MaxMin] };
        for obj in objectives {
            let r = optimize_mc(&sys, &f, obj, OptimizeOptions::default()).unwrap();
            let boxed = exhaustive_optimum(&sys, &f, obj, r.bound).unwrap();
            match &r.outcome {
                Outcome::Unbounded => {
                    prop_assert!(matches!(boxed, Outcome::Optimum { value, .. } if value == r.bound), "{} {} on\n{}", obj, f, sys);
                }
                Outcome::Optimum { value, witness } => {
                    prop_assert!(check_fixed(&sys, &f, witness).unwrap().holds);
                    prop_assert!(matches!(&boxed, Outcome::Optimum { value: v, .. } if v == value), "{} {} on\n{}: {:?} vs {:?}", obj, f, sys, r.outcome, boxed);
                }
                Outcome::Infeasible => prop_assert_eq!(&boxed, &Outcome::Infeasible),
            }
        }
    }

    #[test]
    fn parallel_probes_agree(seed in any::<u64>(), eventually in any::<bool>()) {
        let (sys, f) = instance(seed, eventually);
        let obj = if eventually { Objective::MinMin } else { Objective::MaxMax };
        let one = optimize_mc(&sys, &f, obj, OptimizeOptions::default()).unwrap();
        let many = optimize_mc(&sys, &f, obj, OptimizeOptions { exhaustive: false, jobs: 3 }).unwrap();
        prop_assert_eq!(one.outcome, many.outcome);
    }
}
