use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cpltl::automata::{cost_nba, ltl_to_nba};
use cpltl::formula::{chi_formula, eliminate_parametric_always, parse, relativize, Formula, Valuation};
use cpltl::generate::{random_formula, random_system, random_trace, FormulaShape};
use cpltl::modelcheck::{build_product_for, check_exists, check_fixed, Counterexample, Stats};
use cpltl::optimize::{optimize_mc, Objective, OptimizeOptions, Outcome};
use cpltl::system::{parse_system, TransitionSystem};
use cpltl::trace::{evaluate, evaluate_strict, parse_trace, write_trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "cpltl", version, about = "Model checking and optimization for parametric LTL with costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct FormulaArg {
    /// Formula text.
    #[arg(required_unless_present = "formula_file")]
    formula: Option<String>,
    /// Read the formula from a file instead.
    #[arg(long, conflicts_with = "formula")]
    formula_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system against a formula, for some valuation or for a given one.
    Check {
        system: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        /// Bindings such as `x=3,y=0`; checks this valuation only.
        #[arg(long)]
        valuation: Option<String>,
        /// Also write a counterexample trace to this file.
        #[arg(long)]
        counterexample_out: Option<PathBuf>,
    },
    /// Find the optimal valuation for one of the four objectives.
    Optimize {
        system: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        #[arg(long)]
        objective: Objective,
        /// Search the whole valuation box; required for several cost coordinates.
        #[arg(long)]
        exhaustive: bool,
        /// Threads for independent per-variable searches.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate a formula on a lasso trace.
    EvalTrace {
        trace: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        #[arg(long, default_value = "")]
        valuation: String,
        #[arg(long, default_value_t = 0)]
        position: usize,
    },
    /// Print intermediate artifacts of the pipeline.
    Translate {
        #[command(flatten)]
        formula: FormulaArg,
        #[arg(long, value_enum)]
        emit: Emit,
        /// System for `--emit product`.
        #[arg(long)]
        system: Option<PathBuf>,
    },
    /// Cross-check the model checker against the trace semantics on random instances.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Nba,
    Product,
    Relativized,
}

/// A failure reported with exit code 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load_formula(arg: &FormulaArg) -> Result<Formula, Fatal> {
    let src = match (&arg.formula, &arg.formula_file) {
        (_, Some(path)) => read(path)?,
        (Some(text), None) => text.clone(),
        (None, None) => return Err(Fatal("no formula given".into())),
    };
    let f = parse(src.trim())?;
    let profile = f.var_profile();
    if let Some(v) = profile.f_vars.intersection(&profile.g_vars).next() {
        return Err(Fatal(format!("formula is not well-formed: {v} bounds both an eventually and an always")));
    }
    Ok(f)
}

fn load_system(path: &Path) -> Result<TransitionSystem, Fatal> {
    parse_system(&read(path)?).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn print_stats(s: &Stats) {
    println!("automaton_states={}", s.automaton_states);
    println!("product_vertices={}", s.product_vertices);
    println!("product_edges={}", s.product_edges);
    println!("search_states={}", s.search_states);
}

fn print_counterexample(sys: &TransitionSystem, cex: &Counterexample, out: Option<&Path>) -> Result<(), Fatal> {
    let names = |v: &[usize]| v.iter().map(|&s| sys.name(s)).collect::<Vec<_>>().join(" ");
    let prefix = names(&cex.path.prefix);
    let sep = if prefix.is_empty() { "" } else { " " };
    println!("path={prefix}{sep}({})^w", names(&cex.path.cycle));
    println!("counterexample:");
    let text = write_trace(&cex.trace);
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn elapsed(start: Instant) {
    println!("time_ms={}", start.elapsed().as_millis());
}

fn cmd_check(
    system: &Path,
    formula: &FormulaArg,
    valuation: Option<&str>,
    cex_out: Option<&Path>,
) -> Result<ExitCode, Fatal> {
    let sys = load_system(system)?;
    let f = load_formula(formula)?;
    let start = Instant::now();
    if let Some(bindings) = valuation {
        let v: Valuation = bindings.parse()?;
        if let Some(x) = v.first_unbound(&f.var_profile().all()) {
            return Err(Fatal(format!("variable {x} has no value")));
        }
        let r = check_fixed(&sys, &f, &v)?;
        println!("mode=fixed");
        println!("verdict={}", if r.holds { "holds" } else { "fails" });
        println!("valuation: {v}");
        print_stats(&r.stats);
        if let Some(cex) = &r.counterexample {
            // Replayed on the trace semantics before printing.
            if evaluate(&cex.trace, 0, &v, &f)? {
                return Err(Fatal("internal error: counterexample not confirmed".into()));
            }
            print_counterexample(&sys, cex, cex_out)?;
        }
        elapsed(start);
        return Ok(ExitCode::from(if r.holds { 0 } else { 1 }));
    }
    let r = check_exists(&sys, &f)?;
    println!("mode=exists");
    println!("verdict={}", if r.holds { "holds" } else { "fails" });
    println!("bound={}", r.bound);
    if let Some(c) = &r.certificate {
        println!("certificate: {c}");
    }
    print_stats(&r.stats);
    if let Some((_, cex)) = &r.witness {
        print_counterexample(&sys, cex, cex_out)?;
    }
    elapsed(start);
    Ok(ExitCode::from(if r.holds { 0 } else { 1 }))
}

fn cmd_optimize(system: &Path, formula: &FormulaArg, objective: Objective, opts: OptimizeOptions) -> Result<ExitCode, Fatal> {
    let sys = load_system(system)?;
    let f = load_formula(formula)?;
    let start = Instant::now();
    let r = optimize_mc(&sys, &f, objective, opts)?;
    println!("objective={objective}");
    let code = match &r.outcome {
        Outcome::Infeasible => {
            println!("result=infeasible");
            1
        }
        Outcome::Unbounded => {
            println!("result=unbounded");
            0
        }
        Outcome::Optimum { value, witness } => {
            println!("result=optimum");
            println!("value={value}");
            println!("witness: {witness}");
            0
        }
    };
    println!("empty_vars={}", r.empty_vars);
    println!("bound={}", r.bound);
    println!("probes={}", r.probes);
    elapsed(start);
    Ok(ExitCode::from(code))
}

fn cmd_eval_trace(trace: &Path, formula: &FormulaArg, valuation: &str, position: usize) -> Result<ExitCode, Fatal> {
    let w = parse_trace(&read(trace)?).map_err(|e| Fatal(format!("{}: {e}", trace.display())))?;
    let f = load_formula(formula)?;
    let v: Valuation = valuation.parse()?;
    let value = evaluate_strict(&w, position, &v, &f)?;
    println!("value={value}");
    Ok(ExitCode::from(if value { 0 } else { 1 }))
}

fn cmd_translate(formula: &FormulaArg, emit: Emit, system: Option<&Path>) -> Result<ExitCode, Fatal> {
    let f = load_formula(formula)?;
    let rel = relativize(&eliminate_parametric_always(&f))?;
    match emit {
        Emit::Relativized => {
            println!("relativized={rel}");
            let d = rel.max_coord().max(1) as usize;
            println!("chi={}", chi_formula(d));
        }
        Emit::Nba => print!("{}", ltl_to_nba(&rel)?.dump()),
        Emit::Product => {
            let path = system.ok_or_else(|| Fatal("--emit product needs --system".into()))?;
            let sys = load_system(path)?;
            rel.validate_coords(sys.dim())?;
            print!("{}", build_product_for(&sys, &rel)?.dump());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(seed: u64, cases: usize) -> Result<ExitCode, Fatal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let props = ["p", "q"];
    let shape = FormulaShape::new(&props, 1).with_f_vars(&["x"]).with_g_vars(&["y"]);
    let mut failures = 0;
    let mut report = |what: &str, detail: String| {
        failures += 1;
        println!("failure={what}");
        println!("{detail}");
    };
    for _ in 0..cases {
        let size = rng.gen_range(1..=7);
        let f = random_formula(&mut rng, &shape, size);
        let v = Valuation::new().with("x", rng.gen_range(0..=5)).with("y", rng.gen_range(0..=5));

        // Automaton against the trace semantics.
        let w = random_trace(&mut rng, &props, 1, 3, 4, 3);
        if cost_nba(&f, &v, 1)?.accepts(&w) != evaluate(&w, 0, &v, &f)? {
            report("automaton", format!("formula {f} valuation {v}\n{}", write_trace(&w)));
        }

        // Fixed-valuation checking against lasso enumeration.
        let states = rng.gen_range(1..=3);
        let sys = random_system(&mut rng, states, &props, 1, 3, 0.5);
        let r = check_fixed(&sys, &f, &v)?;
        let ok = match &r.counterexample {
            Some(cex) => !evaluate(&cex.trace, 0, &v, &f)?,
            None => sys.enumerate_lassos(6).all(|l| sys.trace_of(&l).is_ok_and(|t| evaluate(&t, 0, &v, &f) == Ok(true))),
        };
        if !ok {
            report("fixed", format!("formula {f} valuation {v}\n{sys}"));
        }

        // Some valuation works iff the corner of the bound box works.
        let e = check_exists(&sys, &f)?;
        let mut corner = Valuation::uniform(&f.var_profile().f_vars, e.bound);
        for y in f.var_profile().g_vars {
            corner.set(y, 0);
        }
        if e.holds != check_fixed(&sys, &f, &corner)?.holds {
            report("exists", format!("formula {f}\n{sys}"));
        }
    }
    println!("seed={seed}");
    println!("cases={cases}");
    println!("failures={failures}");
    Ok(ExitCode::from(if failures == 0 { 0 } else { 1 }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Check { system, formula, valuation, counterexample_out } => {
            cmd_check(system, formula, valuation.as_deref(), counterexample_out.as_deref())
        }
        Command::Optimize { system, formula, objective, exhaustive, jobs } => {
            cmd_optimize(system, formula, *objective, OptimizeOptions { exhaustive: *exhaustive, jobs: *jobs })
        }
        Command::EvalTrace { trace, formula, valuation, position } => cmd_eval_trace(trace, formula, valuation, *position),
        Command::Translate { formula, emit, system } => cmd_translate(formula, *emit, system.as_deref()),
        Command::Selftest { seed, cases } => cmd_selftest(*seed, *cases),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
