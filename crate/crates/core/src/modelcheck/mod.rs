//! Model checking transition systems against cPLTL: for some valuation, for
//! a fixed one, and for every one.

mod check;
mod fair;
mod product;
mod pump;

pub use check::{
    check_exists, check_fixed, check_forall, exists_formula, forall_formula, forall_upper_bound,
    upper_bound_formula, valuation_upper_bound, Counterexample, ExistsReport, FixedReport, ForallReport, Stats,
};
pub use product::{build_product, build_product_for, ColoredCostGraph, ProductEdge, Vertex};
pub use pump::{pump_info, pumpable_fair_path, pumpable_fair_path_with_stats, pumped_fair_path, verify_pumpable, PumpError, PumpInfo};

use crate::automata::AutomatonError;
use crate::formula::{CoordError, RewriteError, Var};
use crate::system::SystemError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelCheckError {
    #[error("variable {0} parameterizes both a bounded eventually and a bounded always")]
    IllFormed(Var),
    #[error("formula mentions kappa{coord} or a bound on coordinate {coord}, but the system has dimension {dim}")]
    Dimension { coord: u32, dim: usize },
    #[error("expected a formula without parameterized eventualities, found variable {0}")]
    HasEventuallyVars(Var),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("counterexample not confirmed by the trace semantics")]
    Unconfirmed,
    #[error("no pumpable path, yet the certificate valuation {0} fails; result inconclusive for this dimension")]
    Inconclusive(String),
}

impl From<CoordError> for ModelCheckError {
    fn from(e: CoordError) -> Self {
        ModelCheckError::Dimension { coord: e.coord, dim: e.dim }
    }
}
