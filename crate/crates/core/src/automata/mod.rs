//! Büchi automata: the tableau translation for plain LTL, the budgeted
//! automata for fixed valuations, and emptiness.

mod cost;
mod emptiness;
mod nba;
mod tableau;

pub use cost::{cost_nba, CostBuchiAutomaton};
pub use emptiness::{accepting_lasso, lazy_accepting_lasso, reachable, GraphLasso, LazyGraph};
pub use nba::{buchi_empty, ltl_to_nba, nba_accepts_lasso, BuchiAutomaton, Guard, PropLasso, Transition};

use crate::formula::CoordError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("formula contains parameterized operators")]
    Parameterized,
    #[error("automaton too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Coord(#[from] CoordError),
}
