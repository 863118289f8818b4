pub mod automata;
pub mod formula;
pub mod generate;
pub mod modelcheck;
pub mod optimize;
pub mod system;
pub mod trace;
