//! Canonical tree-based genetic programming for symbolic regression.
//!
//! Programs are prefix sequences over {add, sub, mul, aq, sqrt, sin}, the
//! input variables and random constants. Fitness is NRMSE plus a parsimony
//! penalty per node; selection is by tournament.

mod config;
mod engine;
mod ops;
mod program;
mod protocol;

pub use config::{ConfigError, GpConfig};
pub use engine::{evolve, fitness, nrmse, tournament_select, Fitness, GpError, RunResult, Target};
pub use ops::{
    hoist_mutation, init_population, point_mutation, random_terminal, random_tree, subtree, subtree_crossover,
    subtree_mutation,
};
pub use program::{aq, Function, Node, Program, ProgramError};
pub use protocol::{read_summary, run_protocol, write_summary, ProtocolResult, RunRecord, SummaryError, SummaryRow};
