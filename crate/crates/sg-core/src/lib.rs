//! Solvers for two-player stochastic games with a reachability objective.
//!
//! A game is played on a finite set of states split between a Maximizer and
//! a Minimizer, with one designated target and one designated sink; each
//! state offers a set of actions, each action a probability distribution
//! over successors. The value of a state is the probability with which the
//! Maximizer can force reaching the target under optimal play by both sides.
//!
//! The crate provides, from the bottom up:
//!
//! - [`model`]: the validated game representation and a builder.
//! - [`parse`]: a line-oriented text format for games, with a canonical
//!   serializer.
//! - [`generate`]: fixed example families and a seeded random generator.
//! - [`bellman`]: the Bellman operator, plain value iteration, and naive
//!   bounded value iteration (the two classic baselines and their failure
//!   modes).
//! - [`player_reduction`]: restriction of the Minimizer to its currently
//!   best actions, producing an MDP view.
//! - [`widest_path`]: weighted reachability graphs and deterministic
//!   single-target widest paths.
//! - [`wp_bvi`]: the main solver — bounded value iteration whose upper
//!   bounds come from periodic global widest-path propagation, immune to
//!   end-component stalling.
//! - [`mec_deflate`]: the deflation baseline — maximal end-component
//!   decomposition with best-exit capping.
//! - [`oracle`]: brute-force ground truth (exact values by strategy
//!   enumeration, exhaustive widest paths and end components) for testing.

pub mod bellman;
pub mod generate;
pub mod mec_deflate;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod player_reduction;
pub mod widest_path;
pub mod wp_bvi;

pub use bellman::{
    apply_action, bellman_update, naive_bvi, naive_bvi_with, value_iteration, value_iteration_with,
    IterOpts, StopReason, TracePoint, VIReport, ValueError, ValueVector,
};
pub use generate::{generate, Family, GenerateError, GeneratorParams};
pub use mec_deflate::{deflate, mec_decomposition, solve_dfl, EndComponent, EndComponentSet};
pub use model::{
    ActionRecord, GameBuilder, GameKind, GameView, ModelError, Player, StateId, StateRecord,
    StochasticGame,
};
pub use oracle::{
    brute_mec, brute_widest_paths, exact_value, mc_reachability, OracleError, OracleResult,
    Strategy, BRUTE_MEC_CAP, BRUTE_WIDEST_CAP, DEFAULT_STRATEGY_CAP,
};
pub use parse::{parse_model, serialize_model, ParseError, ParseErrorKind};
pub use player_reduction::{
    minimizer_restriction, restrict_to_mdp, AvailabilityMap, ReductionError, RestrictedMdp,
};
pub use widest_path::{
    local_propagation, widest_path_widths, Edge, GraphError, WeightedGraph, WidestPathResult,
};
pub use wp_bvi::{solve_wp_bvi, GapScope, SolverReport, SolverTracePoint, WpBviConfig};
