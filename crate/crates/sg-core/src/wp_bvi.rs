//! Bounded value iteration with widest-path upper bounds.
//!
//! Lower bounds rise by plain Bellman sweeps. Upper bounds, instead of being
//! swept (which stalls inside end components), are periodically recomputed
//! globally: restrict the Minimizer to its currently best actions, read off a
//! weighted graph whose edge weights are one-step upper bounds, and take
//! widest paths to the target. A cyclic region can only keep an upper bound
//! as large as the best weight on a path leaving it towards the target, so
//! end components deflate automatically and the two bounds meet.

use std::time::{Duration, Instant};

use crate::bellman::{bellman_update, StopReason, ValueVector};
use crate::model::StochasticGame;
use crate::player_reduction::{minimizer_restriction, restrict_to_mdp};
use crate::widest_path::{local_propagation, widest_path_widths};

/// Which states the stopping test looks at.
#[derive(Clone, Copy, PartialEq, Eq, Default, Debug)]
pub enum GapScope {
    /// Stop when the gap closes at the initial state (the classic guard).
    #[default]
    InitialState,
    /// Stop only when the gap closes at every state.
    AllStates,
}

/// Tuning knobs for [`solve_wp_bvi`] and the deflation solver.
#[derive(Clone, Copy, Debug)]
pub struct WpBviConfig {
    /// Stopping threshold on the upper−lower gap.
    pub epsilon: f64,
    /// Run the widest-path (resp. deflation) step every this many
    /// iterations; the first iteration always runs it.
    pub wp_period: u64,
    pub max_iter: u64,
    /// Record per-iteration bound vectors in the report.
    pub trace: bool,
    pub gap_scope: GapScope,
    /// Stop with [`StopReason::Timeout`] once this much wall time has passed.
    pub time_budget: Option<Duration>,
}

impl Default for WpBviConfig {
    fn default() -> Self {
        WpBviConfig {
            epsilon: 1e-6,
            wp_period: 5,
            max_iter: 1_000_000,
            trace: false,
            gap_scope: GapScope::InitialState,
            time_budget: None,
        }
    }
}

/// One recorded iteration of a bounded solver, with the full bound vectors.
#[derive(Clone, PartialEq, Debug)]
pub struct SolverTracePoint {
    pub iteration: u64,
    /// L_i(s_I) and U_i(s_I).
    pub lower: f64,
    pub upper: f64,
    pub lower_vector: ValueVector,
    pub upper_vector: ValueVector,
}

/// Outcome of a bounded solve (widest-path or deflation based).
#[derive(Clone, PartialEq, Debug)]
pub struct SolverReport {
    /// Final lower-bound vector L_i.
    pub lower: ValueVector,
    /// Final upper-bound vector U_i.
    pub upper: ValueVector,
    /// L_i(s_I).
    pub value_lower: f64,
    /// U_i(s_I).
    pub value_upper: f64,
    pub iterations: u64,
    /// Widest-path computations (resp. deflation passes) performed.
    pub wp_solves: u64,
    pub stopped_by: StopReason,
    /// Wall-clock seconds spent in the solve loop.
    pub wall_time: f64,
    pub trace: Option<Vec<SolverTracePoint>>,
    /// Maximal end components found, when the solver computes them.
    pub mec_count: Option<usize>,
}

pub(crate) fn gap_of(
    upper: &ValueVector,
    lower: &ValueVector,
    scope: GapScope,
    init: crate::model::StateId,
) -> f64 {
    match scope {
        GapScope::InitialState => upper[init] - lower[init],
        GapScope::AllStates => upper.max_gap(lower),
    }
}

/// Bounded value iteration where upper bounds come from widest paths.
///
/// Per iteration: `L_i = X L_{i-1}`. On widest-path iterations (the first
/// one, then every `wp_period`-th), the game is restricted to the
/// Minimizer's best replies under `L_i`, the induced weighted graph is
/// built under `U_{i-1}`, and `U_i` is the pointwise minimum of `U_{i-1}`
/// and the widest-path widths. Other iterations leave U untouched. Stops
/// when the gap (at the initial state, by default) reaches `epsilon`.
pub fn solve_wp_bvi(g: &StochasticGame, cfg: &WpBviConfig) -> SolverReport {
    assert!(cfg.epsilon > 0.0, "epsilon must be positive");
    assert!(cfg.wp_period >= 1, "wp_period must be at least 1");
    let start = Instant::now();
    let deadline = cfg.time_budget.map(|b| start + b);
    let init = g.initial();
    let n = g.num_states();

    let mut lower = ValueVector::bottom(n);
    let mut upper = ValueVector::top(n);
    let mut trace = cfg.trace.then(Vec::new);
    let mut iterations = 0;
    let mut wp_solves = 0;
    let mut stopped_by = StopReason::MaxIterations;

    if gap_of(&upper, &lower, cfg.gap_scope, init) <= cfg.epsilon {
        stopped_by = StopReason::Converged;
    } else {
        for i in 1..=cfg.max_iter {
            lower = bellman_update(g, &lower);
            if i == 1 || i % cfg.wp_period == 0 {
                let m = restrict_to_mdp(g, minimizer_restriction(g, &lower))
                    .expect("restriction of a valid game is valid");
                let w = local_propagation(&m, &upper);
                upper = upper.pointwise_min(&widest_path_widths(&w).widths);
                wp_solves += 1;
            }
            iterations = i;
            if let Some(tr) = &mut trace {
                tr.push(SolverTracePoint {
                    iteration: i,
                    lower: lower[init],
                    upper: upper[init],
                    lower_vector: lower.clone(),
                    upper_vector: upper.clone(),
                });
            }
            if gap_of(&upper, &lower, cfg.gap_scope, init) <= cfg.epsilon {
                stopped_by = StopReason::Converged;
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                stopped_by = StopReason::Timeout;
                break;
            }
        }
    }

    SolverReport {
        value_lower: lower[init],
        value_upper: upper[init],
        lower,
        upper,
        iterations,
        wp_solves,
        stopped_by,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        mec_count: None,
    }
}
