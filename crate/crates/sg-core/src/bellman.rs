//! The one-step Bellman operator and the two classic iteration schemes built
//! on it: plain value iteration (lower bounds from the all-zero vector) and
//! naive bounded value iteration (lower and upper bounds iterated together).
//!
//! Value iteration's stopping criterion — progress at the initial state
//! dropping below `delta` — carries **no precision guarantee**: the iterates
//! approach the value from below and may still be far from it when progress
//! gets small. Naive BVI's gap criterion is sound but the upper chain can get
//! stuck strictly above the value inside end components, so it may never
//! terminate; both failure modes are what the widest-path solver repairs.

use std::ops::Index;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{GameView, ModelError, StateId, StochasticGame};

/// A dense map from states to values in [0,1].
#[derive(Clone, PartialEq, Debug)]
pub struct ValueVector(Vec<f64>);

/// A value outside [0,1] (or not finite) was supplied.
#[derive(Clone, Copy, PartialEq, Error, Debug)]
#[error("value {value} at index {index} is not a finite number in [0,1]")]
pub struct ValueError {
    pub index: usize,
    pub value: f64,
}

impl ValueVector {
    /// The all-zero vector (the least element of the value lattice).
    pub fn bottom(n: usize) -> Self {
        ValueVector(vec![0.0; n])
    }

    /// The all-one vector (the greatest element).
    pub fn top(n: usize) -> Self {
        ValueVector(vec![1.0; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self, ValueError> {
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(ValueError { index, value });
            }
        }
        Ok(ValueVector(values))
    }

    /// Wraps values the caller guarantees to be in range.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        ValueVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: StateId) -> f64 {
        self.0[s.index()]
    }

    pub(crate) fn set(&mut self, s: StateId, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value));
        self.0[s.index()] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    /// Pointwise minimum of two vectors of equal length.
    pub fn pointwise_min(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        ValueVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.min(*b))
                .collect(),
        )
    }

    /// Largest pointwise difference `self - lower`.
    pub fn max_gap(&self, lower: &Self) -> f64 {
        assert_eq!(self.len(), lower.len());
        self.0
            .iter()
            .zip(&lower.0)
            .map(|(u, l)| u - l)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when `self <= other + tol` pointwise.
    pub fn le_within(&self, other: &Self, tol: f64) -> bool {
        assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tol)
    }
}

impl Index<StateId> for ValueVector {
    type Output = f64;

    fn index(&self, s: StateId) -> &f64 {
        &self.0[s.index()]
    }
}

/// Why an iteration loop stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StopReason {
    /// Value iteration: progress at the initial state fell below delta.
    Threshold,
    /// Bounded iteration: the gap at the initial state closed to epsilon.
    Converged,
    MaxIterations,
    Timeout,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::Threshold => write!(f, "threshold"),
            StopReason::Converged => write!(f, "converged"),
            StopReason::MaxIterations => write!(f, "max-iterations"),
            StopReason::Timeout => write!(f, "timeout"),
        }
    }
}

/// One recorded iteration: bounds at the initial state.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TracePoint {
    pub iteration: u64,
    pub lower: f64,
    /// Present only for schemes that maintain an upper bound.
    pub upper: Option<f64>,
}

/// Outcome of a value-iteration-style run.
#[derive(Clone, PartialEq, Debug)]
pub struct VIReport {
    /// Final lower-bound vector.
    pub values: ValueVector,
    /// Final upper-bound vector, for naive BVI.
    pub upper: Option<ValueVector>,
    pub iterations: u64,
    pub stopped_by: StopReason,
    /// Wall-clock seconds spent inside the solve loop.
    pub wall_time: f64,
    pub trace: Option<Vec<TracePoint>>,
}

/// Optional knobs shared by the iteration drivers.
#[derive(Clone, Copy, Default, Debug)]
pub struct IterOpts {
    /// Record per-iteration bounds at the initial state.
    pub trace: bool,
    /// Stop with [`StopReason::Timeout`] once this much wall time has passed.
    pub time_budget: Option<Duration>,
}

/// The value of playing action `idx` at `s` and continuing with `f`:
/// 1 at the target, 0 at the sink, otherwise the expectation of `f` over
/// successors. Clamped to [0,1] against rounding drift.
pub(crate) fn action_value(g: &StochasticGame, f: &ValueVector, s: StateId, idx: usize) -> f64 {
    if s == g.target() {
        return 1.0;
    }
    if s == g.sink() {
        return 0.0;
    }
    let action = &g.state(s).actions()[idx];
    let sum: f64 = action.dist().iter().map(|&(succ, p)| p * f.get(succ)).sum();
    sum.clamp(0.0, 1.0)
}

/// One-step value of an action referenced by label, with availability
/// checked against the view.
pub fn apply_action<V: GameView>(
    view: &V,
    f: &ValueVector,
    s: StateId,
    label: &str,
) -> Result<f64, ModelError> {
    let g = view.game();
    assert_eq!(f.len(), g.num_states());
    let unavailable = || ModelError::UnavailableAction {
        state: g.state(s).name().to_string(),
        label: label.to_string(),
    };
    let idx = g
        .state(s)
        .actions()
        .iter()
        .position(|a| a.label() == label)
        .ok_or_else(unavailable)?;
    if !view.available(s).any(|a| a == idx) {
        return Err(unavailable());
    }
    Ok(action_value(g, f, s, idx))
}

/// One synchronous sweep of the Bellman operator: each state takes the max
/// (Maximizer) or min (Minimizer) of its available action values, reading
/// only the previous vector.
pub fn bellman_update<V: GameView>(view: &V, f: &ValueVector) -> ValueVector {
    let g = view.game();
    assert_eq!(f.len(), g.num_states());
    let out = g
        .state_ids()
        .map(|s| {
            if s == g.target() {
                return 1.0;
            }
            if s == g.sink() {
                return 0.0;
            }
            let maximizes = view.maximizes(s);
            view.available(s)
                .map(|idx| action_value(g, f, s, idx))
                .reduce(|best, v| if maximizes { best.max(v) } else { best.min(v) })
                .expect("validated games have no blocking states")
        })
        .collect();
    ValueVector::from_raw(out)
}

/// Plain value iteration from the all-zero vector. Stops once one sweep
/// improves the initial state's value by less than `delta` — a heuristic
/// criterion with **no bound on the remaining error**. It can be arbitrarily
/// wrong: the initial state's iterate typically stays at 0 until the target
/// indicator has propagated through the graph, so the guard can fire on the
/// very first sweep and report 0 for a game whose value is close to 1. The
/// bounded solvers exist precisely because of this.
pub fn value_iteration(g: &StochasticGame, delta: f64, max_iter: u64) -> VIReport {
    value_iteration_with(g, delta, max_iter, IterOpts::default())
}

pub fn value_iteration_with(
    g: &StochasticGame,
    delta: f64,
    max_iter: u64,
    opts: IterOpts,
) -> VIReport {
    assert!(delta > 0.0, "delta must be positive");
    let start = Instant::now();
    let deadline = opts.time_budget.map(|b| start + b);
    let init = g.initial();
    let mut trace = opts.trace.then(Vec::new);

    // The value at the target is 1 by definition; if that is the queried
    // state there is nothing to iterate on.
    if init == g.target() {
        let values = bellman_update(g, &ValueVector::bottom(g.num_states()));
        if let Some(tr) = &mut trace {
            tr.push(TracePoint {
                iteration: 1,
                lower: values[init],
                upper: None,
            });
        }
        return VIReport {
            values,
            upper: None,
            iterations: 1,
            stopped_by: StopReason::Threshold,
            wall_time: start.elapsed().as_secs_f64(),
            trace,
        };
    }

    let mut lower = ValueVector::bottom(g.num_states());
    let mut iterations = 0;
    let mut stopped_by = StopReason::MaxIterations;
    for i in 1..=max_iter {
        let next = bellman_update(g, &lower);
        let progress = next[init] - lower[init];
        lower = next;
        iterations = i;
        if let Some(tr) = &mut trace {
            tr.push(TracePoint {
                iteration: i,
                lower: lower[init],
                upper: None,
            });
        }
        if progress < delta {
            stopped_by = StopReason::Threshold;
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            stopped_by = StopReason::Timeout;
            break;
        }
    }
    VIReport {
        values: lower,
        upper: None,
        iterations,
        stopped_by,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
    }
}

/// Naive bounded value iteration: lower bounds from the all-zero vector and
/// upper bounds from the all-one vector, updated by the same operator, until
/// the gap at the initial state reaches `epsilon`. Sound when it stops, but
/// end components can pin the upper chain above the value forever.
pub fn naive_bvi(g: &StochasticGame, epsilon: f64, max_iter: u64) -> VIReport {
    naive_bvi_with(g, epsilon, max_iter, IterOpts::default())
}

pub fn naive_bvi_with(g: &StochasticGame, epsilon: f64, max_iter: u64, opts: IterOpts) -> VIReport {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let start = Instant::now();
    let deadline = opts.time_budget.map(|b| start + b);
    let init = g.initial();
    let mut trace = opts.trace.then(Vec::new);

    let n = g.num_states();
    let mut lower = ValueVector::bottom(n);
    let mut upper = ValueVector::top(n);
    let mut iterations = 0;
    let mut stopped_by = StopReason::MaxIterations;
    for i in 1..=max_iter {
        lower = bellman_update(g, &lower);
        upper = bellman_update(g, &upper);
        iterations = i;
        if let Some(tr) = &mut trace {
            tr.push(TracePoint {
                iteration: i,
                lower: lower[init],
                upper: Some(upper[init]),
            });
        }
        if upper[init] - lower[init] <= epsilon {
            stopped_by = StopReason::Converged;
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            stopped_by = StopReason::Timeout;
            break;
        }
    }
    VIReport {
        values: lower,
        upper: Some(upper),
        iterations,
        stopped_by,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
    }
}
