//! Reduction of a stochastic game to an MDP by fixing the Minimizer's
//! candidate actions.
//!
//! Given a lower-bound vector `f`, the Minimizer only keeps the actions that
//! attain the minimal one-step value under `f`; everything else is dropped.
//! Every state of the result then maximizes, which is what lets upper bounds
//! be propagated globally by a graph algorithm instead of a per-state
//! fixpoint. As `f` rises towards the value from below, the retained sets
//! eventually stabilize on the Minimizer's actually optimal actions.

use thiserror::Error;

use crate::bellman::{action_value, ValueVector};
use crate::model::{AvailableActions, GameView, Player, StateId, StochasticGame};

/// For each state, the indices of the actions that remain available,
/// strictly increasing within each state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AvailabilityMap {
    retained: Vec<Vec<usize>>,
}

impl AvailabilityMap {
    /// Every action of every state stays available.
    pub fn full(g: &StochasticGame) -> Self {
        AvailabilityMap {
            retained: g
                .state_ids()
                .map(|s| (0..g.state(s).actions().len()).collect())
                .collect(),
        }
    }

    /// Wraps explicit retained sets; validation happens in
    /// [`restrict_to_mdp`].
    pub fn from_retained(retained: Vec<Vec<usize>>) -> Self {
        AvailabilityMap { retained }
    }

    pub fn retained(&self, s: StateId) -> &[usize] {
        &self.retained[s.index()]
    }

    pub fn num_states(&self) -> usize {
        self.retained.len()
    }
}

/// Minimizer states keep exactly the actions whose one-step value under `f`
/// ties for the minimum (floating-point equality; all ties kept, in source
/// order). Maximizer states keep everything.
pub fn minimizer_restriction(g: &StochasticGame, f: &ValueVector) -> AvailabilityMap {
    assert_eq!(f.len(), g.num_states());
    let retained = g
        .state_ids()
        .map(|s| {
            let count = g.state(s).actions().len();
            if g.owner(s) == Player::Max {
                return (0..count).collect();
            }
            let values: Vec<f64> = (0..count).map(|idx| action_value(g, f, s, idx)).collect();
            let best = values.iter().copied().fold(f64::INFINITY, f64::min);
            (0..count).filter(|&idx| values[idx] == best).collect()
        })
        .collect();
    AvailabilityMap { retained }
}

/// A restriction was structurally invalid.
#[derive(Clone, PartialEq, Eq, Error, Debug)]
pub enum ReductionError {
    #[error("availability map covers {got} states but the game has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state {state} retains no actions")]
    EmptyRetained { state: String },
    #[error("state {state} retains invalid action indices (out of range, repeated, or unsorted)")]
    InvalidIndices { state: String },
    #[error("maximizer state {state} must keep all of its actions")]
    MaximizerRestricted { state: String },
}

/// The game seen through an availability map, with every non-sink state
/// maximizing. Borrows the underlying game.
#[derive(Clone, Debug)]
pub struct RestrictedMdp<'a> {
    game: &'a StochasticGame,
    avail: AvailabilityMap,
}

impl<'a> RestrictedMdp<'a> {
    pub fn game(&self) -> &'a StochasticGame {
        self.game
    }

    pub fn availability(&self) -> &AvailabilityMap {
        &self.avail
    }

    pub fn retained(&self, s: StateId) -> &[usize] {
        self.avail.retained(s)
    }
}

/// Checks an availability map against the game and wraps the pair up as an
/// MDP view. Only Minimizer states may lose actions, and no state may end up
/// blocked.
pub fn restrict_to_mdp<'a>(
    g: &'a StochasticGame,
    avail: AvailabilityMap,
) -> Result<RestrictedMdp<'a>, ReductionError> {
    if avail.num_states() != g.num_states() {
        return Err(ReductionError::LengthMismatch {
            expected: g.num_states(),
            got: avail.num_states(),
        });
    }
    for s in g.state_ids() {
        let kept = avail.retained(s);
        let count = g.state(s).actions().len();
        let name = || g.state(s).name().to_string();
        if kept.is_empty() {
            return Err(ReductionError::EmptyRetained { state: name() });
        }
        let well_formed = kept.windows(2).all(|w| w[0] < w[1]) && *kept.last().unwrap() < count;
        if !well_formed {
            return Err(ReductionError::InvalidIndices { state: name() });
        }
        if g.owner(s) == Player::Max && kept.len() != count {
            return Err(ReductionError::MaximizerRestricted { state: name() });
        }
    }
    Ok(RestrictedMdp { game: g, avail })
}

impl GameView for RestrictedMdp<'_> {
    fn game(&self) -> &StochasticGame {
        self.game
    }

    fn available(&self, s: StateId) -> AvailableActions<'_> {
        AvailableActions::Subset(self.avail.retained(s).iter())
    }

    fn maximizes(&self, s: StateId) -> bool {
        s != self.game.sink()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::bellman_update;
    use crate::generate::{generate, GeneratorParams};

    #[test]
    fn restriction_drops_dominated_minimizer_actions() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let si = g.state_id("si").unwrap();
        // Two sweeps from the all-zero vector give (0, 0.8, 0.1, 1, 0);
        // under that vector the Minimizer strictly prefers moving to s2.
        let mut f = ValueVector::bottom(g.num_states());
        f = bellman_update(&g, &f);
        f = bellman_update(&g, &f);
        let avail = minimizer_restriction(&g, &f);
        assert_eq!(avail.retained(si), &[1]);
        for s in g.state_ids().filter(|&s| s != si) {
            let count = g.state(s).actions().len();
            assert_eq!(avail.retained(s).len(), count, "only si loses actions");
        }
    }

    #[test]
    fn ties_keep_every_minimal_action() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let si = g.state_id("si").unwrap();
        // Under a constant vector all actions at a Minimizer state tie.
        let f = ValueVector::from_vec(vec![0.5; g.num_states()]).unwrap();
        let avail = minimizer_restriction(&g, &f);
        assert_eq!(avail.retained(si), &[0, 1]);
    }

    #[test]
    fn maximizer_states_are_never_restricted() {
        let g = generate(&GeneratorParams::fig2()).unwrap();
        // χ_target makes beta strictly worse than alpha at the Maximizer
        // state s2, but the reduction must not touch Maximizer choices.
        let mut f = ValueVector::bottom(g.num_states());
        f.set(g.target(), 1.0);
        let avail = minimizer_restriction(&g, &f);
        let s2 = g.state_id("s2").unwrap();
        assert_eq!(avail.retained(s2), &[0, 1]);
    }

    #[test]
    fn markov_chain_restriction_is_identity() {
        let g = generate(&GeneratorParams::fig1()).unwrap();
        let f = ValueVector::bottom(g.num_states());
        let avail = minimizer_restriction(&g, &f);
        assert_eq!(avail, AvailabilityMap::full(&g));
    }

    #[test]
    fn restricted_view_maximizes_everywhere_but_the_sink() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let mut f = ValueVector::bottom(g.num_states());
        f = bellman_update(&g, &f);
        f = bellman_update(&g, &f);
        let m = restrict_to_mdp(&g, minimizer_restriction(&g, &f)).unwrap();
        let si = g.state_id("si").unwrap();
        assert!(m.maximizes(si));
        assert!(!m.maximizes(g.sink()));
        assert_eq!(m.available(si).collect::<Vec<_>>(), vec![1]);
        // One sweep in the restricted view now routes si through s2.
        let next = bellman_update(&m, &f);
        assert!((next[si] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_malformed_maps() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let n = g.num_states();
        let err =
            restrict_to_mdp(&g, AvailabilityMap::from_retained(vec![vec![0]; n - 1])).unwrap_err();
        assert!(matches!(err, ReductionError::LengthMismatch { .. }));

        let mut empty = AvailabilityMap::full(&g).retained.clone();
        empty[0].clear();
        let err = restrict_to_mdp(&g, AvailabilityMap::from_retained(empty)).unwrap_err();
        assert!(matches!(err, ReductionError::EmptyRetained { .. }));

        let mut bad = AvailabilityMap::full(&g).retained.clone();
        bad[0] = vec![0, 7];
        let err = restrict_to_mdp(&g, AvailabilityMap::from_retained(bad)).unwrap_err();
        assert!(matches!(err, ReductionError::InvalidIndices { .. }));

        let mut shrunk = AvailabilityMap::full(&g).retained.clone();
        let s1 = g.state_id("s1").unwrap();
        shrunk[s1.index()] = vec![0];
        let err = restrict_to_mdp(&g, AvailabilityMap::from_retained(shrunk)).unwrap_err();
        assert!(matches!(err, ReductionError::MaximizerRestricted { .. }));
    }
}
