//! Explicit-state model of a two-player stochastic reachability game.
//!
//! A game has a finite set of states, each owned by the Maximizer or the
//! Minimizer, a designated initial state, a target state `1`, and a sink
//! state `0`. Each state carries a nonempty list of actions; an action is a
//! probability distribution over successor states. The Maximizer tries to
//! reach the target, the Minimizer tries to avoid it.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// Tolerance used when checking that a distribution sums to one.
pub const DIST_TOLERANCE: f64 = 1e-9;

/// Index of a state in a game's state table. Ids are dense and assigned in
/// declaration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which player picks the action at a state.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Player {
    Max,
    Min,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Max => write!(f, "max"),
            Player::Min => write!(f, "min"),
        }
    }
}

/// An action: a label plus a probability distribution over successors.
#[derive(Clone, PartialEq, Debug)]
pub struct ActionRecord {
    pub(crate) label: String,
    pub(crate) dist: Vec<(StateId, f64)>,
}

impl ActionRecord {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Successor/probability pairs in declaration order; probabilities are
    /// in (0,1] and sum to one within [`DIST_TOLERANCE`].
    pub fn dist(&self) -> &[(StateId, f64)] {
        &self.dist
    }

    /// Successors with positive probability, ascending by id.
    pub fn post(&self) -> Vec<StateId> {
        let mut post: Vec<StateId> = self.dist.iter().map(|&(s, _)| s).collect();
        post.sort_unstable();
        post
    }
}

/// A state: name, owner, and available actions.
#[derive(Clone, PartialEq, Debug)]
pub struct StateRecord {
    pub(crate) name: String,
    pub(crate) owner: Player,
    pub(crate) actions: Vec<ActionRecord>,
}

impl StateRecord {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn owner(&self) -> Player {
        self.owner
    }

    pub fn actions(&self) -> &[ActionRecord] {
        &self.actions
    }
}

/// Structural classification of a game.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GameKind {
    /// Both players make real choices somewhere.
    Sg,
    /// The Minimizer is absent: every non-sink state belongs to the Maximizer.
    Mdp,
    /// Nobody chooses: every state has exactly one action.
    Mc,
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameKind::Sg => write!(f, "SG"),
            GameKind::Mdp => write!(f, "MDP"),
            GameKind::Mc => write!(f, "MC"),
        }
    }
}

/// Errors raised while building or validating a game.
#[derive(Clone, PartialEq, Error, Debug)]
pub enum ModelError {
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("state `{state}` already has an action labeled `{label}`")]
    DuplicateAction { state: String, label: String },
    #[error("distribution of action `{label}` at `{state}` lists successor `{succ}` twice")]
    DuplicateSuccessor {
        state: String,
        label: String,
        succ: String,
    },
    #[error("action `{label}` at `{state}` has no successors")]
    EmptyDistribution { state: String, label: String },
    #[error(
        "probability {prob} for successor `{succ}` of action `{label}` at `{state}` \
         is outside (0,1]"
    )]
    ProbabilityOutOfRange {
        state: String,
        label: String,
        succ: String,
        prob: f64,
    },
    #[error("distribution of action `{label}` at `{state}` sums to {sum}, expected 1")]
    DistributionSum {
        state: String,
        label: String,
        sum: f64,
    },
    #[error("state `{0}` has no actions")]
    BlockingState(String),
    #[error("no initial state declared")]
    MissingInitial,
    #[error("no target state declared")]
    MissingTarget,
    #[error("no sink state declared")]
    MissingSink,
    #[error("initial state declared twice (`{0}` and `{1}`)")]
    DuplicateInitial(String, String),
    #[error("target state declared twice (`{0}` and `{1}`)")]
    DuplicateTarget(String, String),
    #[error("sink state declared twice (`{0}` and `{1}`)")]
    DuplicateSink(String, String),
    #[error("state `{0}` cannot be both target and sink")]
    TargetSinkConflict(String),
    #[error("target state `{0}` must be owned by the Maximizer")]
    TargetOwner(String),
    #[error("sink state `{0}` must be owned by the Minimizer")]
    SinkOwner(String),
    #[error("{role} state `{state}` must have exactly one action: a probability-1 self-loop")]
    BoundarySelfLoop { role: &'static str, state: String },
    #[error("action `{label}` is not available at state `{state}`")]
    UnavailableAction { state: String, label: String },
}

/// An immutable, validated stochastic game.
#[derive(Clone, PartialEq, Debug)]
pub struct StochasticGame {
    states: Vec<StateRecord>,
    initial: StateId,
    target: StateId,
    sink: StateId,
}

impl StochasticGame {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Total number of transition triples (s, a, s') with positive probability.
    pub fn num_transitions(&self) -> usize {
        self.states
            .iter()
            .flat_map(|st| st.actions.iter())
            .map(|a| a.dist.len())
            .sum()
    }

    pub fn states(&self) -> &[StateRecord] {
        &self.states
    }

    pub fn state(&self, s: StateId) -> &StateRecord {
        &self.states[s.index()]
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    /// Looks a state up by name.
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|st| st.name == name)
            .map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn target(&self) -> StateId {
        self.target
    }

    pub fn sink(&self) -> StateId {
        self.sink
    }

    pub fn owner(&self, s: StateId) -> Player {
        self.state(s).owner
    }

    pub fn actions(&self, s: StateId) -> &[ActionRecord] {
        &self.state(s).actions
    }

    pub fn kind(&self) -> GameKind {
        if self.states.iter().all(|st| st.actions.len() == 1) {
            GameKind::Mc
        } else if self
            .state_ids()
            .all(|s| s == self.sink || self.owner(s) == Player::Max)
        {
            GameKind::Mdp
        } else {
            GameKind::Sg
        }
    }

    /// Successors of `s` under the action labeled `label`, ascending by id.
    pub fn post_set(&self, s: StateId, label: &str) -> Result<Vec<StateId>, ModelError> {
        let st = self.state(s);
        let action = st
            .actions
            .iter()
            .find(|a| a.label == label)
            .ok_or_else(|| ModelError::UnavailableAction {
                state: st.name.clone(),
                label: label.to_string(),
            })?;
        Ok(action.post())
    }
}

/// A uniform read view over a full game and its restrictions: which actions
/// are available at a state, and whether that state maximizes.
pub trait GameView {
    fn game(&self) -> &StochasticGame;

    /// Indices into `game().actions(s)` of the actions available at `s`.
    fn available(&self, s: StateId) -> AvailableActions<'_>;

    /// Whether the owner of `s` picks the maximum over available actions.
    fn maximizes(&self, s: StateId) -> bool;
}

/// Iterator over available action indices at one state.
pub enum AvailableActions<'a> {
    All(Range<usize>),
    Subset(std::slice::Iter<'a, usize>),
}

impl Iterator for AvailableActions<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            AvailableActions::All(r) => r.next(),
            AvailableActions::Subset(it) => it.next().copied(),
        }
    }
}

impl GameView for StochasticGame {
    fn game(&self) -> &StochasticGame {
        self
    }

    fn available(&self, s: StateId) -> AvailableActions<'_> {
        AvailableActions::All(0..self.state(s).actions.len())
    }

    fn maximizes(&self, s: StateId) -> bool {
        self.owner(s) == Player::Max
    }
}

/// Incremental constructor for [`StochasticGame`]; `finish` validates every
/// structural invariant. If the target or sink is declared without actions,
/// the mandatory probability-1 self-loop is inserted automatically.
#[derive(Default, Debug)]
pub struct GameBuilder {
    states: Vec<StateRecord>,
    by_name: HashMap<String, StateId>,
    initial: Option<StateId>,
    target: Option<StateId>,
    sink: Option<StateId>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.by_name.get(name).copied()
    }

    fn name(&self, s: StateId) -> String {
        self.states[s.index()].name.clone()
    }

    pub fn add_state(&mut self, name: &str, owner: Player) -> Result<StateId, ModelError> {
        if self.by_name.contains_key(name) {
            return Err(ModelError::DuplicateState(name.to_string()));
        }
        let id = StateId(self.states.len());
        self.states.push(StateRecord {
            name: name.to_string(),
            owner,
            actions: Vec::new(),
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn mark_initial(&mut self, s: StateId) -> Result<(), ModelError> {
        if let Some(prev) = self.initial {
            return Err(ModelError::DuplicateInitial(self.name(prev), self.name(s)));
        }
        self.initial = Some(s);
        Ok(())
    }

    pub fn mark_target(&mut self, s: StateId) -> Result<(), ModelError> {
        if let Some(prev) = self.target {
            return Err(ModelError::DuplicateTarget(self.name(prev), self.name(s)));
        }
        self.target = Some(s);
        Ok(())
    }

    pub fn mark_sink(&mut self, s: StateId) -> Result<(), ModelError> {
        if let Some(prev) = self.sink {
            return Err(ModelError::DuplicateSink(self.name(prev), self.name(s)));
        }
        self.sink = Some(s);
        Ok(())
    }

    /// Adds an action. State ids must have been issued by this builder;
    /// out-of-range ids are a caller bug and panic.
    pub fn add_transition(
        &mut self,
        state: StateId,
        label: &str,
        dist: &[(StateId, f64)],
    ) -> Result<(), ModelError> {
        assert!(state.index() < self.states.len(), "state id out of range");
        let state_name = self.name(state);
        if self.states[state.index()]
            .actions
            .iter()
            .any(|a| a.label == label)
        {
            return Err(ModelError::DuplicateAction {
                state: state_name,
                label: label.to_string(),
            });
        }
        if dist.is_empty() {
            return Err(ModelError::EmptyDistribution {
                state: state_name,
                label: label.to_string(),
            });
        }
        let mut seen = Vec::with_capacity(dist.len());
        for &(succ, prob) in dist {
            assert!(
                succ.index() < self.states.len(),
                "successor id out of range"
            );
            if seen.contains(&succ) {
                return Err(ModelError::DuplicateSuccessor {
                    state: state_name,
                    label: label.to_string(),
                    succ: self.name(succ),
                });
            }
            seen.push(succ);
            if !(prob > 0.0 && prob <= 1.0) {
                return Err(ModelError::ProbabilityOutOfRange {
                    state: state_name,
                    label: label.to_string(),
                    succ: self.name(succ),
                    prob,
                });
            }
        }
        let sum: f64 = dist.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > DIST_TOLERANCE {
            return Err(ModelError::DistributionSum {
                state: state_name,
                label: label.to_string(),
                sum,
            });
        }
        self.states[state.index()].actions.push(ActionRecord {
            label: label.to_string(),
            dist: dist.to_vec(),
        });
        Ok(())
    }

    pub fn finish(mut self) -> Result<StochasticGame, ModelError> {
        let initial = self.initial.ok_or(ModelError::MissingInitial)?;
        let target = self.target.ok_or(ModelError::MissingTarget)?;
        let sink = self.sink.ok_or(ModelError::MissingSink)?;
        if target == sink {
            return Err(ModelError::TargetSinkConflict(self.name(target)));
        }
        if self.states[target.index()].owner != Player::Max {
            return Err(ModelError::TargetOwner(self.name(target)));
        }
        if self.states[sink.index()].owner != Player::Min {
            return Err(ModelError::SinkOwner(self.name(sink)));
        }
        for (role, s) in [("target", target), ("sink", sink)] {
            if self.states[s.index()].actions.is_empty() {
                self.states[s.index()].actions.push(ActionRecord {
                    label: "alpha".to_string(),
                    dist: vec![(s, 1.0)],
                });
            }
            let actions = &self.states[s.index()].actions;
            let is_self_loop =
                actions.len() == 1 && actions[0].dist.len() == 1 && actions[0].dist[0].0 == s;
            if !is_self_loop {
                return Err(ModelError::BoundarySelfLoop {
                    role,
                    state: self.name(s),
                });
            }
        }
        for st in &self.states {
            if st.actions.is_empty() {
                return Err(ModelError::BlockingState(st.name.clone()));
            }
        }
        Ok(StochasticGame {
            states: self.states,
            initial,
            target,
            sink,
        })
    }
}
