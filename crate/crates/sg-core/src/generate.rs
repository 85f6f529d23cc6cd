//! Built-in model families and a seeded random game generator.
//!
//! `fig1`, `fig2`, and `fig4` are small fixed models: a two-state loop chain
//! where naive upper bounds stall, a five-state game with no end components,
//! and a five-state game whose end component spans three states. `manyecs(N)`
//! is a chain of N two-state gadgets, each a maximal end component, sized
//! exactly 2N+4 states and 6N+7 transition triples. `random` produces a
//! validated game fully determined by its seed, with probabilities on a
//! 1/resolution grid.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{GameBuilder, Player, StateId, StochasticGame};

/// Which model to build.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Family {
    Fig1,
    Fig2,
    Fig4,
    ManyEcs,
    Random,
}

/// Parameters for [`generate`]. `n` is only read by `manyecs`; the remaining
/// knobs only by `random`.
#[derive(Clone, Debug)]
pub struct GeneratorParams {
    pub family: Family,
    /// Gadget count for `manyecs`; must be at least 1.
    pub n: usize,
    /// Total state count for `random`, including target and sink; at least 3.
    pub states: usize,
    /// Upper bound on actions per interior state for `random`; 1..=8.
    pub max_actions: usize,
    /// Upper bound on successors per action for `random`; at least 1.
    pub max_branching: usize,
    /// Probabilities are positive multiples of `1/resolution`; at least 1.
    pub resolution: u32,
    /// Seed for `random`; fully determines the output.
    pub seed: u64,
}

impl GeneratorParams {
    pub fn fig1() -> Self {
        Self::family(Family::Fig1)
    }

    pub fn fig2() -> Self {
        Self::family(Family::Fig2)
    }

    pub fn fig4() -> Self {
        Self::family(Family::Fig4)
    }

    pub fn manyecs(n: usize) -> Self {
        Self {
            n,
            ..Self::family(Family::ManyEcs)
        }
    }

    pub fn random(seed: u64) -> Self {
        Self {
            seed,
            ..Self::family(Family::Random)
        }
    }

    fn family(family: Family) -> Self {
        Self {
            family,
            n: 1,
            states: 6,
            max_actions: 3,
            max_branching: 3,
            resolution: 16,
            seed: 0,
        }
    }
}

#[derive(Clone, PartialEq, Error, Debug)]
pub enum GenerateError {
    #[error("manyecs requires n >= 1")]
    ManyEcsSize,
    #[error("invalid random-family parameters: {0}")]
    RandomParams(String),
}

/// Builds the requested model. Output depends only on `params`.
pub fn generate(params: &GeneratorParams) -> Result<StochasticGame, GenerateError> {
    match params.family {
        Family::Fig1 => Ok(fig1()),
        Family::Fig2 => Ok(fig2()),
        Family::Fig4 => Ok(fig4()),
        Family::ManyEcs => manyecs(params.n),
        Family::Random => random(params),
    }
}

/// A game builder can only fail on malformed input; the fixed families are
/// correct by construction.
fn built(b: GameBuilder) -> StochasticGame {
    b.finish().expect("generated model must be valid")
}

fn fig1() -> StochasticGame {
    let mut b = GameBuilder::new();
    let si = b.add_state("si", Player::Max).unwrap();
    let s = b.add_state("s", Player::Max).unwrap();
    let one = b.add_state("one", Player::Max).unwrap();
    let zero = b.add_state("zero", Player::Min).unwrap();
    b.mark_initial(si).unwrap();
    b.mark_target(one).unwrap();
    b.mark_sink(zero).unwrap();
    b.add_transition(si, "alpha", &[(s, 1.0)]).unwrap();
    b.add_transition(s, "alpha", &[(si, 1.0)]).unwrap();
    built(b)
}

fn fig2() -> StochasticGame {
    let mut b = GameBuilder::new();
    let si = b.add_state("si", Player::Max).unwrap();
    let s1 = b.add_state("s1", Player::Min).unwrap();
    let s2 = b.add_state("s2", Player::Max).unwrap();
    let one = b.add_state("one", Player::Max).unwrap();
    let zero = b.add_state("zero", Player::Min).unwrap();
    b.mark_initial(si).unwrap();
    b.mark_target(one).unwrap();
    b.mark_sink(zero).unwrap();
    b.add_transition(si, "alpha", &[(s1, 1.0)]).unwrap();
    b.add_transition(si, "beta", &[(s1, 0.7), (s2, 0.3)])
        .unwrap();
    b.add_transition(si, "gamma", &[(s2, 0.6), (si, 0.4)])
        .unwrap();
    b.add_transition(s1, "alpha", &[(s2, 1.0)]).unwrap();
    b.add_transition(s1, "beta", &[(one, 0.8), (zero, 0.2)])
        .unwrap();
    b.add_transition(s2, "alpha", &[(one, 0.9), (zero, 0.1)])
        .unwrap();
    b.add_transition(s2, "beta", &[(zero, 1.0)]).unwrap();
    built(b)
}

fn fig4() -> StochasticGame {
    let mut b = GameBuilder::new();
    let si = b.add_state("si", Player::Min).unwrap();
    let s1 = b.add_state("s1", Player::Max).unwrap();
    let s2 = b.add_state("s2", Player::Max).unwrap();
    let one = b.add_state("one", Player::Max).unwrap();
    let zero = b.add_state("zero", Player::Min).unwrap();
    b.mark_initial(si).unwrap();
    b.mark_target(one).unwrap();
    b.mark_sink(zero).unwrap();
    b.add_transition(si, "alpha", &[(s1, 1.0)]).unwrap();
    b.add_transition(si, "beta", &[(s2, 1.0)]).unwrap();
    b.add_transition(s1, "alpha", &[(si, 1.0)]).unwrap();
    b.add_transition(s1, "beta", &[(one, 0.8), (zero, 0.2)])
        .unwrap();
    b.add_transition(s2, "alpha", &[(si, 1.0)]).unwrap();
    b.add_transition(s2, "beta", &[(zero, 0.9), (one, 0.1)])
        .unwrap();
    built(b)
}

/// Chain of N gadgets {a_k, b_k}. Each gadget is closed under
/// `a_k: alpha -> b_k`, `a_k: gamma -> a_k`, `b_k: alpha -> a_k`, so it forms
/// a maximal end component; `b_k: beta` moves forward to the next gadget
/// (or to `t`), keeping the chain itself acyclic.
fn manyecs(n: usize) -> Result<StochasticGame, GenerateError> {
    if n == 0 {
        return Err(GenerateError::ManyEcsSize);
    }
    let mut b = GameBuilder::new();
    let si = b.add_state("si", Player::Max).unwrap();
    let mut gadgets = Vec::with_capacity(n);
    for k in 1..=n {
        let a = b.add_state(&format!("a{k}"), Player::Max).unwrap();
        let bk = b.add_state(&format!("b{k}"), Player::Min).unwrap();
        gadgets.push((a, bk));
    }
    let t = b.add_state("t", Player::Min).unwrap();
    let one = b.add_state("one", Player::Max).unwrap();
    let zero = b.add_state("zero", Player::Min).unwrap();
    b.mark_initial(si).unwrap();
    b.mark_target(one).unwrap();
    b.mark_sink(zero).unwrap();

    b.add_transition(si, "alpha", &[(gadgets[0].0, 1.0)])
        .unwrap();
    b.add_transition(si, "beta", &[(t, 1.0)]).unwrap();
    for (k, &(a, bk)) in gadgets.iter().enumerate() {
        b.add_transition(a, "alpha", &[(bk, 1.0)]).unwrap();
        b.add_transition(a, "beta", &[(one, 0.5), (zero, 0.5)])
            .unwrap();
        b.add_transition(a, "gamma", &[(a, 1.0)]).unwrap();
        b.add_transition(bk, "alpha", &[(a, 1.0)]).unwrap();
        let next = if k + 1 < n { gadgets[k + 1].0 } else { t };
        b.add_transition(bk, "beta", &[(next, 1.0)]).unwrap();
    }
    b.add_transition(t, "alpha", &[(one, 0.5), (zero, 0.5)])
        .unwrap();
    b.add_transition(t, "beta", &[(zero, 1.0)]).unwrap();
    Ok(built(b))
}

const ACTION_LABELS: [&str; 8] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
];

fn random(params: &GeneratorParams) -> Result<StochasticGame, GenerateError> {
    if params.states < 3 {
        return Err(GenerateError::RandomParams(
            "states must be at least 3 (one interior state plus target and sink)".into(),
        ));
    }
    if params.max_actions == 0 || params.max_actions > ACTION_LABELS.len() {
        return Err(GenerateError::RandomParams(format!(
            "max_actions must be in 1..={}",
            ACTION_LABELS.len()
        )));
    }
    if params.max_branching == 0 {
        return Err(GenerateError::RandomParams(
            "max_branching must be at least 1".into(),
        ));
    }
    if params.resolution == 0 {
        return Err(GenerateError::RandomParams(
            "resolution must be at least 1".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let interior = params.states - 2;
    let mut b = GameBuilder::new();
    let mut ids = Vec::with_capacity(params.states);
    for i in 0..interior {
        let owner = if rng.gen_range(0..2) == 0 {
            Player::Max
        } else {
            Player::Min
        };
        ids.push(b.add_state(&format!("s{i}"), owner).unwrap());
    }
    let one = b.add_state("one", Player::Max).unwrap();
    let zero = b.add_state("zero", Player::Min).unwrap();
    ids.push(one);
    ids.push(zero);
    b.mark_initial(ids[0]).unwrap();
    b.mark_target(one).unwrap();
    b.mark_sink(zero).unwrap();

    let resolution = params.resolution;
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); params.states]; // successor -> sources
    edges[one.index()].push(one.index());
    edges[zero.index()].push(zero.index());
    for &s in &ids[..interior] {
        let n_actions = rng.gen_range(1..=params.max_actions);
        for label in &ACTION_LABELS[..n_actions] {
            let width = params
                .max_branching
                .min(resolution as usize)
                .min(params.states);
            let branches = rng.gen_range(1..=width);
            let succs = sample(&mut rng, params.states, branches).into_vec();
            let parts = composition(&mut rng, resolution, branches);
            let dist: Vec<(StateId, f64)> = succs
                .iter()
                .zip(&parts)
                .map(|(&succ, &part)| (StateId(succ), part as f64 / resolution as f64))
                .collect();
            b.add_transition(s, label, &dist).unwrap();
            for &succ in &succs {
                edges[succ].push(s.index());
            }
        }
    }

    // Every state must be able to reach the target or the sink; otherwise the
    // reachability value would be underdetermined by a linear solve. States
    // that cannot get a fallback action pointing at both.
    let mut can_reach = vec![false; params.states];
    let mut queue = vec![one.index(), zero.index()];
    can_reach[one.index()] = true;
    can_reach[zero.index()] = true;
    while let Some(v) = queue.pop() {
        for &src in &edges[v] {
            if !can_reach[src] {
                can_reach[src] = true;
                queue.push(src);
            }
        }
    }
    for &s in &ids[..interior] {
        if !can_reach[s.index()] {
            b.add_transition(s, "omega", &[(one, 0.5), (zero, 0.5)])
                .unwrap();
        }
    }

    Ok(built(b))
}

/// Splits `total` into `parts` positive integers summing to `total`,
/// uniformly over compositions. Requires `parts <= total`.
fn composition(rng: &mut ChaCha8Rng, total: u32, parts: usize) -> Vec<u32> {
    debug_assert!(parts as u32 <= total);
    if parts == 1 {
        return vec![total];
    }
    let mut cuts: Vec<u32> = sample(rng, total as usize - 1, parts - 1)
        .into_iter()
        .map(|c| c as u32 + 1)
        .collect();
    cuts.sort_unstable();
    let mut parts_out = Vec::with_capacity(parts);
    let mut prev = 0;
    for &c in &cuts {
        parts_out.push(c - prev);
        prev = c;
    }
    parts_out.push(total - prev);
    parts_out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GameKind;
    use crate::parse::serialize_model;

    #[test]
    fn fig1_shape() {
        let g = generate(&GeneratorParams::fig1()).unwrap();
        assert_eq!(g.num_states(), 4);
        assert_eq!(g.num_transitions(), 4);
        assert_eq!(g.kind(), GameKind::Mc);
    }

    #[test]
    fn fig2_shape_and_post() {
        let g = generate(&GeneratorParams::fig2()).unwrap();
        assert_eq!(g.num_states(), 5);
        assert_eq!(g.num_transitions(), 13);
        assert_eq!(g.kind(), GameKind::Sg);
        let si = g.state_id("si").unwrap();
        let s2 = g.state_id("s2").unwrap();
        assert_eq!(g.post_set(si, "gamma").unwrap(), vec![si, s2]);
    }

    #[test]
    fn fig4_shape() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        assert_eq!(g.num_states(), 5);
        assert_eq!(g.num_transitions(), 10);
        assert_eq!(g.owner(g.initial()), Player::Min);
    }

    #[test]
    fn manyecs_counts() {
        for n in [1, 3, 500] {
            let g = generate(&GeneratorParams::manyecs(n)).unwrap();
            assert_eq!(g.num_states(), 2 * n + 4, "states for n={n}");
            assert_eq!(g.num_transitions(), 6 * n + 7, "transitions for n={n}");
        }
        assert_eq!(
            generate(&GeneratorParams::manyecs(0)),
            Err(GenerateError::ManyEcsSize)
        );
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        for seed in 0..20 {
            let a = generate(&GeneratorParams::random(seed)).unwrap();
            let b = generate(&GeneratorParams::random(seed)).unwrap();
            assert_eq!(a, b);
            assert_eq!(serialize_model(&a), serialize_model(&b));
        }
        let a = generate(&GeneratorParams::random(1)).unwrap();
        let b = generate(&GeneratorParams::random(2)).unwrap();
        assert_ne!(serialize_model(&a), serialize_model(&b));
    }

    #[test]
    fn random_respects_knobs() {
        for seed in 0..50 {
            let params = GeneratorParams {
                states: 8,
                max_actions: 4,
                max_branching: 2,
                resolution: 8,
                ..GeneratorParams::random(seed)
            };
            let g = generate(&params).unwrap();
            assert_eq!(g.num_states(), 8);
            for s in g.state_ids() {
                let actions = g.actions(s);
                assert!(!actions.is_empty());
                // interior states: at most max_actions plus the fallback
                assert!(actions.len() <= 5);
                for a in actions {
                    assert!(a.dist().len() <= 2 || a.label() == "omega");
                    for &(_, p) in a.dist() {
                        let scaled = p * 8.0;
                        assert!(
                            (scaled - scaled.round()).abs() < 1e-12,
                            "probability {p} not on the 1/8 grid"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn random_param_validation() {
        let bad = |f: &dyn Fn(&mut GeneratorParams)| {
            let mut p = GeneratorParams::random(0);
            f(&mut p);
            generate(&p).unwrap_err()
        };
        assert!(matches!(
            bad(&|p| p.states = 2),
            GenerateError::RandomParams(_)
        ));
        assert!(matches!(
            bad(&|p| p.max_actions = 0),
            GenerateError::RandomParams(_)
        ));
        assert!(matches!(
            bad(&|p| p.max_actions = 9),
            GenerateError::RandomParams(_)
        ));
        assert!(matches!(
            bad(&|p| p.max_branching = 0),
            GenerateError::RandomParams(_)
        ));
        assert!(matches!(
            bad(&|p| p.resolution = 0),
            GenerateError::RandomParams(_)
        ));
    }
}
