//! Maximal end components and the deflation-based bounded solver.
//!
//! An end component is a nonempty set of states together with a nonempty
//! subset of actions per member such that every chosen action stays inside
//! the set and the induced graph is strongly connected (a singleton needs a
//! self-loop). Inside such a set the upper Kleene chain can stay pinned above
//! the true value; deflation repairs this by capping the upper bound of every
//! maximal end component at its best Maximizer exit. This solver is the
//! classic baseline the widest-path approach is measured against.

use std::time::Instant;

use crate::bellman::{action_value, bellman_update, StopReason, ValueVector};
use crate::model::{Player, StateId, StochasticGame};
use crate::player_reduction::{minimizer_restriction, restrict_to_mdp, RestrictedMdp};
use crate::wp_bvi::{gap_of, SolverReport, SolverTracePoint, WpBviConfig};

/// One end component: member states (sorted by id) with, for each, the
/// actions whose successors all stay inside the component.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EndComponent {
    members: Vec<(StateId, Vec<usize>)>,
}

impl EndComponent {
    pub(crate) fn from_members(mut members: Vec<(StateId, Vec<usize>)>) -> Self {
        members.sort_by_key(|(s, _)| *s);
        debug_assert!(!members.is_empty());
        debug_assert!(members.iter().all(|(_, stay)| !stay.is_empty()));
        EndComponent { members }
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.members.iter().map(|(s, _)| *s)
    }

    pub fn members(&self) -> &[(StateId, Vec<usize>)] {
        &self.members
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.members.binary_search_by_key(&s, |(m, _)| *m).is_ok()
    }

    /// The staying actions of `s`, if `s` belongs to this component.
    pub fn staying_actions(&self, s: StateId) -> Option<&[usize]> {
        self.members
            .binary_search_by_key(&s, |(m, _)| *m)
            .ok()
            .map(|i| self.members[i].1.as_slice())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// All maximal end components of one restricted MDP, pairwise disjoint,
/// sorted by their smallest state id.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EndComponentSet {
    mecs: Vec<EndComponent>,
}

impl EndComponentSet {
    pub(crate) fn from_mecs(mut mecs: Vec<EndComponent>) -> Self {
        mecs.sort_by_key(|ec| ec.members[0].0);
        EndComponentSet { mecs }
    }

    pub fn mecs(&self) -> &[EndComponent] {
        &self.mecs
    }

    /// Components other than the target and sink singletons.
    pub fn nontrivial_count(&self, g: &StochasticGame) -> usize {
        self.mecs
            .iter()
            .filter(|ec| !is_boundary_singleton(ec, g))
            .count()
    }
}

fn is_boundary_singleton(ec: &EndComponent, g: &StochasticGame) -> bool {
    ec.len() == 1 && (ec.contains(g.target()) || ec.contains(g.sink()))
}

/// Strongly connected components of a graph given by local adjacency lists,
/// in Tarjan's order. Iterative so that component-sized inputs (tens of
/// thousands of vertices in a single chain) cannot overflow the call stack.
fn tarjan_sccs(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0usize;
    let mut sccs = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));

        while let Some(&(v, edge)) = frames.last() {
            if edge < adj[v].len() {
                frames.last_mut().unwrap().1 += 1;
                let w = adj[v][edge];
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    sccs.push(component);
                }
            }
        }
    }
    sccs
}

/// Maximal end components by iterative refinement: starting from the whole
/// state set, repeatedly drop states with no staying action, split what
/// remains into strongly connected components, and recurse until each
/// candidate is a single SCC closed under its staying actions.
pub fn mec_decomposition(m: &RestrictedMdp<'_>) -> EndComponentSet {
    let g = m.game();
    let n = g.num_states();
    let mut in_set = vec![false; n];
    let mut worklist: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut mecs = Vec::new();

    while let Some(mut members) = worklist.pop() {
        for &s in &members {
            in_set[s] = true;
        }
        // Drop members with no action staying inside the candidate set; each
        // removal can strand further members, so repeat until stable.
        let staying = loop {
            let mut staying: Vec<Vec<usize>> = Vec::with_capacity(members.len());
            let mut removed = false;
            for &s in &members {
                let stays: Vec<usize> = m
                    .retained(StateId(s))
                    .iter()
                    .copied()
                    .filter(|&a| {
                        g.state(StateId(s)).actions()[a]
                            .dist()
                            .iter()
                            .all(|&(succ, _)| in_set[succ.index()])
                    })
                    .collect();
                if stays.is_empty() {
                    in_set[s] = false;
                    removed = true;
                } else {
                    staying.push(stays);
                }
            }
            if !removed {
                break staying;
            }
            members.retain(|&s| in_set[s]);
        };
        if members.is_empty() {
            continue;
        }

        let mut local_of = vec![usize::MAX; n];
        for (i, &s) in members.iter().enumerate() {
            local_of[s] = i;
        }
        let adj: Vec<Vec<usize>> = members
            .iter()
            .zip(&staying)
            .map(|(&s, stays)| {
                let mut out: Vec<usize> = stays
                    .iter()
                    .flat_map(|&a| {
                        g.state(StateId(s)).actions()[a]
                            .dist()
                            .iter()
                            .map(|&(succ, _)| local_of[succ.index()])
                    })
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();
        for &s in &members {
            in_set[s] = false;
        }

        let sccs = tarjan_sccs(members.len(), &adj);
        if sccs.len() == 1 {
            let ec = members
                .iter()
                .zip(staying)
                .map(|(&s, stays)| (StateId(s), stays))
                .collect();
            mecs.push(EndComponent::from_members(ec));
        } else {
            for scc in sccs {
                worklist.push(scc.into_iter().map(|i| members[i]).collect());
            }
        }
    }
    EndComponentSet::from_mecs(mecs)
}

/// Caps the upper bound inside every maximal end component at the
/// component's best Maximizer exit: the largest one-step value (under `u`)
/// of an available action owned by the Maximizer whose successors leave the
/// component. No exit means a cap of 0. The target and sink singletons are
/// exempt.
pub fn deflate(m: &RestrictedMdp<'_>, u: &ValueVector, ecs: &EndComponentSet) -> ValueVector {
    let g = m.game();
    assert_eq!(u.len(), g.num_states());
    let mut out = u.clone();
    for ec in ecs.mecs() {
        if is_boundary_singleton(ec, g) {
            continue;
        }
        let mut best_exit = 0.0f64;
        for s in ec.states() {
            if g.owner(s) != Player::Max {
                continue;
            }
            for &a in m.retained(s) {
                let exits = g.state(s).actions()[a]
                    .dist()
                    .iter()
                    .any(|&(succ, _)| !ec.contains(succ));
                if exits {
                    best_exit = best_exit.max(action_value(g, u, s, a));
                }
            }
        }
        for s in ec.states() {
            let capped = out[s].min(best_exit);
            out.set(s, capped);
        }
    }
    out
}

/// Bounded value iteration with deflation: both bounds advance by Bellman
/// sweeps every iteration, and on the first iteration plus every
/// `wp_period`-th one the maximal end components of the Minimizer-restricted
/// MDP are recomputed and the upper bound deflated. Same report shape as the
/// widest-path solver; `wp_solves` counts deflation passes and `mec_count`
/// carries the last decomposition's size.
pub fn solve_dfl(g: &StochasticGame, cfg: &WpBviConfig) -> SolverReport {
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
    let mut deflations = 0;
    let mut mec_count = None;
    let mut stopped_by = StopReason::MaxIterations;

    if gap_of(&upper, &lower, cfg.gap_scope, init) <= cfg.epsilon {
        stopped_by = StopReason::Converged;
    } else {
        for i in 1..=cfg.max_iter {
            lower = bellman_update(g, &lower);
            upper = bellman_update(g, &upper);
            if i == 1 || i % cfg.wp_period == 0 {
                let m = restrict_to_mdp(g, minimizer_restriction(g, &lower))
                    .expect("restriction of a valid game is valid");
                let ecs = mec_decomposition(&m);
                upper = deflate(&m, &upper, &ecs);
                mec_count = Some(ecs.mecs().len());
                deflations += 1;
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
        wp_solves: deflations,
        stopped_by,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        mec_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorParams};
    use crate::oracle::{brute_mec, exact_value, DEFAULT_STRATEGY_CAP};
    use crate::player_reduction::AvailabilityMap;

    fn full_view(g: &StochasticGame) -> RestrictedMdp<'_> {
        restrict_to_mdp(g, AvailabilityMap::full(g)).unwrap()
    }

    #[test]
    fn decomposition_matches_brute_force_on_fixed_families() {
        for params in [
            GeneratorParams::fig1(),
            GeneratorParams::fig2(),
            GeneratorParams::fig4(),
            GeneratorParams::manyecs(3),
        ] {
            let g = generate(&params).unwrap();
            let m = full_view(&g);
            assert_eq!(mec_decomposition(&m), brute_mec(&m).unwrap());
        }
    }

    #[test]
    fn decomposition_respects_the_restriction() {
        // With the Minimizer committed to s2, the cycle through s1 is gone
        // and {si, s2} becomes the only nontrivial component.
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let si = g.state_id("si").unwrap();
        let s2 = g.state_id("s2").unwrap();
        let mut f = ValueVector::bottom(g.num_states());
        f = bellman_update(&g, &f);
        f = bellman_update(&g, &f);
        let m = restrict_to_mdp(&g, minimizer_restriction(&g, &f)).unwrap();
        let ecs = mec_decomposition(&m);
        assert_eq!(ecs.mecs().len(), 3);
        assert_eq!(ecs.nontrivial_count(&g), 1);
        let big = &ecs.mecs()[0];
        assert_eq!(big.states().collect::<Vec<_>>(), vec![si, s2]);
        assert_eq!(big.staying_actions(si).unwrap(), &[1]);
        assert_eq!(big.staying_actions(s2).unwrap(), &[0]);
    }

    #[test]
    fn long_chains_decompose_without_recursion() {
        let g = generate(&GeneratorParams::manyecs(500)).unwrap();
        let m = full_view(&g);
        let ecs = mec_decomposition(&m);
        assert_eq!(ecs.mecs().len(), 502);
        assert_eq!(ecs.nontrivial_count(&g), 500);
    }

    #[test]
    fn deflate_zeroes_components_without_exits() {
        let g = generate(&GeneratorParams::fig1()).unwrap();
        let m = full_view(&g);
        let ecs = mec_decomposition(&m);
        let u = ValueVector::top(g.num_states());
        let deflated = deflate(&m, &u, &ecs);
        assert_eq!(deflated[g.state_id("si").unwrap()], 0.0);
        assert_eq!(deflated[g.state_id("s").unwrap()], 0.0);
        // Boundary singletons are exempt from capping.
        assert_eq!(deflated[g.target()], 1.0);
        assert_eq!(deflated[g.sink()], 1.0);
    }

    #[test]
    fn deflate_caps_at_the_best_maximizer_exit() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let si = g.state_id("si").unwrap();
        let s1 = g.state_id("s1").unwrap();
        let s2 = g.state_id("s2").unwrap();
        let mut f = ValueVector::bottom(g.num_states());
        f = bellman_update(&g, &f);
        f = bellman_update(&g, &f);
        let m = restrict_to_mdp(&g, minimizer_restriction(&g, &f)).unwrap();
        let ecs = mec_decomposition(&m);
        let mut u = ValueVector::top(g.num_states());
        u.set(g.sink(), 0.0);
        let deflated = deflate(&m, &u, &ecs);
        // The only Maximizer exit of {si, s2} is s2's coin, worth 0.1.
        assert_eq!(deflated[si], 0.1);
        assert_eq!(deflated[s2], 0.1);
        assert_eq!(deflated[s1], 1.0);
        assert_eq!(deflated[g.target()], 1.0);
        assert_eq!(deflated[g.sink()], 0.0);
    }

    #[test]
    fn deflate_leaves_vectors_below_every_cap_unchanged() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let m = full_view(&g);
        let ecs = mec_decomposition(&m);
        let u = ValueVector::from_vec(vec![0.05, 0.5, 0.05, 1.0, 0.0]).unwrap();
        assert_eq!(deflate(&m, &u, &ecs), u);
    }

    #[test]
    fn deflation_never_cuts_below_the_value() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let oracle = exact_value(&g, DEFAULT_STRATEGY_CAP).unwrap();
        let m = full_view(&g);
        let ecs = mec_decomposition(&m);
        let deflated = deflate(&m, &ValueVector::top(g.num_states()), &ecs);
        assert!(oracle.values.le_within(&deflated, 1e-9));
    }

    #[test]
    fn solver_breaks_the_simple_loop() {
        let g = generate(&GeneratorParams::fig1()).unwrap();
        let cfg = WpBviConfig {
            epsilon: 0.01,
            ..WpBviConfig::default()
        };
        let report = solve_dfl(&g, &cfg);
        assert_eq!(report.stopped_by, StopReason::Converged);
        assert_eq!(report.value_lower, 0.0);
        assert_eq!(report.value_upper, 0.0);
    }

    #[test]
    fn solver_matches_widest_path_on_the_minimizer_trap() {
        let g = generate(&GeneratorParams::fig4()).unwrap();
        let cfg = WpBviConfig {
            epsilon: 0.01,
            ..WpBviConfig::default()
        };
        let report = solve_dfl(&g, &cfg);
        assert_eq!(report.stopped_by, StopReason::Converged);
        assert_eq!(report.value_lower, 0.1);
        assert_eq!(report.value_upper, 0.1);
    }

    #[test]
    fn solver_handles_the_gadget_chain() {
        let g = generate(&GeneratorParams::manyecs(5)).unwrap();
        let report = solve_dfl(&g, &WpBviConfig::default());
        assert_eq!(report.stopped_by, StopReason::Converged);
        assert_eq!(report.value_lower, 0.5);
        assert_eq!(report.value_upper, 0.5);
        assert_eq!(report.mec_count, Some(7));
        assert!(report.wp_solves >= 1);
    }

    #[test]
    fn solver_agrees_with_the_oracle_on_random_games() {
        for seed in [2u64, 19, 37] {
            let g = generate(&GeneratorParams::random(seed)).unwrap();
            let oracle = exact_value(&g, DEFAULT_STRATEGY_CAP).unwrap();
            let report = solve_dfl(&g, &WpBviConfig::default());
            assert_eq!(report.stopped_by, StopReason::Converged, "seed {seed}");
            let v = oracle.values[g.initial()];
            assert!(report.value_lower <= v + 1e-9, "seed {seed}");
            assert!(v <= report.value_upper + 1e-9, "seed {seed}");
            assert!((report.value_lower - v).abs() <= 1e-6 + 1e-9, "seed {seed}");
        }
    }
}
