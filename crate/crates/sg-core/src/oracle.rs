//! Brute-force ground truth for small instances.
//!
//! Everything here is deliberately independent of the iterative solvers: game
//! values come from enumerating positional strategy pairs and solving each
//! induced Markov chain exactly, widest paths from exhaustive simple-path
//! search, and end components from subset enumeration. The solvers are tested
//! against these, never the other way around.

use thiserror::Error;

use crate::bellman::ValueVector;
use crate::mec_deflate::{EndComponent, EndComponentSet};
use crate::model::{GameKind, Player, StateId, StochasticGame};
use crate::player_reduction::RestrictedMdp;
use crate::widest_path::WeightedGraph;

/// Default cap on the number of enumerated strategy pairs.
pub const DEFAULT_STRATEGY_CAP: usize = 4096;

/// Largest graph accepted by [`brute_widest_paths`].
pub const BRUTE_WIDEST_CAP: usize = 12;

/// Largest model accepted by [`brute_mec`].
pub const BRUTE_MEC_CAP: usize = 10;

#[derive(Clone, PartialEq, Error, Debug)]
pub enum OracleError {
    #[error("model is not a Markov chain")]
    NotMarkovChain,
    #[error("strategy space has {size} pairs, exceeding the cap of {cap}")]
    StrategySpace { size: usize, cap: usize },
    #[error("graph has {0} vertices; brute-force widest paths cap at {BRUTE_WIDEST_CAP}")]
    GraphTooLarge(usize),
    #[error("model has {0} states; brute-force MEC enumeration caps at {BRUTE_MEC_CAP}")]
    MdpTooLarge(usize),
    #[error("linear system for reachability is singular")]
    SingularSystem,
    #[error("minimax {minimax} and maximin {maximin} differ at state {state}")]
    MinimaxMismatch {
        state: StateId,
        minimax: f64,
        maximin: f64,
    },
}

/// A positional deterministic strategy: one chosen action per owned state.
#[derive(Clone, PartialEq, Debug)]
pub struct Strategy {
    player: Player,
    choices: Vec<Option<usize>>, // indexed by state id; Some at owned states
}

impl Strategy {
    fn from_choice(g: &StochasticGame, player: Player, choice: &[usize]) -> Self {
        let choices = g
            .state_ids()
            .map(|s| (g.owner(s) == player).then(|| choice[s.index()]))
            .collect();
        Strategy { player, choices }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    /// Index into the state's action list, for states this player owns.
    pub fn action_index(&self, s: StateId) -> Option<usize> {
        self.choices[s.index()]
    }
}

/// Exact solution of a small game.
#[derive(Clone, PartialEq, Debug)]
pub struct OracleResult {
    /// The value function: optimal reachability probability per state.
    pub values: ValueVector,
    /// An optimal positional pair (maximizer, minimizer), when one strategy
    /// per player is optimal at every state simultaneously.
    pub strategies: Option<(Strategy, Strategy)>,
    /// States with a positive value, ascending.
    pub nonzero: Vec<StateId>,
}

/// Exact reachability probabilities of a Markov chain: identify states with
/// no path to the target (probability zero), then solve the remaining linear
/// system by Gaussian elimination with partial pivoting.
pub fn mc_reachability(g: &StochasticGame) -> Result<ValueVector, OracleError> {
    if g.kind() != GameKind::Mc {
        return Err(OracleError::NotMarkovChain);
    }
    let choice = vec![0usize; g.num_states()];
    let values = reach_for_choice(g, &choice)?;
    Ok(ValueVector::from_raw(values))
}

/// Reachability probabilities of the chain induced by fixing action
/// `choice[s]` at every state.
fn reach_for_choice(g: &StochasticGame, choice: &[usize]) -> Result<Vec<f64>, OracleError> {
    let n = g.num_states();
    let target = g.target().index();

    // States that can reach the target at all; the rest have probability 0.
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, &picked) in choice.iter().enumerate() {
        let action = &g.states()[s].actions()[picked];
        for &(succ, _) in action.dist() {
            rev[succ.index()].push(s);
        }
    }
    let mut can = vec![false; n];
    can[target] = true;
    let mut stack = vec![target];
    while let Some(v) = stack.pop() {
        for &src in &rev[v] {
            if !can[src] {
                can[src] = true;
                stack.push(src);
            }
        }
    }

    // Unknowns: states that can reach the target, minus the target itself.
    let unknowns: Vec<usize> = (0..n).filter(|&s| can[s] && s != target).collect();
    let index_of: Vec<Option<usize>> = {
        let mut m = vec![None; n];
        for (i, &s) in unknowns.iter().enumerate() {
            m[s] = Some(i);
        }
        m
    };
    let k = unknowns.len();
    let mut matrix = vec![vec![0.0f64; k + 1]; k]; // augmented [I - A | b]
    for (i, &s) in unknowns.iter().enumerate() {
        matrix[i][i] = 1.0;
        let action = &g.states()[s].actions()[choice[s]];
        for &(succ, p) in action.dist() {
            let succ = succ.index();
            if succ == target {
                matrix[i][k] += p;
            } else if let Some(j) = index_of[succ] {
                matrix[i][j] -= p;
            }
            // successors that cannot reach the target contribute 0
        }
    }
    let solution = solve_linear(&mut matrix)?;

    let mut values = vec![0.0; n];
    values[target] = 1.0;
    for (i, &s) in unknowns.iter().enumerate() {
        values[s] = solution[i].clamp(0.0, 1.0);
    }
    Ok(values)
}

/// Gaussian elimination with partial pivoting on an augmented k x (k+1)
/// matrix; returns the solution vector.
fn solve_linear(matrix: &mut [Vec<f64>]) -> Result<Vec<f64>, OracleError> {
    let k = matrix.len();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| matrix[a][col].abs().total_cmp(&matrix[b][col].abs()))
            .expect("nonempty range");
        if matrix[pivot_row][col].abs() < 1e-12 {
            return Err(OracleError::SingularSystem);
        }
        matrix.swap(col, pivot_row);
        let (pivot, rest) = matrix[col..].split_first_mut().expect("col < k");
        for row in rest {
            let factor = row[col] / pivot[col];
            if factor == 0.0 {
                continue;
            }
            for (cell, &p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *cell -= factor * p;
            }
        }
    }
    let mut x = vec![0.0f64; k];
    for row in (0..k).rev() {
        let mut acc = matrix[row][k];
        for col in row + 1..k {
            acc -= matrix[row][col] * x[col];
        }
        x[row] = acc / matrix[row][row];
    }
    Ok(x)
}

/// Exact game values by enumerating positional strategy pairs.
///
/// For each Maximizer strategy the per-state minimum over all Minimizer
/// replies is computed from an exact chain solve; the value is the per-state
/// maximum of those minima. The flipped order (maximin) is computed from the
/// same table and must agree within 1e-9.
pub fn exact_value(g: &StochasticGame, size_cap: usize) -> Result<OracleResult, OracleError> {
    let n = g.num_states();
    let pairs = g
        .states()
        .iter()
        .map(|st| st.actions().len())
        .try_fold(1usize, |acc, k| acc.checked_mul(k))
        .unwrap_or(usize::MAX);
    if pairs > size_cap {
        return Err(OracleError::StrategySpace {
            size: pairs,
            cap: size_cap,
        });
    }

    let max_states: Vec<usize> = (0..n)
        .filter(|&s| g.owner(StateId(s)) == Player::Max)
        .collect();
    let min_states: Vec<usize> = (0..n)
        .filter(|&s| g.owner(StateId(s)) == Player::Min)
        .collect();
    let radix = |states: &[usize]| {
        states
            .iter()
            .map(|&s| g.states()[s].actions().len())
            .collect::<Vec<_>>()
    };
    let tau_radices = radix(&max_states);
    let sigma_radices = radix(&min_states);
    let tau_count: usize = tau_radices.iter().product();
    let sigma_count: usize = sigma_radices.iter().product();

    // Evaluate every pair once: table[tau][sigma] = per-state reachability.
    let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(tau_count);
    let mut choice = vec![0usize; n];
    for t in 0..tau_count {
        let tau = nth_multi_index(&tau_radices, t);
        for (i, &s) in max_states.iter().enumerate() {
            choice[s] = tau[i];
        }
        let mut row = Vec::with_capacity(sigma_count);
        for j in 0..sigma_count {
            let sigma = nth_multi_index(&sigma_radices, j);
            for (i, &s) in min_states.iter().enumerate() {
                choice[s] = sigma[i];
            }
            row.push(reach_for_choice(g, &choice)?);
        }
        table.push(row);
    }

    // minimax: per tau the pointwise min over sigma, then pointwise max.
    let mut minimax = vec![0.0f64; n];
    let mut best_tau: Option<usize> = None;
    let mut per_tau_min: Vec<Vec<f64>> = Vec::with_capacity(tau_count);
    for row in &table {
        let mut lo = vec![f64::INFINITY; n];
        for vals in row {
            for s in 0..n {
                lo[s] = lo[s].min(vals[s]);
            }
        }
        per_tau_min.push(lo);
    }
    for s in 0..n {
        minimax[s] = per_tau_min.iter().map(|lo| lo[s]).fold(0.0, f64::max);
    }
    for (t, lo) in per_tau_min.iter().enumerate() {
        if (0..n).all(|s| (lo[s] - minimax[s]).abs() <= 1e-9) {
            best_tau = Some(t);
            break;
        }
    }

    // maximin: per sigma the pointwise max over tau, then pointwise min.
    let mut maximin = vec![1.0f64; n];
    let mut per_sigma_max: Vec<Vec<f64>> = vec![vec![0.0; n]; sigma_count];
    for row in &table {
        for (j, vals) in row.iter().enumerate() {
            for s in 0..n {
                per_sigma_max[j][s] = per_sigma_max[j][s].max(vals[s]);
            }
        }
    }
    for s in 0..n {
        maximin[s] = per_sigma_max.iter().map(|hi| hi[s]).fold(1.0, f64::min);
    }
    let mut best_sigma: Option<usize> = None;
    for (j, hi) in per_sigma_max.iter().enumerate() {
        if (0..n).all(|s| (hi[s] - maximin[s]).abs() <= 1e-9) {
            best_sigma = Some(j);
            break;
        }
    }

    for s in 0..n {
        if (minimax[s] - maximin[s]).abs() > 1e-9 {
            return Err(OracleError::MinimaxMismatch {
                state: StateId(s),
                minimax: minimax[s],
                maximin: maximin[s],
            });
        }
    }

    let strategies = match (best_tau, best_sigma) {
        (Some(t), Some(j)) => {
            let tau_choice = nth_multi_index(&tau_radices, t);
            let sigma_choice = nth_multi_index(&sigma_radices, j);
            let mut full = vec![0usize; n];
            for (i, &s) in max_states.iter().enumerate() {
                full[s] = tau_choice[i];
            }
            let tau = Strategy::from_choice(g, Player::Max, &full);
            for (i, &s) in min_states.iter().enumerate() {
                full[s] = sigma_choice[i];
            }
            let sigma = Strategy::from_choice(g, Player::Min, &full);
            Some((tau, sigma))
        }
        _ => None,
    };

    let nonzero = (0..n).filter(|&s| minimax[s] > 0.0).map(StateId).collect();
    Ok(OracleResult {
        values: ValueVector::from_raw(minimax),
        strategies,
        nonzero,
    })
}

/// The `idx`-th assignment in mixed-radix order, least-significant digit
/// first: digit `k` ranges over `0..radices[k]`.
fn nth_multi_index(radices: &[usize], idx: usize) -> Vec<usize> {
    let mut digits = Vec::with_capacity(radices.len());
    let mut rest = idx;
    for &r in radices {
        digits.push(rest % r);
        rest /= r;
    }
    digits
}

/// Widest-path widths by exhaustive search over simple paths to the target.
pub fn brute_widest_paths(w: &WeightedGraph) -> Result<ValueVector, OracleError> {
    let n = w.num_vertices();
    if n > BRUTE_WIDEST_CAP {
        return Err(OracleError::GraphTooLarge(n));
    }
    let target = w.target().index();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in w.edges() {
        adj[e.from.index()].push((e.to.index(), e.weight));
    }

    fn dfs(
        v: usize,
        min_so_far: f64,
        visited: u32,
        target: usize,
        adj: &[Vec<(usize, f64)>],
        best: &mut f64,
    ) {
        for &(to, weight) in &adj[v] {
            let width = min_so_far.min(weight);
            if width <= *best {
                continue; // cannot strictly improve along this branch
            }
            if to == target {
                *best = width;
            } else if visited & (1 << to) == 0 {
                dfs(to, width, visited | (1 << to), target, adj, best);
            }
        }
    }

    let mut widths = vec![0.0f64; n];
    widths[target] = 1.0; // empty path
    for (v, width) in widths.iter_mut().enumerate() {
        if v == target {
            continue;
        }
        let mut best = 0.0;
        dfs(v, 1.0, 1 << v, target, &adj, &mut best);
        *width = best;
    }
    Ok(ValueVector::from_raw(widths))
}

/// Maximal end components by subset enumeration: keep subsets that are closed
/// (every retained action's successors stay inside) and strongly connected,
/// then drop those strictly contained in another.
pub fn brute_mec(m: &RestrictedMdp<'_>) -> Result<EndComponentSet, OracleError> {
    let g = m.game();
    let n = g.num_states();
    if n > BRUTE_MEC_CAP {
        return Err(OracleError::MdpTooLarge(n));
    }

    // Each candidate: the member bitmask plus per-state staying actions.
    type Staying = Vec<(StateId, Vec<usize>)>;
    let mut candidates: Vec<(u32, Staying)> = Vec::new();
    'subsets: for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&s| mask & (1 << s) != 0).collect();
        let mut staying: Staying = Vec::with_capacity(members.len());
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &s in &members {
            let state = StateId(s);
            let mut stays = Vec::new();
            for &a in m.retained(state) {
                let action = &g.states()[s].actions()[a];
                let inside = action
                    .dist()
                    .iter()
                    .all(|&(succ, _)| mask & (1 << succ.index()) != 0);
                if inside {
                    stays.push(a);
                    for &(succ, _) in action.dist() {
                        edges[s].push(succ.index());
                    }
                }
            }
            if stays.is_empty() {
                continue 'subsets;
            }
            staying.push((state, stays));
        }
        if !strongly_connected(&members, &edges) {
            continue;
        }
        candidates.push((mask, staying));
    }

    let maximal: Vec<EndComponent> = candidates
        .iter()
        .filter(|(mask, _)| {
            !candidates
                .iter()
                .any(|(other, _)| other != mask && other & mask == *mask)
        })
        .map(|(_, staying)| EndComponent::from_members(staying.clone()))
        .collect();
    Ok(EndComponentSet::from_mecs(maximal))
}

/// Is the induced subgraph on `members` strongly connected? Singletons count
/// only via an explicit self-loop edge, which closure has already ensured.
fn strongly_connected(members: &[usize], edges: &[Vec<usize>]) -> bool {
    if members.len() == 1 {
        // closure guaranteed at least one staying action, i.e. a self-loop
        return true;
    }
    let inside = |v: usize| members.contains(&v);
    let reach = |start: usize, forward: bool| -> usize {
        let mut seen = vec![false; edges.len()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in members {
                let connected = if forward {
                    edges[v].contains(&u)
                } else {
                    edges[u].contains(&v)
                };
                if connected && inside(u) && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count
    };
    let start = members[0];
    reach(start, true) == members.len() && reach(start, false) == members.len()
}
