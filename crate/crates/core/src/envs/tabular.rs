//! Exact finite-MDP extraction and dynamic-programming oracles.
//!
//! Gridworld tasks are tiny and deterministic, so we can enumerate them into
//! an explicit transition tensor and evaluate policies by backward induction
//! instead of sampling. These values anchor the Monte Carlo estimators and
//! the gradient oracles.

use std::collections::VecDeque;

use super::gridworld::{Action, Cell, GridworldSpec};

/// Explicit finite MDP: `transitions[s][a][s']`, `rewards[s][a]`.
///
/// Invariant: every `transitions[s][a]` row sums to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
    /// Cell behind each state id, for mapping policies back to the board.
    pub state_cells: Vec<Cell>,
    /// State id of the absorbing goal.
    pub goal_state: usize,
}

impl TabularMdp {
    /// Checks the row-stochastic invariant.
    pub fn rows_are_stochastic(&self) -> bool {
        self.transitions.iter().all(|per_action| {
            per_action
                .iter()
                .all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12)
        })
    }

    pub fn state_of(&self, cell: Cell) -> Option<usize> {
        self.state_cells.iter().position(|&c| c == cell)
    }
}

/// Enumerates the reachable cells of a gridworld into an exact MDP.
///
/// States are the cells reachable from the start (walls are skipped by
/// construction); the goal is absorbing with zero reward. The finite horizon
/// carries the episode step budget, so no step-count state augmentation is
/// needed for finite-horizon evaluation.
pub fn to_tabular(spec: &GridworldSpec, gamma: f64) -> TabularMdp {
    assert!((0.0..1.0).contains(&gamma), "gamma must lie in [0, 1)");
    // Reachable-cell enumeration in BFS order keeps state ids deterministic.
    let mut order: Vec<Cell> = Vec::new();
    let mut seen = vec![false; spec.n_cells()];
    let mut queue = VecDeque::new();
    seen[spec.cell_index(spec.start)] = true;
    queue.push_back(spec.start);
    while let Some(cell) = queue.pop_front() {
        order.push(cell);
        if cell == spec.goal {
            continue; // absorbing: outgoing moves are not explored
        }
        for action in Action::ALL {
            let next = spec.apply_move(cell, action);
            let idx = spec.cell_index(next);
            if !seen[idx] {
                seen[idx] = true;
                queue.push_back(next);
            }
        }
    }
    let n_states = order.len();
    let index_of = |cell: Cell| order.iter().position(|&c| c == cell).unwrap();
    let goal_state = index_of(spec.goal);

    let mut transitions = vec![vec![vec![0.0; n_states]; Action::COUNT]; n_states];
    let mut rewards = vec![vec![0.0; Action::COUNT]; n_states];
    for (s, &cell) in order.iter().enumerate() {
        for action in Action::ALL {
            let a = action.index();
            if s == goal_state {
                transitions[s][a][s] = 1.0;
                rewards[s][a] = 0.0;
                continue;
            }
            let next = spec.apply_move(cell, action);
            let ns = index_of(next);
            transitions[s][a][ns] = 1.0;
            rewards[s][a] = if next == spec.goal {
                spec.goal_reward
            } else {
                spec.step_reward
            };
        }
    }
    let mut initial_dist = vec![0.0; n_states];
    initial_dist[index_of(spec.start)] = 1.0;

    TabularMdp {
        n_states,
        n_actions: Action::COUNT,
        transitions,
        rewards,
        initial_dist,
        gamma,
        horizon: spec.max_steps,
        state_cells: order,
        goal_state,
    }
}

/// The uniform-random policy table for an MDP.
pub fn uniform_policy(mdp: &TabularMdp) -> Vec<Vec<f64>> {
    vec![vec![1.0 / mdp.n_actions as f64; mdp.n_actions]; mdp.n_states]
}

/// Finite-horizon expected discounted return of a stationary policy, by
/// backward induction from the horizon. This is the brute-force return
/// oracle the Monte Carlo estimators are checked against.
pub fn exact_return(mdp: &TabularMdp, policy: &[Vec<f64>], horizon: usize) -> f64 {
    assert_eq!(policy.len(), mdp.n_states, "policy row count");
    for row in policy {
        debug_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "policy row sum");
    }
    let mut value_next = vec![0.0; mdp.n_states];
    let mut value = vec![0.0; mdp.n_states];
    for _ in 0..horizon {
        for s in 0..mdp.n_states {
            let mut v = 0.0;
            for a in 0..mdp.n_actions {
                let pa = policy[s][a];
                if pa == 0.0 {
                    continue;
                }
                let mut q = mdp.rewards[s][a];
                for (ns, &p) in mdp.transitions[s][a].iter().enumerate() {
                    if p > 0.0 {
                        q += mdp.gamma * p * value_next[ns];
                    }
                }
                v += pa * q;
            }
            value[s] = v;
        }
        std::mem::swap(&mut value, &mut value_next);
    }
    mdp.initial_dist
        .iter()
        .zip(&value_next)
        .map(|(&d, &v)| d * v)
        .sum()
}

/// Probability that a stationary policy reaches the goal within the horizon.
pub fn success_probability(mdp: &TabularMdp, policy: &[Vec<f64>], horizon: usize) -> f64 {
    let mut dist = mdp.initial_dist.clone();
    let mut next = vec![0.0; mdp.n_states];
    let mut reached = dist[mdp.goal_state];
    for _ in 0..horizon {
        next.iter_mut().for_each(|d| *d = 0.0);
        for s in 0..mdp.n_states {
            if s == mdp.goal_state || dist[s] == 0.0 {
                continue;
            }
            for a in 0..mdp.n_actions {
                let pa = policy[s][a];
                if pa == 0.0 {
                    continue;
                }
                for (ns, &p) in mdp.transitions[s][a].iter().enumerate() {
                    if p > 0.0 {
                        next[ns] += dist[s] * pa * p;
                    }
                }
            }
        }
        reached += next[mdp.goal_state];
        next[mdp.goal_state] = 0.0;
        std::mem::swap(&mut dist, &mut next);
    }
    reached
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::gridworld::{generate_task, SuiteParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn open_spec(width: usize, height: usize, goal: Cell) -> GridworldSpec {
        GridworldSpec::new(
            "t",
            width,
            height,
            BTreeSet::new(),
            Cell::new(0, 0),
            goal,
            -0.001,
            1.0,
            15,
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_is_one_hot_everywhere() {
        let mdp = to_tabular(&open_spec(2, 2, Cell::new(1, 1)), 0.99);
        assert_eq!(mdp.n_states, 4);
        assert_eq!(mdp.n_actions, 4);
        assert!(mdp.rows_are_stochastic());
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let ones = mdp.transitions[s][a].iter().filter(|&&p| p == 1.0).count();
                assert_eq!(ones, 1);
            }
        }
    }

    #[test]
    fn walls_are_excluded_from_the_state_space() {
        let mut walls = BTreeSet::new();
        walls.insert(Cell::new(1, 1));
        let spec = GridworldSpec::new(
            "w",
            3,
            3,
            walls,
            Cell::new(0, 0),
            Cell::new(2, 2),
            -0.001,
            1.0,
            15,
        )
        .unwrap();
        let mdp = to_tabular(&spec, 0.99);
        assert_eq!(mdp.n_states, 8);
        assert!(mdp.state_of(Cell::new(1, 1)).is_none());
    }

    #[test]
    fn zero_horizon_returns_zero() {
        let mdp = to_tabular(&open_spec(3, 3, Cell::new(2, 2)), 0.99);
        let policy = uniform_policy(&mdp);
        assert_eq!(exact_return(&mdp, &policy, 0), 0.0);
    }

    #[test]
    fn shortest_path_policy_matches_closed_form() {
        let params = SuiteParams::default();
        let gamma: f64 = 0.99;
        for d in [1usize, 3, 6, 12] {
            let spec = generate_task(d, 0, &params).unwrap();
            let mdp = to_tabular(&spec, gamma);
            // Greedy-on-BFS-distance policy walks a shortest path.
            let mut policy = vec![vec![0.0; 4]; mdp.n_states];
            for (s, &cell) in mdp.state_cells.iter().enumerate() {
                if s == mdp.goal_state {
                    policy[s][0] = 1.0;
                    continue;
                }
                let dist_from = |c: Cell| {
                    let probe = GridworldSpec {
                        start: c,
                        ..spec.clone()
                    };
                    crate::envs::shortest_path_len(&probe).unwrap()
                };
                let here = dist_from(cell);
                let best = Action::ALL
                    .into_iter()
                    .find(|&a| {
                        let next = spec.apply_move(cell, a);
                        next != cell && (next == spec.goal || dist_from(next) + 1 == here)
                    })
                    .unwrap();
                policy[s][best.index()] = 1.0;
            }
            let value = exact_return(&mdp, &policy, spec.max_steps);
            let mut expected = gamma.powi(d as i32 - 1);
            for t in 0..d - 1 {
                expected += gamma.powi(t as i32) * spec.step_reward;
            }
            assert!(
                (value - expected).abs() < 1e-12,
                "d={d}: {value} vs {expected}"
            );
        }
    }

    #[test]
    fn monte_carlo_matches_exact_return_on_random_board() {
        // Random 5x5 board, random fixed policy: MC mean within 3 sigma of DP.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = open_spec(5, 5, Cell::new(4, 3));
        let mdp = to_tabular(&spec, 0.99);
        let mut policy = vec![vec![0.0; 4]; mdp.n_states];
        for row in policy.iter_mut() {
            let mut total = 0.0;
            for p in row.iter_mut() {
                *p = rng.gen_range(0.05..1.0);
                total += *p;
            }
            for p in row.iter_mut() {
                *p /= total;
            }
        }
        let exact = exact_return(&mdp, &policy, spec.max_steps);

        let episodes = 10_000;
        let mut returns = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut state = spec.start;
            let mut value = 0.0;
            let mut discount = 1.0;
            for step_index in 0..spec.max_steps {
                let s = mdp.state_of(state).unwrap();
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut action = Action::Right;
                for a in Action::ALL {
                    acc += policy[s][a.index()];
                    if u < acc {
                        action = a;
                        break;
                    }
                }
                let out = crate::envs::step(&spec, state, action, step_index);
                value += discount * out.reward;
                discount *= 0.99;
                state = out.next;
                if out.terminated || out.truncated {
                    break;
                }
            }
            returns.push(value);
        }
        let mean: f64 = returns.iter().sum::<f64>() / episodes as f64;
        let var: f64 =
            returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (episodes - 1) as f64;
        let sigma = (var / episodes as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * sigma.max(1e-9),
            "mean {mean} exact {exact} sigma {sigma}"
        );
    }

    #[test]
    fn single_step_random_success_is_one_quarter() {
        let params = SuiteParams::default();
        let spec = generate_task(1, 0, &params).unwrap();
        let mdp = to_tabular(&spec, 0.99);
        let policy = uniform_policy(&mdp);
        let p = success_probability(&mdp, &policy, 1);
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn success_probability_increases_with_horizon() {
        let params = SuiteParams::default();
        let spec = generate_task(3, 0, &params).unwrap();
        let mdp = to_tabular(&spec, 0.99);
        let policy = uniform_policy(&mdp);
        let p5 = success_probability(&mdp, &policy, 5);
        let p15 = success_probability(&mdp, &policy, 15);
        assert!(p15 > p5);
        assert!(p15 <= 1.0);
    }
}
