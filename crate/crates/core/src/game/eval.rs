//! Exact evaluation of deterministic policies.
//!
//! Under a deterministic policy every trajectory of a finite game is a prefix
//! followed by a cycle repeated forever, so both value functions have closed
//! forms over a single prefix+cycle pass. The safety value is the infimum of
//! `gamma_h^(t+1) h(x_t)`, which is `0` when every visited state satisfies
//! `h >= 0` and is attained within the first pass otherwise.
//!
//! All values are produced through the same backward recursion
//! (`w <- gamma_h * min(h, w)` and `s <- r + gamma * s`) anchored at the
//! cycle, so evaluating one start state and evaluating the whole table give
//! bit-identical results.

use super::{Game, JointPolicy, ValueKind, ValueTable};
use crate::{Error, Result};

/// The eventually periodic trajectory from one start state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
    /// Minimum of `h` over prefix and cycle.
    pub min_h: f64,
}

impl TrajectorySummary {
    /// All states visited by the infinite trajectory.
    pub fn visited(&self) -> impl Iterator<Item = usize> + '_ {
        self.prefix.iter().chain(&self.cycle).copied()
    }
}

pub fn rollout(game: &Game, policy: &JointPolicy, start: usize) -> TrajectorySummary {
    assert!(start < game.n_states, "start state {start} out of range");
    let mut seen_at = vec![usize::MAX; game.n_states];
    let mut path = Vec::new();
    let mut x = start;
    while seen_at[x] == usize::MAX {
        seen_at[x] = path.len();
        path.push(x);
        x = policy.successor(game, x);
    }
    let cycle = path.split_off(seen_at[x]);
    let min_h = path
        .iter()
        .chain(&cycle)
        .map(|&s| game.h(s))
        .fold(f64::INFINITY, f64::min);
    TrajectorySummary {
        prefix: path,
        cycle,
        min_h,
    }
}

/// Safety value at `cycle[0]`, where `cycle` lists the states in visiting order.
fn safety_on_cycle(game: &Game, cycle: &[usize]) -> f64 {
    cycle
        .iter()
        .rev()
        .fold(0.0, |w, &c| game.gamma_h * game.h(c).min(w))
}

fn reward_on_cycle(game: &Game, policy: &JointPolicy, cycle: &[usize]) -> f64 {
    let partial = cycle.iter().rev().fold(0.0, |s, &c| {
        game.reward_at(c, policy.joint_index(game, c)) + game.gamma * s
    });
    partial / (1.0 - game.gamma.powi(cycle.len() as i32))
}

#[inline]
fn backup(game: &Game, policy: &JointPolicy, kind: ValueKind, state: usize, next: f64) -> f64 {
    match kind {
        ValueKind::Safety => game.gamma_h * game.h(state).min(next),
        ValueKind::Reward => {
            game.reward_at(state, policy.joint_index(game, state)) + game.gamma * next
        }
    }
}

fn value_on_cycle(game: &Game, policy: &JointPolicy, kind: ValueKind, cycle: &[usize]) -> f64 {
    match kind {
        ValueKind::Safety => safety_on_cycle(game, cycle),
        ValueKind::Reward => reward_on_cycle(game, policy, cycle),
    }
}

fn exact_value(game: &Game, policy: &JointPolicy, kind: ValueKind, start: usize) -> f64 {
    let traj = rollout(game, policy, start);
    let anchor = value_on_cycle(game, policy, kind, &traj.cycle);
    traj.prefix
        .iter()
        .rev()
        .fold(anchor, |next, &x| backup(game, policy, kind, x, next))
}

/// `V_h(start)`: the infimum over the trajectory of `gamma_h^(t+1) h(x_t)`.
pub fn exact_safety_value(game: &Game, policy: &JointPolicy, start: usize) -> f64 {
    exact_value(game, policy, ValueKind::Safety, start)
}

/// `V(start)`: discounted return over the prefix plus the geometric cycle sum.
pub fn exact_reward_value(game: &Game, policy: &JointPolicy, start: usize) -> f64 {
    exact_value(game, policy, ValueKind::Reward, start)
}

/// Evaluates every state at once, sharing work across common trajectory suffixes.
pub fn evaluate_policy(game: &Game, policy: &JointPolicy, kind: ValueKind) -> ValueTable {
    let n = game.n_states;
    let succ: Vec<usize> = (0..n).map(|x| policy.successor(game, x)).collect();
    let mut value: Vec<Option<f64>> = vec![None; n];
    let mut on_path = vec![usize::MAX; n];
    let mut path = Vec::new();

    for start in 0..n {
        if value[start].is_some() {
            continue;
        }
        path.clear();
        let mut x = start;
        while value[x].is_none() && on_path[x] == usize::MAX {
            on_path[x] = path.len();
            path.push(x);
            x = succ[x];
        }
        let mut tail_len = path.len();
        if value[x].is_none() {
            // Closed a new cycle: path[on_path[x]..] in visiting order.
            let pos = on_path[x];
            let cycle = &path[pos..];
            let mut rotated = Vec::with_capacity(cycle.len());
            for k in 0..cycle.len() {
                rotated.clear();
                rotated.extend_from_slice(&cycle[k..]);
                rotated.extend_from_slice(&cycle[..k]);
                value[cycle[k]] = Some(value_on_cycle(game, policy, kind, &rotated));
            }
            tail_len = pos;
        }
        for &y in path[..tail_len].iter().rev() {
            let next = value[succ[y]].expect("successor evaluated first");
            value[y] = Some(backup(game, policy, kind, y, next));
        }
        for &y in &path {
            on_path[y] = usize::MAX;
        }
    }

    ValueTable::new(
        kind,
        value
            .into_iter()
            .map(|v| v.expect("every state evaluated"))
            .collect(),
    )
}

/// Actions of `agent` at `state` whose successor stays in `{V_h >= 0}`, given
/// the other agents' actions in `joint` (the `agent` entry is ignored).
pub fn invariant_action_set(
    game: &Game,
    vh: &ValueTable,
    state: usize,
    agent: usize,
    joint: &[usize],
) -> Result<Vec<usize>> {
    let mut actions = joint.to_vec();
    let feasible: Vec<usize> = (0..game.actions_per_agent[agent])
        .filter(|&u| {
            actions[agent] = u;
            let j = encode(game, &actions);
            vh.get(game.next_state(state, j)) >= 0.0
        })
        .collect();
    if feasible.is_empty() {
        Err(Error::EmptyFeasibleSet { state, agent })
    } else {
        Ok(feasible)
    }
}

fn encode(game: &Game, actions: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (a, &c) in actions.iter().zip(&game.actions_per_agent) {
        idx += a * stride;
        stride *= c;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_agent(transition: Vec<usize>, reward: Vec<f64>, h: Vec<f64>, gamma: f64) -> Game {
        let n = h.len();
        Game::new(
            vec![1],
            n,
            transition,
            reward,
            h,
            gamma,
            0.9,
            Game::uniform_dist(n),
        )
        .unwrap()
    }

    fn trap2() -> Game {
        crate::envs::build_trap2()
    }

    #[test]
    fn rollout_shapes() {
        let g = single_agent(vec![0], vec![0.0], vec![1.0], 0.9);
        let p = JointPolicy::zeros(&g);
        let t = rollout(&g, &p, 0);
        assert!(t.prefix.is_empty());
        assert_eq!(t.cycle, vec![0]);

        let g = single_agent(vec![1, 1], vec![0.0; 2], vec![1.0, 2.0], 0.9);
        let t = rollout(&g, &JointPolicy::zeros(&g), 0);
        assert_eq!((t.prefix, t.cycle, t.min_h), (vec![0], vec![1], 1.0));

        let g = single_agent(vec![1, 2, 0], vec![0.0; 3], vec![1.0; 3], 0.9);
        let t = rollout(&g, &JointPolicy::zeros(&g), 0);
        assert!(t.prefix.is_empty());
        assert_eq!(t.cycle, vec![0, 1, 2]);
    }

    #[test]
    fn safety_values_of_small_chains() {
        let g = single_agent(vec![0], vec![0.0], vec![1.0], 0.9);
        assert_eq!(exact_safety_value(&g, &JointPolicy::zeros(&g), 0), 0.0);

        let g = single_agent(vec![0], vec![0.0], vec![-1.0], 0.9);
        assert!((exact_safety_value(&g, &JointPolicy::zeros(&g), 0) + 0.9).abs() < 1e-15);

        let g = single_agent(vec![1, 1], vec![0.0; 2], vec![1.0, -1.0], 0.9);
        let p = JointPolicy::zeros(&g);
        assert!((exact_safety_value(&g, &p, 0) + 0.81).abs() < 1e-15);
        let t = evaluate_policy(&g, &p, ValueKind::Safety);
        assert!((t[0] + 0.81).abs() < 1e-15 && (t[1] + 0.9).abs() < 1e-15);
    }

    #[test]
    fn reward_values_of_small_chains() {
        let g = single_agent(vec![0], vec![1.0], vec![1.0], 0.9);
        assert!((exact_reward_value(&g, &JointPolicy::zeros(&g), 0) - 10.0).abs() < 1e-12);

        let g = single_agent(vec![0], vec![0.0], vec![1.0], 0.9);
        assert_eq!(exact_reward_value(&g, &JointPolicy::zeros(&g), 0), 0.0);

        let g = single_agent(vec![1, 1], vec![1.0, 0.0], vec![1.0, 1.0], 0.5);
        let t = evaluate_policy(&g, &JointPolicy::zeros(&g), ValueKind::Reward);
        assert_eq!(t.values, vec![1.0, 0.0]);
    }

    #[test]
    fn invariant_sets_on_trap2() {
        let g = trap2();
        let vh = evaluate_policy(&g, &JointPolicy::zeros(&g), ValueKind::Safety);
        assert_eq!(vh.values, vec![0.0, -0.9]);
        // Agent 0 at s0 with agent 1 playing 0: only action 0 keeps s0.
        assert_eq!(
            invariant_action_set(&g, &vh, 0, 0, &[0, 0]).unwrap(),
            vec![0]
        );
        // Partner playing 1 sends every action to s1.
        assert!(matches!(
            invariant_action_set(&g, &vh, 0, 0, &[0, 1]),
            Err(Error::EmptyFeasibleSet { state: 0, agent: 0 })
        ));
        // Everything safe gives the full set.
        let safe = ValueTable::new(ValueKind::Safety, vec![0.0, 0.0]);
        assert_eq!(
            invariant_action_set(&g, &safe, 1, 1, &[1, 0]).unwrap(),
            vec![0, 1]
        );
    }
}
