//! Multi-agent safety policy iteration.
//!
//! Each iteration evaluates the joint safety policy exactly and then lets the
//! agents, one after another in a (possibly shuffled) order, switch to the
//! action maximising the safety value of the successor state given the choices
//! already made by their predecessors. Per state this costs `sum_i C_i`
//! successor lookups instead of `prod_i C_i` for a joint argmax. Values never
//! decrease from one iteration to the next, and a sweep with no changes is a
//! Nash point of the safety value function.

use rayon::prelude::*;

use crate::dual::objective_value;
use crate::game::{
    evaluate_policy, Game, JointActionSpace, JointPolicy, StateSet, ValueKind, ValueTable,
};
use crate::{AgentOrder, OrderSource};

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyIterationConfig {
    pub max_outer_iters: usize,
    pub agent_order: AgentOrder,
    pub seed: u64,
}

impl Default for SafetyIterationConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 1000,
            agent_order: AgentOrder::SeededShuffle,
            seed: 0,
        }
    }
}

/// Outcome of one agent-by-agent sweep over all states.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetySweep {
    pub policy: JointPolicy,
    /// Number of `(state, agent)` entries that changed.
    pub changed: usize,
    /// Number of successor values looked up.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SafetyTraceRow {
    pub iteration: usize,
    /// `max_x |V_h^new(x) - V_h^old(x)|`.
    pub residual: f64,
    /// `min_x (V_h^new(x) - V_h^old(x))`; non-negative for a monotone step.
    pub min_change: f64,
    pub changed: usize,
    pub cis_size: usize,
    /// Two-fold objective with the safety policy also acting as task policy.
    pub objective: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct SafetyIterationResult {
    pub policy: JointPolicy,
    pub vh: ValueTable,
    pub cis: StateSet,
    pub trace: Vec<SafetyTraceRow>,
    pub converged: bool,
}

impl SafetyIterationResult {
    pub fn sweeps(&self) -> usize {
        self.trace.len()
    }
}

/// Picks the argmax of `score` over `0..n_actions`, keeping `incumbent` when it
/// attains the maximum and otherwise taking the smallest maximiser.
pub(crate) fn argmax_keep_incumbent(
    candidates: impl Iterator<Item = (usize, f64)> + Clone,
    incumbent: usize,
) -> Option<usize> {
    let best = candidates
        .clone()
        .map(|(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut first = None;
    for (u, v) in candidates {
        if v == best {
            if u == incumbent {
                return Some(u);
            }
            first.get_or_insert(u);
        }
    }
    first
}

fn improve_state(
    game: &Game,
    space: &JointActionSpace,
    vh: &ValueTable,
    state: usize,
    row: &[usize],
    order: &[usize],
) -> (Vec<usize>, usize) {
    let succ = game.successors(state);
    let mut actions = row.to_vec();
    let mut joint = space.encode(&actions);
    let mut evaluations = 0;
    for &agent in order {
        let candidates =
            (0..space.radix(agent)).map(|u| (u, vh.get(succ[space.substitute(joint, agent, u)])));
        evaluations += space.radix(agent);
        let pick = argmax_keep_incumbent(candidates, actions[agent])
            .expect("every agent has at least one action");
        actions[agent] = pick;
        joint = space.substitute(joint, agent, pick);
    }
    (actions, evaluations)
}

/// One agent-by-agent improvement sweep against the fixed table `vh`.
///
/// `vh` must be the safety value of `policy`. States are independent within a
/// sweep and are processed in parallel; the result equals sequential execution.
pub fn safety_improvement_sweep(
    game: &Game,
    policy: &JointPolicy,
    vh: &ValueTable,
    order: &[usize],
) -> SafetySweep {
    let space = game.joint_space();
    let rows: Vec<(Vec<usize>, usize)> = (0..game.n_states)
        .into_par_iter()
        .map(|x| improve_state(game, &space, vh, x, policy.row(x), order))
        .collect();
    let mut next = policy.clone();
    let mut evaluations = 0;
    for (x, (row, evals)) in rows.iter().enumerate() {
        next.set_row(x, row);
        evaluations += evals;
    }
    SafetySweep {
        changed: next.count_differences(policy),
        policy: next,
        evaluations,
    }
}

/// Runs safety policy iteration from `initial` until a sweep changes nothing
/// or `max_outer_iters` sweeps have been made.
pub fn run_safety_iteration(
    game: &Game,
    initial: &JointPolicy,
    config: &SafetyIterationConfig,
) -> SafetyIterationResult {
    let mut orders = OrderSource::new(config.agent_order, config.seed);
    let mut policy = initial.clone();
    let mut vh = evaluate_policy(game, &policy, ValueKind::Safety);
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_outer_iters.max(1) {
        let order = orders.next_order(game.n_agents);
        let sweep = safety_improvement_sweep(game, &policy, &vh, &order);
        let next_vh = evaluate_policy(game, &sweep.policy, ValueKind::Safety);
        let cis = next_vh.superlevel_set();
        let v = evaluate_policy(game, &sweep.policy, ValueKind::Reward);
        trace.push(SafetyTraceRow {
            iteration,
            residual: next_vh.sup_distance(&vh),
            min_change: next_vh.min_change_from(&vh),
            changed: sweep.changed,
            cis_size: cis.len(),
            objective: objective_value(game, &v, &next_vh, &cis),
            evaluations: sweep.evaluations,
        });
        policy = sweep.policy;
        vh = next_vh;
        if sweep.changed == 0 {
            converged = true;
            break;
        }
    }

    SafetyIterationResult {
        cis: vh.superlevel_set(),
        policy,
        vh,
        trace,
        converged,
    }
}
