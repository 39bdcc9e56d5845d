//! Multi-agent dual policy iteration.
//!
//! Two policy threads run side by side. The safety thread is plain safety
//! policy iteration and defines the current CIS `{x : V_h(x) >= 0}`. The task
//! thread copies the safety policy at every state outside the previous CIS
//! and, inside the new CIS, lets the agents improve `r + gamma * V` one after
//! another, each restricted to its invariant action set given the others'
//! current choices. Restricted that way, trajectories that start in the CIS
//! never leave it.

use rayon::prelude::*;

use crate::game::{
    evaluate_policy, invariant_action_set, Game, JointActionSpace, JointPolicy, StateSet,
    ValueKind, ValueTable,
};
use crate::safety::{argmax_keep_incumbent, safety_improvement_sweep};
use crate::{AgentOrder, OrderSource};

/// Salt separating the task-sweep order stream from the safety one, so the
/// safety thread sees the same orders as a standalone safety iteration.
const TASK_ORDER_SALT: u64 = 0x7461_736B_5F6F_7264;

#[derive(Debug, Clone, PartialEq)]
pub struct DualIterationConfig {
    pub m_outer: usize,
    pub k_safety_per_outer: usize,
    pub agent_order: AgentOrder,
    pub seed: u64,
}

impl Default for DualIterationConfig {
    fn default() -> Self {
        Self {
            m_outer: 1000,
            k_safety_per_outer: 1,
            agent_order: AgentOrder::SeededShuffle,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSweep {
    pub policy: JointPolicy,
    pub changed: usize,
    /// States reverted to the safety policy because an invariant action set was empty.
    pub fallbacks: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DualTraceRow {
    pub iteration: usize,
    pub cis_size: usize,
    pub objective: f64,
    pub safety_residual: f64,
    pub safety_changed: usize,
    pub task_changed: usize,
    pub fallbacks: usize,
    /// `min_{x in CIS} (V_new(x) - V_old(x))` for the task sweep, recorded only
    /// when neither the safety policy nor the CIS moved this iteration.
    pub task_min_change: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DualIterationResult {
    pub task_policy: JointPolicy,
    pub safety_policy: JointPolicy,
    pub v: ValueTable,
    pub vh_safety: ValueTable,
    pub vh_task: ValueTable,
    pub cis: StateSet,
    pub objective: f64,
    pub trace: Vec<DualTraceRow>,
    /// CIS after each outer iteration.
    pub cis_history: Vec<StateSet>,
    pub converged: bool,
}

impl DualIterationResult {
    pub fn total_fallbacks(&self) -> usize {
        self.trace.iter().map(|r| r.fallbacks).sum()
    }
}

/// `sum_x d(x) * (V(x) if x in cis else V_h(x))`.
pub fn objective_value(game: &Game, v: &ValueTable, vh_task: &ValueTable, cis: &StateSet) -> f64 {
    (0..game.n_states)
        .map(|x| {
            let value = if cis.contains(x) { v[x] } else { vh_task[x] };
            game.initial_dist[x] * value
        })
        .sum()
}

/// Task policy with the safety policy copied onto every state outside `cis`.
pub fn failsafe_copy(task: &JointPolicy, safety: &JointPolicy, cis: &StateSet) -> JointPolicy {
    let mut out = task.clone();
    for x in 0..task.n_states() {
        if !cis.contains(x) {
            out.set_row(x, safety.row(x));
        }
    }
    out
}

struct StateUpdate {
    actions: Vec<usize>,
    fallback: bool,
    evaluations: usize,
}

#[allow(clippy::too_many_arguments)]
fn improve_task_state(
    game: &Game,
    space: &JointActionSpace,
    v: &ValueTable,
    vh: &ValueTable,
    state: usize,
    row: &[usize],
    safety_row: &[usize],
    order: &[usize],
) -> StateUpdate {
    let succ = game.successors(state);
    let rewards = game.rewards(state);
    let mut actions = row.to_vec();
    let mut evaluations = 0;
    for &agent in order {
        let feasible = match invariant_action_set(game, vh, state, agent, &actions) {
            Ok(f) => f,
            Err(_) => {
                return StateUpdate {
                    actions: safety_row.to_vec(),
                    fallback: true,
                    evaluations: evaluations + space.radix(agent),
                }
            }
        };
        evaluations += space.radix(agent);
        let joint = space.encode(&actions);
        let candidates = feasible.iter().map(|&u| {
            let j = space.substitute(joint, agent, u);
            (u, rewards[j] + game.gamma * v[succ[j]])
        });
        actions[agent] =
            argmax_keep_incumbent(candidates, actions[agent]).expect("feasible set is non-empty");
    }
    StateUpdate {
        actions,
        fallback: false,
        evaluations,
    }
}

/// Constrained agent-by-agent improvement of the task policy on `new_cis`.
///
/// `v` is the reward value of the task policy and `vh` the safety value of
/// `safety`. States outside `new_cis` are left alone.
pub fn constrained_task_sweep(
    game: &Game,
    task: &JointPolicy,
    safety: &JointPolicy,
    v: &ValueTable,
    vh: &ValueTable,
    new_cis: &StateSet,
    order: &[usize],
) -> TaskSweep {
    let space = game.joint_space();
    let states: Vec<usize> = new_cis.iter().collect();
    let updates: Vec<StateUpdate> = states
        .par_iter()
        .map(|&x| improve_task_state(game, &space, v, vh, x, task.row(x), safety.row(x), order))
        .collect();
    let mut next = task.clone();
    let mut fallbacks = 0;
    let mut evaluations = 0;
    for (&x, up) in states.iter().zip(&updates) {
        next.set_row(x, &up.actions);
        fallbacks += usize::from(up.fallback);
        evaluations += up.evaluations;
    }
    TaskSweep {
        changed: next.count_differences(task),
        policy: next,
        fallbacks,
        evaluations,
    }
}

/// Runs dual policy iteration starting from `initial_safety`, with the task
/// policy initialised to the same policy and the CIS initialised empty.
pub fn run_dual_iteration(
    game: &Game,
    initial_safety: &JointPolicy,
    config: &DualIterationConfig,
) -> DualIterationResult {
    let mut safety_orders = OrderSource::new(config.agent_order, config.seed);
    let mut task_orders = OrderSource::new(config.agent_order, config.seed ^ TASK_ORDER_SALT);

    let mut safety = initial_safety.clone();
    let mut task = initial_safety.clone();
    let mut cis = StateSet::empty(game.n_states);
    let mut vh = evaluate_policy(game, &safety, ValueKind::Safety);
    let mut trace = Vec::new();
    let mut cis_history = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.m_outer.max(1) {
        let task_before = task.clone();
        let vh_before = vh.clone();

        let mut safety_changed = 0;
        for _ in 0..config.k_safety_per_outer.max(1) {
            let order = safety_orders.next_order(game.n_agents);
            let sweep = safety_improvement_sweep(game, &safety, &vh, &order);
            safety_changed += sweep.changed;
            safety = sweep.policy;
            vh = evaluate_policy(game, &safety, ValueKind::Safety);
        }

        let v = evaluate_policy(game, &task, ValueKind::Reward);
        task = failsafe_copy(&task, &safety, &cis);
        let new_cis = vh.superlevel_set();
        let order = task_orders.next_order(game.n_agents);
        let sweep = constrained_task_sweep(game, &task, &safety, &v, &vh, &new_cis, &order);
        task = sweep.policy;

        let v_after = evaluate_policy(game, &task, ValueKind::Reward);
        let vh_task = evaluate_policy(game, &task, ValueKind::Safety);
        let task_min_change = (safety_changed == 0 && new_cis == cis).then(|| {
            new_cis
                .iter()
                .map(|x| v_after[x] - v[x])
                .fold(f64::INFINITY, f64::min)
        });
        cis = new_cis;
        let task_changed = task.count_differences(&task_before);

        trace.push(DualTraceRow {
            iteration,
            cis_size: cis.len(),
            objective: objective_value(game, &v_after, &vh_task, &cis),
            safety_residual: vh.sup_distance(&vh_before),
            safety_changed,
            task_changed,
            fallbacks: sweep.fallbacks,
            task_min_change,
        });
        cis_history.push(cis.clone());

        if safety_changed == 0 && task_changed == 0 {
            converged = true;
            break;
        }
    }

    let v = evaluate_policy(game, &task, ValueKind::Reward);
    let vh_task = evaluate_policy(game, &task, ValueKind::Safety);
    DualIterationResult {
        objective: objective_value(game, &v, &vh_task, &cis),
        task_policy: task,
        safety_policy: safety,
        v,
        vh_safety: vh,
        vh_task,
        cis,
        trace,
        cis_history,
        converged,
    }
}
