use super::{value_iteration, MAX_SOLVE_SWEEPS, SOLVE_TOL};
use crate::game::{Game, JointPolicy, StateSet, ValueKind, ValueTable};
use crate::{Error, Result};

/// Largest joint action space the exhaustive oracles accept per state.
pub const JOINT_ACTION_CAP: usize = 1_000_000;

/// Centralised optimum over the full joint action space.
#[derive(Debug, Clone)]
pub struct JointOptimum {
    pub policy: JointPolicy,
    pub values: ValueTable,
    pub sweeps: usize,
    /// Successor values looked up across all sweeps.
    pub evaluations: usize,
}

impl JointOptimum {
    pub fn cis(&self) -> StateSet {
        self.values.superlevel_set()
    }
}

fn guard(game: &Game) -> Result<usize> {
    let size = game.n_joint_actions();
    if size > JOINT_ACTION_CAP {
        Err(Error::SizeGuard {
            size,
            cap: JOINT_ACTION_CAP,
        })
    } else {
        Ok(size)
    }
}

fn first_argmax(values: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    values.fold((usize::MAX, f64::NEG_INFINITY), |best, (u, v)| {
        if v > best.1 {
            (u, v)
        } else {
            best
        }
    })
}

/// `V_opt(x) = gamma_h * min(h(x), max_u V_opt(f(x, u)))`, solved by value
/// iteration over every joint action, with a greedy joint policy.
pub fn joint_safety_optimum(game: &Game) -> Result<JointOptimum> {
    let n_joint = guard(game)?;
    let (values, sweeps, _) =
        value_iteration(game.n_states, SOLVE_TOL, MAX_SOLVE_SWEEPS, |v, x| {
            let best = game
                .successors(x)
                .iter()
                .map(|&y| v[y])
                .fold(f64::NEG_INFINITY, f64::max);
            game.gamma_h * game.h(x).min(best)
        });
    let greedy: Vec<usize> = (0..game.n_states)
        .map(|x| first_argmax(game.successors(x).iter().map(|&y| values[y]).enumerate()).0)
        .collect();
    Ok(JointOptimum {
        policy: JointPolicy::from_joint_indices(game, &greedy),
        values: ValueTable::new(ValueKind::Safety, values),
        sweeps,
        evaluations: sweeps * game.n_states * n_joint,
    })
}

/// Joint actions reachable by varying `agent` at `state` with the others fixed
/// to `policy`, as `(action, joint index)` pairs.
fn unilateral(
    game: &Game,
    policy: &JointPolicy,
    state: usize,
    agent: usize,
) -> Vec<(usize, usize)> {
    let space = game.joint_space();
    let base = policy.joint_index(game, state);
    (0..game.actions_per_agent[agent])
        .map(|u| (u, space.substitute(base, agent, u)))
        .collect()
}

/// Best safety value agent `agent` can reach against the others' fixed policy,
/// plus a greedy best-response action per state.
pub(crate) fn best_response_safety_with_actions(
    game: &Game,
    policy: &JointPolicy,
    agent: usize,
) -> (ValueTable, Vec<usize>) {
    let options: Vec<Vec<(usize, usize)>> = (0..game.n_states)
        .map(|x| unilateral(game, policy, x, agent))
        .collect();
    let (values, _, _) = value_iteration(game.n_states, SOLVE_TOL, MAX_SOLVE_SWEEPS, |v, x| {
        let best = options[x]
            .iter()
            .map(|&(_, j)| v[game.next_state(x, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        game.gamma_h * game.h(x).min(best)
    });
    let actions = (0..game.n_states)
        .map(|x| {
            first_argmax(
                options[x]
                    .iter()
                    .map(|&(u, j)| (u, values[game.next_state(x, j)])),
            )
            .0
        })
        .collect();
    (ValueTable::new(ValueKind::Safety, values), actions)
}

/// Optimal safety value of agent `agent`'s single-agent problem with every
/// other agent fixed to `policy`.
pub fn best_response_safety(game: &Game, policy: &JointPolicy, agent: usize) -> ValueTable {
    best_response_safety_with_actions(game, policy, agent).0
}

/// Constrained reward best response of `agent` inside the induced game.
///
/// On every state of `cis` the agent may pick any action whose successor (with
/// the others fixed to `task`) has `vh >= 0` and lies in `cis`. Returns the
/// best-response values (meaningful on `cis` only), a greedy action per state,
/// and the states of `cis` where no action was feasible.
pub fn constrained_task_best_response(
    game: &Game,
    task: &JointPolicy,
    vh: &ValueTable,
    cis: &StateSet,
    agent: usize,
) -> (ValueTable, Vec<usize>, Vec<usize>) {
    let feasible: Vec<Vec<(usize, usize)>> = (0..game.n_states)
        .map(|x| {
            if !cis.contains(x) {
                return Vec::new();
            }
            unilateral(game, task, x, agent)
                .into_iter()
                .filter(|&(_, j)| {
                    let y = game.next_state(x, j);
                    vh[y] >= 0.0 && cis.contains(y)
                })
                .collect()
        })
        .collect();
    let stuck: Vec<usize> = cis.iter().filter(|&x| feasible[x].is_empty()).collect();
    let q = |v: &[f64], x: usize, j: usize| {
        game.reward_at(x, j) + game.gamma * v[game.next_state(x, j)]
    };
    let (values, _, _) = value_iteration(game.n_states, SOLVE_TOL, MAX_SOLVE_SWEEPS, |v, x| {
        if feasible[x].is_empty() {
            0.0
        } else {
            feasible[x]
                .iter()
                .map(|&(_, j)| q(v, x, j))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    });
    let actions = (0..game.n_states)
        .map(|x| first_argmax(feasible[x].iter().map(|&(u, j)| (u, q(&values, x, j)))).0)
        .collect();
    (ValueTable::new(ValueKind::Reward, values), actions, stuck)
}

/// Optimal reward value of the induced game: states `{vh >= 0}`, joint actions
/// whose successor keeps `vh >= 0`. Entries outside that set are zero.
pub fn induced_joint_optimum(game: &Game, vh: &ValueTable) -> Result<ValueTable> {
    guard(game)?;
    let cis = vh.superlevel_set();
    let (values, _, _) = value_iteration(game.n_states, SOLVE_TOL, MAX_SOLVE_SWEEPS, |v, x| {
        if !cis.contains(x) {
            return 0.0;
        }
        game.successors(x)
            .iter()
            .zip(game.rewards(x))
            .filter(|(&y, _)| vh[y] >= 0.0)
            .map(|(&y, &r)| r + game.gamma * v[y])
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(ValueTable::new(ValueKind::Reward, values))
}
