use serde::Serialize;

use super::optimum::{best_response_safety_with_actions, constrained_task_best_response};
use super::{iterative_fixed_point, joint_safety_optimum, MAX_SOLVE_SWEEPS, SOLVE_TOL};
use crate::game::{Game, JointPolicy, StateSet, ValueKind, ValueTable};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    NashSafety,
    GneTask,
    JointOptimumGap,
    FixedPoint,
}

/// A `(state, agent, action)` triple exhibiting a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub state: usize,
    pub agent: usize,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub passed: bool,
    /// Largest violation found, clamped below at zero.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
}

impl Certificate {
    fn new(kind: CertificateKind, worst: f64, tolerance: f64, witness: Option<Witness>) -> Self {
        let worst_violation = worst.max(0.0);
        Self {
            kind,
            passed: worst_violation <= tolerance,
            worst_violation,
            tolerance,
            witness: witness.filter(|_| worst_violation > 0.0),
        }
    }
}

/// Scans violations in `(state, agent)` order and keeps the first maximum.
#[derive(Default)]
struct WorstTracker {
    worst: f64,
    witness: Option<Witness>,
    seen: bool,
}

impl WorstTracker {
    fn offer(&mut self, violation: f64, witness: Witness) {
        if !self.seen || violation > self.worst {
            self.worst = violation;
            self.witness = Some(witness);
            self.seen = true;
        }
    }
}

/// Checks that no agent can raise the safety value at any state by a
/// unilateral change of its own safety policy.
///
/// `vh` is the safety value of `policy`. Each agent's best response is solved
/// to optimality, so the check covers every individual policy, not just
/// one-step deviations.
pub fn certify_nash_safety(
    game: &Game,
    policy: &JointPolicy,
    vh: &ValueTable,
    tol: f64,
) -> Certificate {
    let responses: Vec<(ValueTable, Vec<usize>)> = (0..game.n_agents)
        .map(|agent| best_response_safety_with_actions(game, policy, agent))
        .collect();
    let mut tracker = WorstTracker::default();
    for x in 0..game.n_states {
        for (agent, (br, actions)) in responses.iter().enumerate() {
            tracker.offer(
                br[x] - vh[x],
                Witness {
                    state: x,
                    agent,
                    action: actions[x],
                },
            );
        }
    }
    Certificate::new(
        CertificateKind::NashSafety,
        tracker.worst,
        tol,
        tracker.witness,
    )
}

/// Checks the generalized Nash condition of the task policy in the induced game.
///
/// For every agent, the best constrained single-agent response against the
/// others' task actions (feasible actions keep `vh_safety >= 0` at the
/// successor) must not beat `v` on any CIS state by more than `tol`. A CIS
/// state where the task policy itself leaves the CIS counts as an infinite
/// violation.
pub fn certify_gne_task(
    game: &Game,
    task: &JointPolicy,
    v: &ValueTable,
    vh_safety: &ValueTable,
    cis: &StateSet,
    tol: f64,
) -> Certificate {
    let responses: Vec<(ValueTable, Vec<usize>, Vec<usize>)> = (0..game.n_agents)
        .map(|agent| constrained_task_best_response(game, task, vh_safety, cis, agent))
        .collect();
    let mut tracker = WorstTracker::default();
    for x in cis.iter() {
        let y = task.successor(game, x);
        let incumbent_feasible = vh_safety[y] >= 0.0 && cis.contains(y);
        for (agent, (br, actions, stuck)) in responses.iter().enumerate() {
            let violation = if !incumbent_feasible || stuck.contains(&x) {
                f64::INFINITY
            } else {
                br[x] - v[x]
            };
            let action = if incumbent_feasible {
                actions[x]
            } else {
                task.get(x, agent)
            };
            tracker.offer(
                violation,
                Witness {
                    state: x,
                    agent,
                    action,
                },
            );
        }
    }
    Certificate::new(
        CertificateKind::GneTask,
        tracker.worst,
        tol,
        tracker.witness,
    )
}

/// Checks `vh <= V_h^opt + tol` against the centralised joint optimum. The
/// witness carries the optimum's joint-action index in `action`.
pub fn certify_joint_optimum_gap(game: &Game, vh: &ValueTable, tol: f64) -> Result<Certificate> {
    let opt = joint_safety_optimum(game)?;
    let mut tracker = WorstTracker::default();
    for x in 0..game.n_states {
        tracker.offer(
            vh[x] - opt.values[x],
            Witness {
                state: x,
                agent: 0,
                action: opt.policy.joint_index(game, x),
            },
        );
    }
    Ok(Certificate::new(
        CertificateKind::JointOptimumGap,
        tracker.worst,
        tol,
        tracker.witness,
    ))
}

/// Checks `table` against the iterated self-consistency operator of `policy`.
pub fn certify_fixed_point(
    game: &Game,
    policy: &JointPolicy,
    table: &ValueTable,
    tol: f64,
) -> Result<Certificate> {
    let reference = iterative_fixed_point(game, policy, table.kind, MAX_SOLVE_SWEEPS, SOLVE_TOL)?;
    let mut tracker = WorstTracker::default();
    for x in 0..game.n_states {
        tracker.offer(
            (table[x] - reference[x]).abs(),
            Witness {
                state: x,
                agent: 0,
                action: policy.joint_index(game, x),
            },
        );
    }
    debug_assert!(matches!(table.kind, ValueKind::Reward | ValueKind::Safety));
    Ok(Certificate::new(
        CertificateKind::FixedPoint,
        tracker.worst,
        tol,
        tracker.witness,
    ))
}
