//! Safety policy iteration and dual policy iteration for finite, deterministic,
//! state-wise constrained cooperative Markov games.
//!
//! The crate is organised around four pieces:
//!
//! * [`game`]: the game tuple, deterministic joint policies, value tables,
//!   state sets, and exact prefix+cycle policy evaluation.
//! * [`safety`]: agent-by-agent safety policy iteration, which identifies a
//!   controlled invariant set (CIS) and stops at a Nash point of the safety
//!   value function.
//! * [`dual`]: dual policy iteration, which grows the CIS with the safety
//!   thread while improving a task policy inside it under invariant action sets.
//! * [`oracles`]: brute-force value iteration, best responses and equilibrium
//!   certificates that share nothing with the solvers beyond the game types.
//!
//! [`envs`] builds concrete games and [`cli`] drives batch runs.

pub mod cli;
pub mod dual;
pub mod envs;
pub mod error;
pub mod game;
pub mod oracles;
pub mod safety;

pub use error::{Error, Result};
pub use game::{
    evaluate_policy, exact_reward_value, exact_safety_value, invariant_action_set, rollout,
    validate_game, Game, JointActionSpace, JointPolicy, StateSet, TrajectorySummary, ValueKind,
    ValueTable, Violation,
};

/// Agent visiting order used by the sequential sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentOrder {
    /// A fresh seeded permutation per sweep.
    #[default]
    SeededShuffle,
    /// Agents always visited as `0, 1, .., n-1`.
    Fixed,
}

/// Draws sweep orders according to an [`AgentOrder`].
#[derive(Debug, Clone)]
pub(crate) struct OrderSource {
    order: AgentOrder,
    rng: envs::SplitMix64,
}

impl OrderSource {
    pub(crate) fn new(order: AgentOrder, seed: u64) -> Self {
        Self {
            order,
            rng: envs::SplitMix64::new(seed),
        }
    }

    pub(crate) fn next_order(&mut self, n_agents: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n_agents).collect();
        if self.order == AgentOrder::SeededShuffle {
            self.rng.shuffle(&mut perm);
        }
        perm
    }
}
