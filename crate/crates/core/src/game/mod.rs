//! The game tuple and the tabular objects built on top of it.

mod eval;
pub mod io;
mod policy;
mod sets;

use std::fmt;

pub use eval::{
    evaluate_policy, exact_reward_value, exact_safety_value, invariant_action_set, rollout,
    TrajectorySummary,
};
pub use policy::JointPolicy;
pub use sets::{StateSet, ValueKind, ValueTable};

/// Tolerance on `sum(initial_dist) == 1`.
pub const INITIAL_DIST_TOL: f64 = 1e-12;

/// Mixed-radix encoding of joint actions, agent 0 least significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointActionSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointActionSpace {
    /// Returns `None` when an agent has no actions or the product overflows.
    pub fn new(actions_per_agent: &[usize]) -> Option<Self> {
        let mut strides = Vec::with_capacity(actions_per_agent.len());
        let mut size = 1usize;
        for &c in actions_per_agent {
            if c == 0 {
                return None;
            }
            strides.push(size);
            size = size.checked_mul(c)?;
        }
        Some(Self {
            radices: actions_per_agent.to_vec(),
            strides,
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_agents(&self) -> usize {
        self.radices.len()
    }

    pub fn radix(&self, agent: usize) -> usize {
        self.radices[agent]
    }

    pub fn stride(&self, agent: usize) -> usize {
        self.strides[agent]
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.radices.len());
        actions
            .iter()
            .zip(&self.strides)
            .map(|(&a, &s)| a * s)
            .sum()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        self.radices
            .iter()
            .map(|&c| {
                let a = index % c;
                index /= c;
                a
            })
            .collect()
    }

    /// Index of `joint` with agent `agent`'s component replaced by `action`.
    pub fn substitute(&self, joint: usize, agent: usize, action: usize) -> usize {
        let stride = self.strides[agent];
        let current = (joint / stride) % self.radices[agent];
        joint - current * stride + action * stride
    }
}

/// A finite deterministic cooperative Markov game with a state constraint.
///
/// Tables indexed by `(state, joint action)` are stored row-major with the
/// joint action as the inner index. The fields are public so that malformed
/// games can be represented and reported by [`validate_game`]; every solver
/// assumes a game that validates cleanly.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub n_agents: usize,
    pub n_states: usize,
    pub actions_per_agent: Vec<usize>,
    pub transition: Vec<usize>,
    pub reward: Vec<f64>,
    pub constraint: Vec<f64>,
    pub gamma: f64,
    pub gamma_h: f64,
    pub initial_dist: Vec<f64>,
}

impl Game {
    /// Builds a game and rejects it if any invariant fails.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        actions_per_agent: Vec<usize>,
        n_states: usize,
        transition: Vec<usize>,
        reward: Vec<f64>,
        constraint: Vec<f64>,
        gamma: f64,
        gamma_h: f64,
        initial_dist: Vec<f64>,
    ) -> crate::Result<Self> {
        let game = Self {
            n_agents: actions_per_agent.len(),
            n_states,
            actions_per_agent,
            transition,
            reward,
            constraint,
            gamma,
            gamma_h,
            initial_dist,
        };
        let violations = validate_game(&game);
        if violations.is_empty() {
            Ok(game)
        } else {
            Err(crate::Error::InvalidGame(violations))
        }
    }

    pub fn joint_space(&self) -> JointActionSpace {
        JointActionSpace::new(&self.actions_per_agent).expect("game has a valid action space")
    }

    pub fn n_joint_actions(&self) -> usize {
        self.actions_per_agent.iter().product()
    }

    #[inline]
    pub fn next_state(&self, state: usize, joint: usize) -> usize {
        self.transition[state * self.n_joint_actions() + joint]
    }

    #[inline]
    pub fn reward_at(&self, state: usize, joint: usize) -> f64 {
        self.reward[state * self.n_joint_actions() + joint]
    }

    /// Successor states of `state`, indexed by joint action.
    pub fn successors(&self, state: usize) -> &[usize] {
        let n = self.n_joint_actions();
        &self.transition[state * n..(state + 1) * n]
    }

    /// Rewards at `state`, indexed by joint action.
    pub fn rewards(&self, state: usize) -> &[f64] {
        let n = self.n_joint_actions();
        &self.reward[state * n..(state + 1) * n]
    }

    #[inline]
    pub fn h(&self, state: usize) -> f64 {
        self.constraint[state]
    }

    /// The constraint set `{x : h(x) >= 0}`.
    pub fn constraint_set(&self) -> StateSet {
        StateSet::from_fn(self.n_states, |x| self.constraint[x] >= 0.0)
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_abs_h(&self) -> f64 {
        self.constraint.iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    pub fn uniform_dist(n_states: usize) -> Vec<f64> {
        vec![1.0 / n_states as f64; n_states]
    }
}

/// One failed game invariant, naming the field and the offending index.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub index: Vec<usize>,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, index: Vec<usize>, message: impl Into<String>) -> Self {
        Self {
            field,
            index,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field)?;
        if !self.index.is_empty() {
            let idx: Vec<String> = self.index.iter().map(ToString::to_string).collect();
            write!(f, "[{}]", idx.join("]["))?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Checks every game invariant and reports all violations found.
pub fn validate_game(game: &Game) -> Vec<Violation> {
    let mut out = Vec::new();

    if game.n_agents == 0 {
        out.push(Violation::new("n_agents", vec![], "must be positive"));
    }
    if game.n_states == 0 {
        out.push(Violation::new("n_states", vec![], "must be positive"));
    }
    if game.actions_per_agent.len() != game.n_agents {
        out.push(Violation::new(
            "actions_per_agent",
            vec![],
            format!(
                "length {} does not match n_agents {}",
                game.actions_per_agent.len(),
                game.n_agents
            ),
        ));
    }
    for (i, &c) in game.actions_per_agent.iter().enumerate() {
        if c == 0 {
            out.push(Violation::new(
                "actions_per_agent",
                vec![i],
                "must be positive",
            ));
        }
    }

    let n_joint = JointActionSpace::new(&game.actions_per_agent).map(|s| s.size());
    match n_joint {
        None => out.push(Violation::new(
            "actions_per_agent",
            vec![],
            "joint action space is empty or overflows",
        )),
        Some(n_joint) => {
            let cells = game.n_states.saturating_mul(n_joint);
            if game.transition.len() != cells {
                out.push(Violation::new(
                    "transition",
                    vec![],
                    format!("expected {cells} entries, found {}", game.transition.len()),
                ));
            } else {
                for (k, &t) in game.transition.iter().enumerate() {
                    if t >= game.n_states {
                        out.push(Violation::new(
                            "transition",
                            vec![k / n_joint, k % n_joint],
                            format!("target state {t} outside 0..{}", game.n_states),
                        ));
                    }
                }
            }
            if game.reward.len() != cells {
                out.push(Violation::new(
                    "reward",
                    vec![],
                    format!("expected {cells} entries, found {}", game.reward.len()),
                ));
            } else {
                for (k, r) in game.reward.iter().enumerate() {
                    if !r.is_finite() {
                        out.push(Violation::new(
                            "reward",
                            vec![k / n_joint, k % n_joint],
                            "not finite",
                        ));
                    }
                }
            }
        }
    }

    if game.constraint.len() != game.n_states {
        out.push(Violation::new(
            "h",
            vec![],
            format!(
                "expected {} entries, found {}",
                game.n_states,
                game.constraint.len()
            ),
        ));
    }
    for (x, h) in game.constraint.iter().enumerate() {
        if !h.is_finite() {
            out.push(Violation::new("h", vec![x], "not finite"));
        }
    }

    if !(game.gamma > 0.0 && game.gamma < 1.0) {
        out.push(Violation::new("gamma", vec![], "gamma out of (0,1)"));
    }
    if !(game.gamma_h > 0.0 && game.gamma_h < 1.0) {
        out.push(Violation::new("gamma_h", vec![], "gamma_h out of (0,1)"));
    }

    if game.initial_dist.len() != game.n_states {
        out.push(Violation::new(
            "initial_dist",
            vec![],
            format!(
                "expected {} entries, found {}",
                game.n_states,
                game.initial_dist.len()
            ),
        ));
    }
    for (x, &p) in game.initial_dist.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            out.push(Violation::new(
                "initial_dist",
                vec![x],
                "must be finite and >= 0",
            ));
        }
    }
    let total: f64 = game.initial_dist.iter().sum();
    if (total - 1.0).abs() > INITIAL_DIST_TOL {
        out.push(Violation::new(
            "initial_dist",
            vec![],
            format!("sums to {total}, expected 1"),
        ));
    }

    out
}
