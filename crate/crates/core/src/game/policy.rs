use super::Game;

/// A deterministic joint policy: one action index per `(state, agent)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointPolicy {
    n_agents: usize,
    choice: Vec<usize>,
}

impl JointPolicy {
    /// Every agent plays `action` (clamped to its action count) at every state.
    pub fn constant(game: &Game, action: usize) -> Self {
        let row: Vec<usize> = game
            .actions_per_agent
            .iter()
            .map(|&c| action.min(c - 1))
            .collect();
        Self {
            n_agents: game.n_agents,
            choice: row
                .iter()
                .copied()
                .cycle()
                .take(game.n_states * game.n_agents)
                .collect(),
        }
    }

    pub fn zeros(game: &Game) -> Self {
        Self::constant(game, 0)
    }

    /// Builds a policy from per-state joint actions.
    pub fn from_rows(rows: &[Vec<usize>]) -> Self {
        let n_agents = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == n_agents),
            "ragged policy rows"
        );
        Self {
            n_agents,
            choice: rows.concat(),
        }
    }

    /// Builds a policy from joint-action indices, one per state.
    pub fn from_joint_indices(game: &Game, joint: &[usize]) -> Self {
        let space = game.joint_space();
        let rows: Vec<Vec<usize>> = joint.iter().map(|&j| space.decode(j)).collect();
        Self {
            n_agents: game.n_agents,
            choice: rows.concat(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_states(&self) -> usize {
        self.choice.len().checked_div(self.n_agents).unwrap_or(0)
    }

    #[inline]
    pub fn get(&self, state: usize, agent: usize) -> usize {
        self.choice[state * self.n_agents + agent]
    }

    #[inline]
    pub fn set(&mut self, state: usize, agent: usize, action: usize) {
        self.choice[state * self.n_agents + agent] = action;
    }

    /// All agents' actions at `state`.
    pub fn row(&self, state: usize) -> &[usize] {
        &self.choice[state * self.n_agents..(state + 1) * self.n_agents]
    }

    pub(crate) fn set_row(&mut self, state: usize, actions: &[usize]) {
        self.choice[state * self.n_agents..(state + 1) * self.n_agents].copy_from_slice(actions);
    }

    /// Mixed-radix joint action index at `state`.
    pub fn joint_index(&self, game: &Game, state: usize) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (a, &c) in self.row(state).iter().zip(&game.actions_per_agent) {
            idx += a * stride;
            stride *= c;
        }
        idx
    }

    /// `f(x, pi(x))`.
    pub fn successor(&self, game: &Game, state: usize) -> usize {
        game.next_state(state, self.joint_index(game, state))
    }

    /// Whether the shape matches `game` and every action is in range.
    pub fn is_valid_for(&self, game: &Game) -> bool {
        self.n_agents == game.n_agents
            && self.choice.len() == game.n_states * game.n_agents
            && (0..game.n_states).all(|x| {
                self.row(x)
                    .iter()
                    .zip(&game.actions_per_agent)
                    .all(|(&a, &c)| a < c)
            })
    }

    /// Number of `(state, agent)` entries that differ.
    pub fn count_differences(&self, other: &JointPolicy) -> usize {
        self.choice
            .iter()
            .zip(&other.choice)
            .filter(|(a, b)| a != b)
            .count()
    }
}
