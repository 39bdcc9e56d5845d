use super::SplitMix64;
use crate::game::Game;

/// Seeded random game. Draw order: transitions (row-major), rewards
/// (row-major), a shuffle of the states choosing which ones are negative,
/// then one `h` magnitude per state.
///
/// `floor(hazard_fraction * n_states)` states get `h` uniform in `[-1, 0)`,
/// the rest uniform in `[0, 1)`. Rewards are uniform in `[-1, 1)`,
/// `gamma = gamma_h = 0.9` and `d` is uniform.
pub fn build_random_game(
    seed: u64,
    n_states: usize,
    actions_per_agent: &[usize],
    hazard_fraction: f64,
) -> Game {
    assert!(n_states > 0, "random game needs at least one state");
    let mut rng = SplitMix64::new(seed);
    let n_joint: usize = actions_per_agent.iter().product();
    let cells = n_states * n_joint;

    let transition: Vec<usize> = (0..cells).map(|_| rng.below(n_states)).collect();
    let reward: Vec<f64> = (0..cells).map(|_| 2.0 * rng.next_f64() - 1.0).collect();

    let n_negative =
        ((hazard_fraction.clamp(0.0, 1.0) * n_states as f64).floor() as usize).min(n_states);
    let mut order: Vec<usize> = (0..n_states).collect();
    rng.shuffle(&mut order);
    let mut negative = vec![false; n_states];
    for &x in &order[..n_negative] {
        negative[x] = true;
    }
    let constraint: Vec<f64> = negative
        .iter()
        .map(|&neg| {
            let u = rng.next_f64();
            if neg {
                -(1.0 - u)
            } else {
                u
            }
        })
        .collect();

    Game::new(
        actions_per_agent.to_vec(),
        n_states,
        transition,
        reward,
        constraint,
        0.9,
        0.9,
        Game::uniform_dist(n_states),
    )
    .expect("random game is well formed")
}

/// Parameters of one member of a random test suite.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGameParams {
    pub seed: u64,
    pub n_states: usize,
    pub actions_per_agent: Vec<usize>,
    pub hazard_fraction: f64,
}

impl RandomGameParams {
    pub fn build(&self) -> Game {
        build_random_game(
            self.seed,
            self.n_states,
            &self.actions_per_agent,
            self.hazard_fraction,
        )
    }
}

/// `count` small games (2..=12 states, 1..=3 agents, 1..=3 actions each,
/// hazard fraction in {0, 0.25, 0.5, 0.75}) derived from `base_seed`.
pub fn random_suite(base_seed: u64, count: usize) -> Vec<RandomGameParams> {
    let mut meta = SplitMix64::new(base_seed);
    (0..count)
        .map(|_| {
            let n_states = 2 + meta.below(11);
            let n_agents = 1 + meta.below(3);
            let actions_per_agent = (0..n_agents).map(|_| 1 + meta.below(3)).collect();
            let hazard_fraction = [0.0, 0.25, 0.5, 0.75][meta.below(4)];
            RandomGameParams {
                seed: meta.next_u64(),
                n_states,
                actions_per_agent,
                hazard_fraction,
            }
        })
        .collect()
}
