//! Concrete games: analytic toys, hazard gridworlds and seeded random games.

mod grid;
mod random;
mod rng;

pub use grid::{build_gridworld, grid5x5, Cell, CollisionRule, GridAction, GridSpec};
pub use random::{build_random_game, random_suite, RandomGameParams};
pub use rng::SplitMix64;

use crate::game::Game;

/// Two states, two agents with two actions each.
///
/// From `s0` only the joint action `(0, 0)` stays in `s0`; anything else
/// falls into the absorbing `s1`. `h = (1, -1)`, `r(s0, (0, 0)) = 0`, every
/// other action at `s0` pays 10 and `s1` pays nothing. Both discounts are 0.9
/// and `d` is uniform.
pub fn build_trap2() -> Game {
    Game::new(
        vec![2, 2],
        2,
        vec![0, 1, 1, 1, 1, 1, 1, 1],
        vec![0.0, 10.0, 10.0, 10.0, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, -1.0],
        0.9,
        0.9,
        Game::uniform_dist(2),
    )
    .expect("trap2 is well formed")
}

/// trap2 with the constraint removed (`h = +1` everywhere).
pub fn build_trap2_unconstrained() -> Game {
    let mut game = build_trap2();
    game.constraint = vec![1.0, 1.0];
    game
}
