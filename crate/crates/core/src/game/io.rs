//! JSON game file.
//!
//! ```json
//! {
//!   "n_agents": 2,
//!   "n_states": 2,
//!   "actions_per_agent": [2, 2],
//!   "transition": [[0, 1, 1, 1], [1, 1, 1, 1]],
//!   "reward": [[0.0, 10.0, 10.0, 10.0], [0.0, 0.0, 0.0, 0.0]],
//!   "h": [1.0, -1.0],
//!   "gamma": 0.9,
//!   "gamma_h": 0.9,
//!   "initial_dist": [0.5, 0.5]
//! }
//! ```
//!
//! `transition` and `reward` hold one row per state; within a row the joint
//! action index is mixed-radix with agent 0 least significant. The loader also
//! accepts both tables flattened row-major into a single array. Floats are
//! written in shortest round-trip form and parsed exactly, so a game survives
//! a save/load cycle bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_game, Game};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    n_agents: usize,
    n_states: usize,
    actions_per_agent: Vec<usize>,
    transition: Table<usize>,
    reward: Table<f64>,
    h: Vec<f64>,
    gamma: f64,
    gamma_h: f64,
    initial_dist: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Table<T> {
    Rows(Vec<Vec<T>>),
    Flat(Vec<T>),
}

impl<T: Copy> Table<T> {
    fn into_rows(
        self,
        name: &str,
        n_states: usize,
        n_joint: usize,
    ) -> std::result::Result<Vec<Vec<T>>, String> {
        match self {
            Table::Rows(rows) => Ok(rows),
            Table::Flat(flat) if flat.len() == n_states * n_joint => Ok(rows(&flat, n_states)),
            Table::Flat(flat) => Err(format!(
                "{name}: expected {} entries ({n_states} states x {n_joint} joint actions), found {}",
                n_states * n_joint,
                flat.len()
            )),
        }
    }
}

fn rows<T: Copy>(flat: &[T], n_states: usize) -> Vec<Vec<T>> {
    if n_states == 0 {
        return Vec::new();
    }
    flat.chunks(flat.len() / n_states.max(1))
        .map(<[T]>::to_vec)
        .collect()
}

impl From<&Game> for GameFile {
    fn from(g: &Game) -> Self {
        Self {
            n_agents: g.n_agents,
            n_states: g.n_states,
            actions_per_agent: g.actions_per_agent.clone(),
            transition: Table::Rows(rows(&g.transition, g.n_states)),
            reward: Table::Rows(rows(&g.reward, g.n_states)),
            h: g.constraint.clone(),
            gamma: g.gamma,
            gamma_h: g.gamma_h,
            initial_dist: g.initial_dist.clone(),
        }
    }
}

impl GameFile {
    fn into_game(self) -> std::result::Result<Game, String> {
        let n_joint: usize = self.actions_per_agent.iter().product();
        let transition = self
            .transition
            .into_rows("transition", self.n_states, n_joint)?;
        let reward = self.reward.into_rows("reward", self.n_states, n_joint)?;
        if transition.len() != self.n_states {
            return Err(format!(
                "transition: expected {} rows, found {}",
                self.n_states,
                transition.len()
            ));
        }
        if reward.len() != self.n_states {
            return Err(format!(
                "reward: expected {} rows, found {}",
                self.n_states,
                reward.len()
            ));
        }
        if let Some(x) = transition.iter().position(|r| r.len() != n_joint) {
            return Err(format!(
                "transition[{x}]: expected {n_joint} joint actions, found {}",
                transition[x].len()
            ));
        }
        if let Some(x) = reward.iter().position(|r| r.len() != n_joint) {
            return Err(format!(
                "reward[{x}]: expected {n_joint} joint actions, found {}",
                reward[x].len()
            ));
        }
        Ok(Game {
            n_agents: self.n_agents,
            n_states: self.n_states,
            actions_per_agent: self.actions_per_agent,
            transition: transition.concat(),
            reward: reward.concat(),
            constraint: self.h,
            gamma: self.gamma,
            gamma_h: self.gamma_h,
            initial_dist: self.initial_dist,
        })
    }
}

pub fn to_json(game: &Game) -> String {
    serde_json::to_string_pretty(&GameFile::from(game)).expect("game serializes")
}

/// Parses a game without checking invariants beyond table shape.
pub fn from_json_unchecked(text: &str) -> std::result::Result<Game, String> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.into_game()
}

/// Parses and validates a game.
pub fn from_json(text: &str) -> Result<Game> {
    let game = from_json_unchecked(text).map_err(|message| Error::Input {
        path: "<game>".into(),
        message,
    })?;
    let violations = validate_game(&game);
    if violations.is_empty() {
        Ok(game)
    } else {
        Err(Error::InvalidGame(violations))
    }
}

pub fn save(game: &Game, path: &Path) -> Result<()> {
    fs::write(path, to_json(game))?;
    Ok(())
}

/// Loads and validates a game file; errors name the file and the offending field.
pub fn load(path: &Path) -> Result<Game> {
    let input_err = |message: String| Error::Input {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| input_err(e.to_string()))?;
    let game = from_json_unchecked(&text).map_err(input_err)?;
    let violations = validate_game(&game);
    if violations.is_empty() {
        Ok(game)
    } else {
        let msg = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(input_err(msg))
    }
}
