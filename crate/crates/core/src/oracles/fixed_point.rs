use crate::game::{Game, JointPolicy, ValueKind, ValueTable};
use crate::{Error, Result};

fn apply(game: &Game, policy: &JointPolicy, kind: ValueKind, values: &[f64], x: usize) -> f64 {
    let j = policy.joint_index(game, x);
    let next = values[game.next_state(x, j)];
    match kind {
        ValueKind::Safety => game.gamma_h * game.h(x).min(next),
        ValueKind::Reward => game.reward_at(x, j) + game.gamma * next,
    }
}

/// Applies the policy's self-consistency operator `sweeps` times to the zero
/// table and returns the result with the sup-norm step of every sweep.
pub fn iterate_operator(
    game: &Game,
    policy: &JointPolicy,
    kind: ValueKind,
    sweeps: usize,
) -> (ValueTable, Vec<f64>) {
    let mut values = vec![0.0; game.n_states];
    let mut residuals = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        let next: Vec<f64> = (0..game.n_states)
            .map(|x| apply(game, policy, kind, &values, x))
            .collect();
        residuals.push(
            next.iter()
                .zip(&values)
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())),
        );
        values = next;
    }
    (ValueTable::new(kind, values), residuals)
}

/// Iterates the self-consistency operator from zero until the sup-norm step
/// is below `tol`, for at most `sweeps` sweeps.
pub fn iterative_fixed_point(
    game: &Game,
    policy: &JointPolicy,
    kind: ValueKind,
    sweeps: usize,
    tol: f64,
) -> Result<ValueTable> {
    let (values, _, residual) =
        super::value_iteration(game.n_states, tol, sweeps.max(1), |v, x| {
            apply(game, policy, kind, v, x)
        });
    if residual < tol {
        Ok(ValueTable::new(kind, values))
    } else {
        Err(Error::NonConvergence {
            residual,
            sweeps: sweeps.max(1),
        })
    }
}
