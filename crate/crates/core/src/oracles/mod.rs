//! Brute-force reference solvers and equilibrium certificates.
//!
//! Nothing here calls into [`crate::safety`] or [`crate::dual`]; the only
//! shared surface is the game-core types. Every solve is Jacobi value
//! iteration from the zero table. Starting from zero matters for safety
//! tables: states whose trajectory never violates the constraint stay at
//! exactly `0.0`, so `V >= 0` classifications agree with exact evaluation
//! without any boundary tolerance.

mod certificate;
mod fixed_point;
mod optimum;

pub use certificate::{
    certify_fixed_point, certify_gne_task, certify_joint_optimum_gap, certify_nash_safety,
    Certificate, CertificateKind, Witness,
};
pub use fixed_point::{iterate_operator, iterative_fixed_point};
pub use optimum::{
    best_response_safety, constrained_task_best_response, induced_joint_optimum,
    joint_safety_optimum, JointOptimum, JOINT_ACTION_CAP,
};

/// Equilibrium certificate tolerance.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// Convergence tolerance of every oracle value iteration.
pub const SOLVE_TOL: f64 = 1e-12;
/// Sweep cap for oracle value iteration.
pub const MAX_SOLVE_SWEEPS: usize = 100_000;

/// Jacobi value iteration from zero until the sup-norm step drops below `tol`.
///
/// `backup(values, x)` returns the new value at `x`. Returns the table, the
/// sweeps used and the last step size; callers compare the step against `tol`
/// to detect an exhausted sweep budget.
pub(crate) fn value_iteration(
    n_states: usize,
    tol: f64,
    max_sweeps: usize,
    mut backup: impl FnMut(&[f64], usize) -> f64,
) -> (Vec<f64>, usize, f64) {
    let mut values = vec![0.0; n_states];
    let mut next = vec![0.0; n_states];
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        residual = 0.0;
        for x in 0..n_states {
            next[x] = backup(&values, x);
            residual = f64::max(residual, (next[x] - values[x]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        if residual < tol {
            return (values, sweep, residual);
        }
    }
    (values, max_sweeps, residual)
}
