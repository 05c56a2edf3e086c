//! Finite look-ahead windows of the deterministic (certainty-equivalence)
//! control problem.
//!
//! For a window `T` and start `x(0) = x0`, the problem
//!
//! ```text
//! maximize  sum_{t<T} R(x(t), u(t))
//! s.t.      x(t+1) = phi(x(t), u(t)),  u(t) in U(x(t))
//! ```
//!
//! is a staircase LP over the per-step frequencies `y(t) = x(t) - u(t)` and
//! `u(t)`. It backs the MPC steering control (solve, keep `u(0)`) and serves
//! as the exact upper bound the stochastic bandit is compared against.

use crate::linalg::Mat;
use crate::lp::{solve_lp, LinearProgram, LpSolution};
use crate::model::{ArmModel, ControlVector, PopulationVector};
use crate::{Error, Result};

/// Builds the window LP. Variables are laid out per stage as
/// `[y(t), u(t)]` blocks; rows are the stage-flow constraints followed by
/// one budget row per stage.
pub fn window_lp(model: &ArmModel, x0: &PopulationVector, horizon: usize) -> LinearProgram {
    let s = model.num_states();
    let n = 2 * s * horizon;
    let m = s * horizon + horizon;
    let y_index = |t: usize, state: usize| 2 * s * t + state;
    let u_index = |t: usize, state: usize| 2 * s * t + s + state;

    let mut a = Mat::zeros(m, n);
    let mut rhs = vec![0.0; m];
    let mut objective = vec![0.0; n];

    for t in 0..horizon {
        for i in 0..s {
            let row = s * t + i;
            a.set(row, y_index(t, i), 1.0);
            a.set(row, u_index(t, i), 1.0);
            if t == 0 {
                rhs[row] = x0[i];
            } else {
                for j in 0..s {
                    let prev_y = y_index(t - 1, j);
                    let prev_u = u_index(t - 1, j);
                    a.set(row, prev_y, a.get(row, prev_y) - model.p0().get(j, i));
                    a.set(row, prev_u, a.get(row, prev_u) - model.p1().get(j, i));
                }
            }
        }
        let budget_row = s * horizon + t;
        for i in 0..s {
            a.set(budget_row, u_index(t, i), 1.0);
            objective[y_index(t, i)] = model.r0()[i];
            objective[u_index(t, i)] = model.r1()[i];
        }
        rhs[budget_row] = model.alpha();
    }

    LinearProgram {
        objective,
        a,
        rhs,
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
    }
}

/// Optimal total reward of the window (the deterministic upper bound).
pub fn window_value(model: &ArmModel, x0: &PopulationVector, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("window horizon must be >= 1".into()));
    }
    let lp = window_lp(model, x0, horizon);
    match solve_lp(&lp)? {
        LpSolution::Optimal {
            objective_value, ..
        } => Ok(objective_value),
        LpSolution::Infeasible => Err(Error::InternalInfeasible {
            context: "finite-horizon window",
        }),
        LpSolution::Unbounded => Err(Error::InternalUnbounded {
            context: "finite-horizon window",
        }),
    }
}

/// First-stage control of an optimal window solution, i.e. the MPC control.
pub fn window_first_control(
    model: &ArmModel,
    x0: &PopulationVector,
    horizon: usize,
) -> Result<ControlVector> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("window horizon must be >= 1".into()));
    }
    let s = model.num_states();
    let lp = window_lp(model, x0, horizon);
    let z = match solve_lp(&lp)? {
        LpSolution::Optimal { z, .. } => z,
        LpSolution::Infeasible => {
            return Err(Error::InternalInfeasible {
                context: "finite-horizon window",
            })
        }
        LpSolution::Unbounded => {
            return Err(Error::InternalUnbounded {
                context: "finite-horizon window",
            })
        }
    };
    // u(0) occupies the second block of the first stage. Clamp each
    // component into [0, x0_s] so LP round-off cannot leak infeasibility.
    let u: Vec<f64> = (0..s).map(|i| z[s + i].clamp(0.0, x0[i])).collect();
    ControlVector::new(u, model.alpha())
}
