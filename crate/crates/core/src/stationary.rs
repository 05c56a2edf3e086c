//! The refined and conventional static problems and optimal stationary
//! points.
//!
//! A stationary point is a pair `(x, u)` with `u` feasible for `x` and
//! `x = phi(x, u)`. The *refined* static problem maximizes `R(x, u)` over
//! stationary points together with nonnegative deviation vectors `h0, h1`
//! tying the stationary state to the initial state:
//!
//! ```text
//! x + h0 + h1 - h0·P0 - h1·P1 = x_init .
//! ```
//!
//! The *conventional* static problem drops the deviation constraint and only
//! keeps `x · 1 = 1`; it is a relaxation of the refined problem, and the two
//! coincide for unichain models. Multichain models need the refined version:
//! its optimum is the long-run value actually attainable from `x_init`.
//!
//! Both problems are encoded as LPs over the action frequencies
//! `y = x - u >= 0` (passive) and `u >= 0` (active), which turns the
//! componentwise constraint `u <= x` into plain variable bounds.

use crate::linalg::{linf_dist, Mat};
use crate::lp::{solve_lp, LinearProgram, LpSolution};
use crate::model::{
    check_feasible, phi_unchecked, reward_unchecked, ArmModel, ControlVector, PopulationVector,
};
use crate::{Error, Result};

/// States with stationary mass above this threshold count as support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// An optimal stationary point of a static problem.
///
/// `x_init` is the initial state the refined problem was solved for, `None`
/// for the conventional problem (whose `h0`/`h1` are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub x_star: PopulationVector,
    pub u_star: ControlVector,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub value: f64,
    pub x_init: Option<PopulationVector>,
}

impl StationaryPoint {
    /// Support of the stationary state: `{ s : x*_s > SUPPORT_TOL }`.
    pub fn support(&self) -> Vec<usize> {
        self.x_star
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > SUPPORT_TOL)
            .map(|(s, _)| s)
            .collect()
    }
}

/// Solves the refined static problem for `x_init`.
pub fn solve_refined_static(model: &ArmModel, x_init: &PopulationVector) -> Result<StationaryPoint> {
    if x_init.len() != model.num_states() {
        return Err(Error::DimensionMismatch {
            what: "x_init length".into(),
            expected: model.num_states(),
            got: x_init.len(),
        });
    }
    let s = model.num_states();
    let lp = refined_lp(model, x_init);
    let solution = solve_lp(&lp)?;
    let z = expect_optimal(solution, "refined static problem")?;
    let (x, u) = split_frequencies(model, &z[0..s], &z[s..2 * s])?;
    let value = reward_unchecked(model, x.as_slice(), u.as_slice());
    Ok(StationaryPoint {
        x_star: x,
        u_star: u,
        h0: z[2 * s..3 * s].to_vec(),
        h1: z[3 * s..4 * s].to_vec(),
        value,
        x_init: Some(x_init.clone()),
    })
}

/// Solves the conventional static problem (no deviation variables).
pub fn solve_conventional_static(model: &ArmModel) -> Result<StationaryPoint> {
    let s = model.num_states();
    let lp = conventional_lp(model);
    let solution = solve_lp(&lp)?;
    let z = expect_optimal(solution, "conventional static problem")?;
    let (x, u) = split_frequencies(model, &z[0..s], &z[s..2 * s])?;
    let value = reward_unchecked(model, x.as_slice(), u.as_slice());
    Ok(StationaryPoint {
        x_star: x,
        u_star: u,
        h0: vec![0.0; s],
        h1: vec![0.0; s],
        value,
        x_init: None,
    })
}

/// Finds nonnegative deviation vectors `(h0, h1)` linking a given stationary
/// state to `x_init`, when they exist. Useful for verifying externally
/// supplied stationary points against the refined constraints.
pub fn fit_deviation(
    model: &ArmModel,
    x_star: &PopulationVector,
    x_init: &PopulationVector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = model.num_states();
    // Feasibility LP in (h0, h1): h0 (I - P0) + h1 (I - P1) = x_init - x*.
    let mut a = Mat::zeros(s, 2 * s);
    for j in 0..s {
        for i in 0..s {
            let d = if i == j { 1.0 } else { 0.0 };
            a.set(i, j, d - model.p0().get(j, i));
            a.set(i, s + j, d - model.p1().get(j, i));
        }
    }
    let rhs: Vec<f64> = x_init
        .as_slice()
        .iter()
        .zip(x_star.as_slice())
        .map(|(xi, xs)| xi - xs)
        .collect();
    let lp = LinearProgram {
        objective: vec![0.0; 2 * s],
        a,
        rhs,
        lower: vec![0.0; 2 * s],
        upper: vec![f64::INFINITY; 2 * s],
    };
    let z = match solve_lp(&lp)? {
        LpSolution::Optimal { z, .. } => z,
        LpSolution::Infeasible => {
            return Err(Error::InternalInfeasible {
                context: "deviation fit: no nonnegative (h0, h1) links x* to x_init",
            })
        }
        LpSolution::Unbounded => {
            return Err(Error::InternalUnbounded {
                context: "deviation fit",
            })
        }
    };
    Ok((z[0..s].to_vec(), z[s..2 * s].to_vec()))
}

/// Outcome of checking a stationary point against its invariants.
#[derive(Debug, Clone, Default)]
pub struct VerifyOutcome {
    pub violations: Vec<String>,
}

impl VerifyOutcome {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks all stationary-point invariants at the documented tolerances and
/// reports each violation: stationarity (`1e-7`), feasibility of `u`,
/// the deviation identity (`1e-7`, when `x_init` is present) and value
/// consistency (`1e-9`).
pub fn verify_stationary_point(model: &ArmModel, sp: &StationaryPoint) -> VerifyOutcome {
    let mut violations = Vec::new();
    let x = sp.x_star.as_slice();
    let u = sp.u_star.as_slice();
    if x.len() != model.num_states() || u.len() != model.num_states() {
        violations.push("dimension mismatch with model".to_string());
        return VerifyOutcome { violations };
    }

    let next = phi_unchecked(model, x, u);
    let drift = linf_dist(&next, x);
    if drift > 1e-7 {
        violations.push(format!("stationarity violated: |phi(x,u) - x| = {drift:.3e}"));
    }

    if !check_feasible(&sp.x_star, &sp.u_star, model.alpha()) {
        violations.push(format!(
            "control infeasible: budget {:.12}, alpha {}",
            sp.u_star.budget(),
            model.alpha()
        ));
    }

    if let Some(ref x_init) = sp.x_init {
        let residual = deviation_residual(model, x, &sp.h0, &sp.h1, x_init);
        if residual > 1e-7 {
            violations.push(format!(
                "deviation identity violated: max residual {residual:.3e}"
            ));
        }
        if sp.h0.iter().chain(&sp.h1).any(|&h| h < -1e-9) {
            violations.push("negative deviation component".to_string());
        }
    }

    let r = reward_unchecked(model, x, u);
    if (r - sp.value).abs() > 1e-9 {
        violations.push(format!(
            "value mismatch: R(x*,u*) = {r}, recorded {}",
            sp.value
        ));
    }

    VerifyOutcome { violations }
}

/// Max-norm residual of `x + h0 + h1 - h0 P0 - h1 P1 - x_init`.
fn deviation_residual(
    model: &ArmModel,
    x: &[f64],
    h0: &[f64],
    h1: &[f64],
    x_init: &PopulationVector,
) -> f64 {
    let h0p = model.p0().vecmat(h0);
    let h1p = model.p1().vecmat(h1);
    (0..x.len())
        .map(|i| (x[i] + h0[i] + h1[i] - h0p[i] - h1p[i] - x_init[i]).abs())
        .fold(0.0, f64::max)
}

// ── LP encodings ─────────────────────────────────────────────────────────

/// Variables `[y, u, h0, h1]`, all nonnegative. Rows: S stationarity rows,
/// one budget row, S deviation rows.
fn refined_lp(model: &ArmModel, x_init: &PopulationVector) -> LinearProgram {
    let s = model.num_states();
    let n = 4 * s;
    let m = 2 * s + 1;
    let mut a = Mat::zeros(m, n);
    let mut rhs = vec![0.0; m];

    for i in 0..s {
        for j in 0..s {
            let d = if i == j { 1.0 } else { 0.0 };
            // Stationarity: y + u - y P0 - u P1 = 0.
            a.set(i, j, d - model.p0().get(j, i));
            a.set(i, s + j, d - model.p1().get(j, i));
            // Deviation: (y + u) + h0 (I - P0) + h1 (I - P1) = x_init.
            let r = s + 1 + i;
            a.set(r, 2 * s + j, d - model.p0().get(j, i));
            a.set(r, 3 * s + j, d - model.p1().get(j, i));
        }
        a.set(s + 1 + i, i, 1.0);
        a.set(s + 1 + i, s + i, 1.0);
        a.set(s, s + i, 1.0); // budget row: sum(u) = alpha
        rhs[s + 1 + i] = x_init[i];
    }
    rhs[s] = model.alpha();

    LinearProgram {
        objective: objective_yu(model, n),
        a,
        rhs,
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
    }
}

/// Variables `[y, u]`. Rows: S stationarity rows, budget, total mass.
fn conventional_lp(model: &ArmModel) -> LinearProgram {
    let s = model.num_states();
    let n = 2 * s;
    let m = s + 2;
    let mut a = Mat::zeros(m, n);
    let mut rhs = vec![0.0; m];
    for i in 0..s {
        for j in 0..s {
            let d = if i == j { 1.0 } else { 0.0 };
            a.set(i, j, d - model.p0().get(j, i));
            a.set(i, s + j, d - model.p1().get(j, i));
        }
        a.set(s, s + i, 1.0);
        a.set(s + 1, i, 1.0);
        a.set(s + 1, s + i, 1.0);
    }
    rhs[s] = model.alpha();
    rhs[s + 1] = 1.0;
    LinearProgram {
        objective: objective_yu(model, n),
        a,
        rhs,
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
    }
}

fn objective_yu(model: &ArmModel, n: usize) -> Vec<f64> {
    let s = model.num_states();
    let mut c = vec![0.0; n];
    c[..s].copy_from_slice(model.r0());
    c[s..2 * s].copy_from_slice(model.r1());
    c
}

fn expect_optimal(solution: LpSolution, context: &'static str) -> Result<Vec<f64>> {
    match solution {
        LpSolution::Optimal { z, .. } => Ok(z),
        LpSolution::Infeasible => Err(Error::InternalInfeasible { context }),
        LpSolution::Unbounded => Err(Error::InternalUnbounded { context }),
    }
}

fn split_frequencies(
    model: &ArmModel,
    y: &[f64],
    u: &[f64],
) -> Result<(PopulationVector, ControlVector)> {
    let x: Vec<f64> = y.iter().zip(u).map(|(ys, us)| ys.max(0.0) + us).collect();
    let x = PopulationVector::new(x)?;
    let u = ControlVector::new(u.to_vec(), model.alpha())?;
    Ok((x, u))
}
