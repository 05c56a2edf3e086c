//! Control rules for the deterministic problem: the maximum alignment
//! coefficient, align-and-steer rules with linear or MPC steering,
//! deterministic trajectories, the delayed-alignment comparison rule and the
//! truncated bias accumulation.
//!
//! Given an optimal stationary point `(x*, u*)`, any state splits as
//! `x = delta(x) x* + (1 - delta(x)) residual` where
//! `delta(x) = max { d >= 0 : x >= d x* }` is the largest mass already
//! aligned with `x*`. The align-and-steer rule keeps that mass stationary via
//! `u*` and applies a steering control to the residual:
//!
//! ```text
//! u(x) = delta(x) u* + (1 - delta(x)) steer( (x - delta(x) x*) / (1 - delta(x)) ) .
//! ```
//!
//! Along any such trajectory `delta` never decreases, and with a reachability
//! certificate `(T0, theta)` the unaligned mass shrinks at least like
//! `(1 - theta)^(t / T0)`.

use crate::cec;
use crate::chain::ReachabilityCertificate;
use crate::model::{phi, ArmModel, ControlVector, PopulationVector};
use crate::stationary::{StationaryPoint, SUPPORT_TOL};
use crate::{Error, Result};

/// Alignments within this distance of 1 are treated as exactly 1, so the
/// 0/0 residual in the steering term never gets evaluated.
pub const FULL_ALIGNMENT_TOL: f64 = 1e-9;

/// Maximum alignment coefficient `delta(x) = min over support of x_s / x*_s`,
/// clamped to `[0, 1]`. It is 0 exactly when some support state of `x*`
/// carries no mass in `x`, and 1 exactly when `x = x*`.
pub fn max_alignment_coef(x: &PopulationVector, x_star: &PopulationVector) -> f64 {
    let mut delta = f64::INFINITY;
    for (&xs, &ts) in x.as_slice().iter().zip(x_star.as_slice()) {
        if ts > SUPPORT_TOL {
            delta = delta.min(xs / ts);
        }
    }
    if delta.is_finite() {
        delta.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// The linear steering control `u = alpha * x`, feasible for every state.
pub fn linear_steer(x: &PopulationVector, alpha: f64) -> ControlVector {
    ControlVector::new(x.as_slice().iter().map(|&v| alpha * v).collect(), alpha)
        .expect("alpha * x always satisfies the budget")
}

/// MPC steering: solve the `t_w`-step window from `x` and keep the first
/// control.
pub fn mpc_steer(model: &ArmModel, x: &PopulationVector, t_w: usize) -> Result<ControlVector> {
    cec::window_first_control(model, x, t_w)
}

/// Which control steers the residual mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteerKind {
    Linear,
    Mpc { window: usize },
}

/// A steering rule bound to the model it steers.
#[derive(Debug, Clone)]
pub struct SteeringRule {
    kind: SteerKind,
    model: ArmModel,
}

impl SteeringRule {
    pub fn linear(model: ArmModel) -> Self {
        SteeringRule {
            kind: SteerKind::Linear,
            model,
        }
    }

    pub fn mpc(model: ArmModel, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidConfig("MPC window must be >= 1".into()));
        }
        Ok(SteeringRule {
            kind: SteerKind::Mpc { window },
            model,
        })
    }

    pub fn kind(&self) -> SteerKind {
        self.kind
    }

    pub fn model(&self) -> &ArmModel {
        &self.model
    }

    pub fn steer(&self, x: &PopulationVector) -> Result<ControlVector> {
        match self.kind {
            SteerKind::Linear => Ok(linear_steer(x, self.model.alpha())),
            SteerKind::Mpc { window } => mpc_steer(&self.model, x, window),
        }
    }
}

/// A stationary deterministic control rule: a map from states to feasible
/// controls.
pub trait ControlRule: Send + Sync {
    fn control(&self, x: &PopulationVector) -> Result<ControlVector>;
}

impl<F> ControlRule for F
where
    F: Fn(&PopulationVector) -> Result<ControlVector> + Send + Sync,
{
    fn control(&self, x: &PopulationVector) -> Result<ControlVector> {
        self(x)
    }
}

/// The align-and-steer rule for a fixed optimal stationary point.
#[derive(Debug, Clone)]
pub struct AlignAndSteer {
    sp: StationaryPoint,
    steering: SteeringRule,
}

impl AlignAndSteer {
    pub fn new(sp: StationaryPoint, steering: SteeringRule) -> Self {
        AlignAndSteer { sp, steering }
    }

    pub fn stationary_point(&self) -> &StationaryPoint {
        &self.sp
    }
}

impl ControlRule for AlignAndSteer {
    fn control(&self, x: &PopulationVector) -> Result<ControlVector> {
        align_and_steer_control(x, &self.sp, &self.steering)
    }
}

/// Evaluates the align-and-steer rule at `x`. At full alignment the rule
/// returns `u*` exactly; otherwise the residual is renormalized onto the
/// simplex and handed to the steering rule.
pub fn align_and_steer_control(
    x: &PopulationVector,
    sp: &StationaryPoint,
    steering: &SteeringRule,
) -> Result<ControlVector> {
    let delta = max_alignment_coef(x, &sp.x_star);
    if 1.0 - delta < FULL_ALIGNMENT_TOL {
        return nearly_aligned_control(x, sp, steering.model().alpha());
    }
    let residual = steering_residual(x, &sp.x_star, delta)?;
    let steer_u = steering.steer(&residual)?;
    let u: Vec<f64> = sp
        .u_star
        .as_slice()
        .iter()
        .zip(steer_u.as_slice())
        .map(|(&us, &ss)| delta * us + (1.0 - delta) * ss)
        .collect();
    ControlVector::new(u, steering.model().alpha())
}

/// Control used inside the `1 - delta < FULL_ALIGNMENT_TOL` cutoff. At exact
/// alignment `u*` is feasible and returned as-is; just below it, states with
/// `u*_s = x*_s` can overshoot `x_s` by up to the cutoff, so `u*` is clamped
/// onto `U(x)` and the (at most `FULL_ALIGNMENT_TOL`) budget shortfall is
/// refilled from the lowest-index states with headroom.
fn nearly_aligned_control(
    x: &PopulationVector,
    sp: &StationaryPoint,
    alpha: f64,
) -> Result<ControlVector> {
    if crate::model::check_feasible(x, &sp.u_star, alpha) {
        return Ok(sp.u_star.clone());
    }
    let mut u: Vec<f64> = sp
        .u_star
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(&us, &xs)| us.min(xs))
        .collect();
    let mut deficit = alpha - u.iter().sum::<f64>();
    for (us, &xs) in u.iter_mut().zip(x.as_slice()) {
        if deficit <= 0.0 {
            break;
        }
        let add = (xs - *us).max(0.0).min(deficit);
        *us += add;
        deficit -= add;
    }
    ControlVector::new(u, alpha)
}

/// `(x - delta x*) / (1 - delta)`, clamped at 0 and renormalized so that
/// division by a small `1 - delta` cannot push the sum off the simplex.
fn steering_residual(
    x: &PopulationVector,
    x_star: &PopulationVector,
    delta: f64,
) -> Result<PopulationVector> {
    let raw: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(x_star.as_slice())
        .map(|(&xs, &ts)| (xs - delta * ts).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    debug_assert!(total > 0.0, "residual mass vanished at delta = {delta}");
    PopulationVector::new(raw.iter().map(|&v| v / total).collect())
}

/// Rolls out `rule` deterministically for `horizon` steps from `x0`,
/// returning the visited `(x(t), u(t))` pairs for `t < horizon`.
pub fn deterministic_trajectory(
    model: &ArmModel,
    rule: &dyn ControlRule,
    x0: &PopulationVector,
    horizon: usize,
) -> Result<Vec<(PopulationVector, ControlVector)>> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(horizon);
    let mut x = x0.clone();
    for t in 0..horizon {
        let u = rule.control(&x).map_err(|e| Error::at_step(t, e))?;
        let next = phi(model, &x, &u).map_err(|e| Error::at_step(t, e))?;
        out.push((x, u));
        x = next;
    }
    Ok(out)
}

/// The delayed-alignment comparison rule: the aligned mass is frozen at
/// `delta(x(k T0))` for each block of `T0` steps (re-evaluated only at block
/// boundaries) while the residual follows the linear control. The rule is
/// non-stationary and exists to be compared against align-and-steer; it is
/// never used as a bandit policy. Returns `(x(t), delta(x(t)))` for
/// `t < horizon`.
pub fn delayed_align_trajectory(
    model: &ArmModel,
    sp: &StationaryPoint,
    certificate: Option<&ReachabilityCertificate>,
    x0: &PopulationVector,
    horizon: usize,
) -> Result<Vec<(PopulationVector, f64)>> {
    let cert = certificate.ok_or(Error::MissingCertificate)?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be >= 1".into()));
    }
    let alpha = model.alpha();
    let mut out = Vec::with_capacity(horizon);
    let mut x = x0.clone();
    let mut frozen = 0.0;
    for t in 0..horizon {
        let delta_now = max_alignment_coef(&x, &sp.x_star);
        if t % cert.t0 == 0 {
            frozen = delta_now;
        }
        out.push((x.clone(), delta_now));
        let u = if 1.0 - frozen < FULL_ALIGNMENT_TOL {
            nearly_aligned_control(&x, sp, alpha)?
        } else {
            let residual = steering_residual(&x, &sp.x_star, frozen)?;
            let steer_u = linear_steer(&residual, alpha);
            ControlVector::new(
                sp.u_star
                    .as_slice()
                    .iter()
                    .zip(steer_u.as_slice())
                    .map(|(&us, &ss)| frozen * us + (1.0 - frozen) * ss)
                    .collect(),
                alpha,
            )?
        };
        x = phi(model, &x, &u).map_err(|e| Error::at_step(t, e))?;
    }
    Ok(out)
}

/// Accumulated deviation of a rule's trajectory from the stationary point,
/// truncated at a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasVector {
    /// Concatenated state and control accumulations, length `2 S`:
    /// `g[s] = sum_t (x(t)_s - x*_s)`, `g[S+s] = sum_t (u(t)_s - u*_s)`.
    pub g: Vec<f64>,
    /// Number of summed steps.
    pub horizon: usize,
}

impl BiasVector {
    pub fn l1_norm(&self) -> f64 {
        crate::linalg::l1_norm(&self.g)
    }
}

/// Sums `(x(t), u(t)) - (x*, u*)` over `t < horizon` along the rule's
/// deterministic trajectory from `x0`.
pub fn bias_truncated(
    model: &ArmModel,
    rule: &dyn ControlRule,
    x0: &PopulationVector,
    sp: &StationaryPoint,
    horizon: usize,
) -> Result<BiasVector> {
    let s = model.num_states();
    let trajectory = deterministic_trajectory(model, rule, x0, horizon)?;
    let mut g = vec![0.0; 2 * s];
    for (x, u) in &trajectory {
        for i in 0..s {
            g[i] += x[i] - sp.x_star[i];
            g[s + i] += u[i] - sp.u_star[i];
        }
    }
    Ok(BiasVector { g, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{default_certificate_cap, find_certificate};
    use crate::fixtures::{four_state_model, identity_model};
    use crate::linalg::{l1_dist, linf_dist, Mat};
    use crate::model::{check_feasible, ArmModel};
    use crate::stationary::solve_refined_static;

    fn four_state_sp() -> (ArmModel, StationaryPoint) {
        let model = four_state_model();
        let x_init = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let sp = solve_refined_static(&model, &x_init).unwrap();
        (model, sp)
    }

    #[test]
    fn alignment_coefficient_examples() {
        let x_star = PopulationVector::new(vec![0.25; 4]).unwrap();
        assert_eq!(max_alignment_coef(&x_star, &x_star), 1.0);

        let x = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        assert_eq!(max_alignment_coef(&x, &x_star), 0.0);

        let x = PopulationVector::new(vec![0.5, 0.5]).unwrap();
        let t = PopulationVector::new(vec![0.25, 0.75]).unwrap();
        let delta = max_alignment_coef(&x, &t);
        assert!((delta - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_matches_grid_search_oracle() {
        // Independent oracle: scan delta over a 1e-6 grid for the largest
        // value keeping x - delta * x* nonnegative.
        let x = PopulationVector::new(vec![0.5, 0.5]).unwrap();
        let t = PopulationVector::new(vec![0.25, 0.75]).unwrap();
        let mut best = 0.0;
        let mut d = 0.0;
        while d <= 1.0 {
            if x.as_slice()
                .iter()
                .zip(t.as_slice())
                .all(|(&xs, &ts)| xs - d * ts >= -1e-12)
            {
                best = d;
            }
            d += 1e-6;
        }
        assert!((best - max_alignment_coef(&x, &t)).abs() < 2e-6);
    }

    #[test]
    fn align_and_steer_at_full_alignment_returns_u_star() {
        let (model, sp) = four_state_sp();
        let steering = SteeringRule::linear(model);
        let u = align_and_steer_control(&sp.x_star.clone(), &sp, &steering).unwrap();
        assert_eq!(u, sp.u_star);
    }

    #[test]
    fn align_and_steer_reduces_to_linear_at_zero_alignment() {
        let (model, sp) = four_state_sp();
        let x = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let steering = SteeringRule::linear(model);
        let u = align_and_steer_control(&x, &sp, &steering).unwrap();
        assert!(linf_dist(u.as_slice(), &[0.2, 0.0, 0.3, 0.0]) < 1e-12);
    }

    #[test]
    fn align_and_steer_decomposes_as_advertised() {
        let (model, sp) = four_state_sp();
        let alpha = model.alpha();
        let x = PopulationVector::new(vec![0.3, 0.35, 0.25, 0.1]).unwrap();
        let steering = SteeringRule::linear(model);
        let u = align_and_steer_control(&x, &sp, &steering).unwrap();
        assert!(check_feasible(&x, &u, alpha));

        // Recompute delta and the residual control independently.
        let delta = x
            .as_slice()
            .iter()
            .zip(sp.x_star.as_slice())
            .map(|(&xs, &ts)| xs / ts)
            .fold(f64::INFINITY, f64::min);
        let residual: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(sp.x_star.as_slice())
            .map(|(&xs, &ts)| (xs - delta * ts) / (1.0 - delta))
            .collect();
        let expected: Vec<f64> = sp
            .u_star
            .as_slice()
            .iter()
            .zip(&residual)
            .map(|(&us, &rs)| delta * us + (1.0 - delta) * alpha * rs)
            .collect();
        assert!(linf_dist(u.as_slice(), &expected) < 1e-12);

        // The residual part must itself be feasible for the residual state.
        let res_pop = PopulationVector::new(residual.clone()).unwrap();
        let res_u = ControlVector::new(residual.iter().map(|&r| alpha * r).collect(), alpha).unwrap();
        assert!(check_feasible(&res_pop, &res_u, alpha));
    }

    #[test]
    fn linear_steer_budget_is_exact() {
        for x in [
            PopulationVector::new(vec![1.0, 0.0]).unwrap(),
            PopulationVector::new(vec![0.25; 4]).unwrap(),
            PopulationVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        ] {
            let u = linear_steer(&x, 0.5);
            assert!((u.budget() - 0.5).abs() < 1e-12);
            assert!(check_feasible(&x, &u, 0.5));
        }
    }

    #[test]
    fn linear_rule_trajectory_matches_matrix_powers() {
        let (model, _) = four_state_sp();
        let alpha = model.alpha();
        let x0 = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let rule = move |x: &PopulationVector| Ok(linear_steer(x, alpha));
        let trajectory = deterministic_trajectory(&model, &rule, &x0, 30).unwrap();

        // Independent oracle: x(t) = x0 * (P^alpha)^t via explicit powers.
        let p_alpha = model.p_alpha();
        let mut power = Mat::identity(4);
        for (t, (x, _)) in trajectory.iter().enumerate() {
            let expected = power.vecmat(x0.as_slice());
            assert!(
                linf_dist(x.as_slice(), &expected) < 1e-10,
                "mismatch at t = {t}"
            );
            power = power.matmul(&p_alpha);
        }
    }

    #[test]
    fn constant_rule_at_stationary_point_stays_put() {
        let (model, sp) = four_state_sp();
        let u_star = sp.u_star.clone();
        let rule = move |_: &PopulationVector| Ok(u_star.clone());
        let trajectory = deterministic_trajectory(&model, &rule, &sp.x_star, 10).unwrap();
        for (x, _) in &trajectory {
            assert!(linf_dist(x.as_slice(), sp.x_star.as_slice()) < 1e-9);
        }
    }

    #[test]
    fn delta_is_monotone_along_align_and_steer() {
        let (model, sp) = four_state_sp();
        let x0 = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        let trajectory = deterministic_trajectory(&model, &rule, &x0, 150).unwrap();
        let mut prev = -1.0;
        for (x, u) in &trajectory {
            assert!(check_feasible(x, u, model.alpha()));
            let d = max_alignment_coef(x, &sp.x_star);
            assert!(d >= prev - 1e-9, "delta dropped from {prev} to {d}");
            prev = d;
        }
    }

    #[test]
    fn delayed_alignment_requires_certificate_and_obeys_bounds() {
        let (model, sp) = four_state_sp();
        let x0 = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        assert!(matches!(
            delayed_align_trajectory(&model, &sp, None, &x0, 10),
            Err(Error::MissingCertificate)
        ));

        let cert = find_certificate(&model, &sp, default_certificate_cap(4)).unwrap();
        let horizon = 20 * cert.t0;
        let delayed =
            delayed_align_trajectory(&model, &sp, Some(&cert), &x0, horizon).unwrap();
        let delta0 = delayed[0].1;

        // Geometric lower bound on alignment at block boundaries.
        for k in 0..horizon / cert.t0 {
            let (_, d) = delayed[k * cert.t0];
            let bound = 1.0 - (1.0 - delta0) * (1.0 - cert.theta).powi(k as i32);
            assert!(
                1.0 - d <= (1.0 - delta0) * (1.0 - cert.theta).powi(k as i32) + 1e-9,
                "k = {k}: delta {d} below bound {bound}"
            );
        }

        // Delaying alignment never beats aligning eagerly.
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        let aligned = deterministic_trajectory(&model, &rule, &x0, horizon).unwrap();
        for (t, ((_, d_delay), (x, _))) in delayed.iter().zip(&aligned).enumerate() {
            let d_align = max_alignment_coef(x, &sp.x_star);
            assert!(
                *d_delay <= d_align + 1e-9,
                "t = {t}: delayed {d_delay} exceeds aligned {d_align}"
            );
        }
    }

    #[test]
    fn delayed_alignment_from_x_star_stays_fully_aligned() {
        let (model, sp) = four_state_sp();
        let cert = find_certificate(&model, &sp, 64).unwrap();
        let out =
            delayed_align_trajectory(&model, &sp, Some(&cert), &sp.x_star.clone(), 12).unwrap();
        for (_, d) in &out {
            assert!((d - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bias_is_zero_at_the_stationary_point() {
        let (model, sp) = four_state_sp();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        for horizon in [1, 5, 50] {
            let bias = bias_truncated(&model, &rule, &sp.x_star.clone(), &sp, horizon).unwrap();
            assert!(bias.l1_norm() < 1e-9, "horizon {horizon}");
        }
    }

    #[test]
    fn bias_tail_obeys_the_certificate_bound() {
        let (model, sp) = four_state_sp();
        let x0 = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let cert = find_certificate(&model, &sp, 64).unwrap();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        let delta0 = max_alignment_coef(&x0, &sp.x_star);

        // Tail bound 2 (1 + alpha) (1 - delta0) (1 - theta)^k T0 / theta
        // with k completed blocks; |G(2T) - G(T)| sums part of that tail.
        for horizon in [25usize, 50, 100, 200] {
            let g_t = bias_truncated(&model, &rule, &x0, &sp, horizon).unwrap();
            let g_2t = bias_truncated(&model, &rule, &x0, &sp, 2 * horizon).unwrap();
            let diff = l1_dist(&g_2t.g, &g_t.g);
            let k = (horizon / cert.t0) as i32;
            let bound = 2.0 * (1.0 + model.alpha()) * (1.0 - delta0)
                * (1.0 - cert.theta).powi(k)
                * cert.t0 as f64
                / cert.theta;
            assert!(diff <= bound + 1e-9, "horizon {horizon}: {diff} > {bound}");
        }
    }

    #[test]
    fn bias_tail_vanishes_geometrically_at_scale() {
        // The doubling-window tails |G(2T) - G(T)| shrink geometrically once
        // the per-step alignment gain dominates the doubling window length.
        let (model, sp) = four_state_sp();
        let x0 = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        let diffs: Vec<f64> = [200usize, 400, 800]
            .iter()
            .map(|&horizon| {
                let g_t = bias_truncated(&model, &rule, &x0, &sp, horizon).unwrap();
                let g_2t = bias_truncated(&model, &rule, &x0, &sp, 2 * horizon).unwrap();
                l1_dist(&g_2t.g, &g_t.g)
            })
            .collect();
        let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
        for (i, r) in ratios.iter().enumerate() {
            assert!(*r < 1.0, "tail not shrinking at step {i}: {diffs:?}");
        }
        assert!(
            ratios[1] <= ratios[0] + 0.05,
            "decay is not geometric: ratios {ratios:?}"
        );
    }

    #[test]
    fn bias_is_continuous_in_the_start_state() {
        // Diagnostic probe: nearby starts give nearby truncated biases.
        let (model, sp) = four_state_sp();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        let x_a = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let x_b = PopulationVector::new(vec![0.3995, 0.0005, 0.6, 0.0]).unwrap();
        let g_a = bias_truncated(&model, &rule, &x_a, &sp, 200).unwrap();
        let g_b = bias_truncated(&model, &rule, &x_b, &sp, 200).unwrap();
        let dist = l1_dist(&g_a.g, &g_b.g);
        assert!(dist < 0.5, "bias jumped by {dist} for a 1e-3 perturbation");
    }

    #[test]
    fn mpc_steering_after_full_alignment_is_u_star() {
        let (model, sp) = four_state_sp();
        let steering = SteeringRule::mpc(model.clone(), 10).unwrap();
        let u = align_and_steer_control(&sp.x_star.clone(), &sp, &steering).unwrap();
        assert_eq!(u, sp.u_star);
    }

    #[test]
    fn mpc_alignment_is_monotone_on_a_short_run() {
        let (model, sp) = four_state_sp();
        let x0 = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::mpc(model.clone(), 15).unwrap());
        let trajectory = deterministic_trajectory(&model, &rule, &x0, 25).unwrap();
        let mut prev = -1.0;
        for (x, u) in &trajectory {
            assert!(check_feasible(x, u, model.alpha()));
            let d = max_alignment_coef(x, &sp.x_star);
            assert!(d >= prev - 1e-9);
            prev = d;
        }
    }

    #[test]
    fn identity_model_alignment_is_frozen() {
        // Identity dynamics cannot move mass, so align-and-steer from the
        // refined optimum x* = x_init is already fully aligned.
        let model = identity_model();
        let x_init = PopulationVector::new(vec![0.3, 0.7]).unwrap();
        let sp = solve_refined_static(&model, &x_init).unwrap();
        let rule = AlignAndSteer::new(sp.clone(), SteeringRule::linear(model.clone()));
        let trajectory = deterministic_trajectory(&model, &rule, &x_init, 5).unwrap();
        for (x, _) in &trajectory {
            assert!((max_alignment_coef(x, &sp.x_star) - 1.0).abs() < 1e-9);
        }
    }
}
