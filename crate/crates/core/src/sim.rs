//! Monte Carlo simulation of the stochastic N-armed bandit.
//!
//! One step moves every arm independently: the `N (X_s - U_s)` passive arms
//! in state `s` follow row `s` of `P0` and the `N U_s` active arms follow
//! `P1`, so the next population is a sum of multinomials with conditional
//! mean `phi(X, U)`. Replications use independent RNG sub-streams keyed by
//! `(seed, replication, step)` and are merged by replication index, which
//! makes results independent of thread scheduling.
//!
//! The module also estimates the transition-noise statistics
//! `E = X(t+1) - phi(X(t), U(t))` and provides an exact brute-force dynamic
//! program over the grid state space for tiny instances, used as the
//! reference point for the deterministic upper bound.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::cec;
use crate::control::max_alignment_coef;
use crate::linalg::l1_norm;
use crate::model::{alpha_units, ArmModel, GridControl, GridPopulation};
use crate::policy::InducedPolicy;
use crate::rngs::{substream, DOMAIN_NOISE, DOMAIN_ROUNDING, DOMAIN_TRANSITION};
use crate::stationary::StationaryPoint;
use crate::{Error, Result};

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub n: u64,
    /// Steps per replication.
    pub horizon: usize,
    /// Leading steps excluded from the reward average.
    pub burn_in: usize,
    pub seed: u64,
    pub replications: usize,
    /// Stride for recording the alignment trace; 0 disables recording.
    pub record_delta_every: usize,
}

impl SimConfig {
    pub fn validate(&self, alpha: f64) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "burn_in {} must be smaller than the horizon {}",
                self.burn_in, self.horizon
            )));
        }
        if alpha_units(alpha, self.n).is_none() {
            return Err(Error::AlphaTimesNNotIntegral {
                alpha,
                n: self.n,
            });
        }
        Ok(())
    }
}

/// Estimated long-run average reward with its dispersion across
/// replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Per-arm per-step reward, averaged over time (after burn-in) and
    /// replications.
    pub mean_reward: f64,
    /// Standard error of `mean_reward` across replications.
    pub std_error: f64,
    /// Alignment trace `(t, delta(X(t)))` from the first replication, when
    /// requested and a stationary point is attached.
    pub delta_trace: Option<Vec<(usize, f64)>>,
    pub per_replication_means: Vec<f64>,
}

/// Samples one bandit transition: per-state multinomial draws via
/// sequential binomial conditioning, summed into the next population.
pub fn sample_transition(
    model: &ArmModel,
    x: &GridPopulation,
    u: &GridControl,
    rng: &mut ChaCha8Rng,
) -> Result<GridPopulation> {
    if !u.feasible_for(x, model.alpha()) {
        return Err(Error::InfeasibleControl {
            detail: "grid control is not feasible for the grid state".into(),
        });
    }
    let s = model.num_states();
    let mut next = vec![0u64; s];
    for state in 0..s {
        let active = u.counts()[state];
        let passive = x.counts()[state] - active;
        multinomial_into(rng, passive, model.p0().row(state), &mut next);
        multinomial_into(rng, active, model.p1().row(state), &mut next);
    }
    debug_assert_eq!(next.iter().sum::<u64>(), x.n(), "arm conservation");
    GridPopulation::from_counts(next, x.n())
}

/// Draws a multinomial by conditioning one binomial per category.
fn multinomial_into(rng: &mut ChaCha8Rng, n: u64, probs: &[f64], out: &mut [u64]) {
    let mut remaining = n;
    let mut mass_left = 1.0;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j == last {
            out[j] += remaining;
            break;
        }
        let q = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("q in (0,1)")
                .sample(rng)
        };
        out[j] += draw;
        remaining -= draw;
        mass_left -= p;
    }
}

/// Simulates the induced policy and estimates its long-run average reward.
///
/// Replications run concurrently on independent `(seed, rep, t)` sub-streams
/// and merge by index: identical inputs give bit-identical results whatever
/// the thread count. The alignment trace is taken from replication 0 against
/// `delta_target`, at the stride configured in `cfg`.
pub fn run_policy(
    model: &ArmModel,
    policy: &InducedPolicy,
    x0: &GridPopulation,
    cfg: &SimConfig,
    delta_target: Option<&StationaryPoint>,
) -> Result<SimResult> {
    cfg.validate(model.alpha())?;
    if x0.n() != cfg.n || policy.n() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "arm count mismatch: X0 has N = {}, policy N = {}, config N = {}",
            x0.n(),
            policy.n(),
            cfg.n
        )));
    }

    let runs: Vec<(f64, Option<Vec<(usize, f64)>>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(model, policy, x0, cfg, delta_target, rep))
        .collect::<Result<Vec<_>>>()?;

    let per_replication_means: Vec<f64> = runs.iter().map(|(m, _)| *m).collect();
    let delta_trace = runs.into_iter().next().and_then(|(_, trace)| trace);
    let mean_reward =
        per_replication_means.iter().sum::<f64>() / per_replication_means.len() as f64;
    let std_error = if per_replication_means.len() > 1 {
        let k = per_replication_means.len() as f64;
        let var = per_replication_means
            .iter()
            .map(|m| (m - mean_reward).powi(2))
            .sum::<f64>()
            / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(SimResult {
        mean_reward,
        std_error,
        delta_trace,
        per_replication_means,
    })
}

fn run_replication(
    model: &ArmModel,
    policy: &InducedPolicy,
    x0: &GridPopulation,
    cfg: &SimConfig,
    delta_target: Option<&StationaryPoint>,
    rep: usize,
) -> Result<(f64, Option<Vec<(usize, f64)>>)> {
    let record = rep == 0 && cfg.record_delta_every > 0 && delta_target.is_some();
    let mut trace = record.then(Vec::new);
    let mut x = x0.clone();
    let mut total = 0.0;
    for t in 0..cfg.horizon {
        let mut round_rng = substream(cfg.seed, DOMAIN_ROUNDING, rep as u64, t as u64);
        let u = policy
            .step(&x, &mut round_rng)
            .map_err(|e| Error::at_step(t, e))?;
        let x_pop = x.to_population();
        let r = crate::model::reward(model, &x_pop, &u.to_control(model.alpha())?)
            .map_err(|e| Error::at_step(t, e))?;
        if t >= cfg.burn_in {
            total += r;
        }
        if let (Some(trace), Some(sp)) = (trace.as_mut(), delta_target) {
            if t % cfg.record_delta_every == 0 {
                trace.push((t, max_alignment_coef(&x_pop, &sp.x_star)));
            }
        }
        let mut trans_rng = substream(cfg.seed, DOMAIN_TRANSITION, rep as u64, t as u64);
        x = sample_transition(model, &x, &u, &mut trans_rng).map_err(|e| Error::at_step(t, e))?;
    }
    let mean = total / (cfg.horizon - cfg.burn_in) as f64;
    Ok((mean, trace))
}

/// Empirical summary of the transition noise `E = X' - phi(X, U)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseStats {
    /// L1 norm of the empirical mean of `E` (should shrink like
    /// `1/sqrt(reps)` since the noise is centered).
    pub mean_l1_of_mean: f64,
    /// Empirical mean of `|E|_1`.
    pub mean_l1: f64,
    /// Standard error of `mean_l1`.
    pub mean_l1_se: f64,
    /// Empirical frequency of `|E|_1 >= xi`.
    pub tail_freq: f64,
    /// Standard error of `tail_freq`.
    pub tail_se: f64,
    pub xi: f64,
    pub reps: usize,
}

/// Draws `reps` independent transitions from `(x, u)` and summarizes the
/// noise against the threshold `xi`.
pub fn noise_stats(
    model: &ArmModel,
    x: &GridPopulation,
    u: &GridControl,
    seed: u64,
    reps: usize,
    xi: f64,
) -> Result<NoiseStats> {
    if reps < 2 {
        return Err(Error::InvalidConfig("noise stats need reps >= 2".into()));
    }
    let x_pop = x.to_population();
    let u_ctrl = u.to_control(model.alpha())?;
    let mean_next = crate::model::phi(model, &x_pop, &u_ctrl)?;
    let s = model.num_states();

    let samples: Vec<(Vec<f64>, f64)> = (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, DOMAIN_NOISE, k as u64, 0);
            let next = sample_transition(model, x, u, &mut rng)?;
            let noise: Vec<f64> = next
                .to_population()
                .as_slice()
                .iter()
                .zip(mean_next.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let norm = l1_norm(&noise);
            Ok((noise, norm))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean_noise = vec![0.0; s];
    let mut sum_norm = 0.0;
    let mut sum_norm_sq = 0.0;
    let mut tail_hits = 0usize;
    for (noise, norm) in &samples {
        for (m, v) in mean_noise.iter_mut().zip(noise) {
            *m += v / reps as f64;
        }
        sum_norm += norm;
        sum_norm_sq += norm * norm;
        if *norm >= xi {
            tail_hits += 1;
        }
    }
    let mean_l1 = sum_norm / reps as f64;
    let var = (sum_norm_sq - reps as f64 * mean_l1 * mean_l1) / (reps as f64 - 1.0);
    let mean_l1_se = (var.max(0.0) / reps as f64).sqrt();
    let tail_freq = tail_hits as f64 / reps as f64;
    let tail_se = (tail_freq * (1.0 - tail_freq) / reps as f64).sqrt();
    Ok(NoiseStats {
        mean_l1_of_mean: l1_norm(&mean_noise),
        mean_l1,
        mean_l1_se,
        tail_freq,
        tail_se,
        xi,
        reps,
    })
}

/// One recorded step of a single simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: usize,
    /// Alignment with the attached stationary state; absent when recording
    /// is configured off.
    pub delta: Option<f64>,
    pub reward: f64,
}

/// Simulates a single run (replication 0 of `cfg.seed`) and records the
/// instantaneous reward, plus the alignment when `cfg.record_delta_every`
/// is positive. With a positive stride, rows appear every `stride` steps;
/// with stride 0 every step is recorded without the alignment column.
pub fn run_trajectory(
    model: &ArmModel,
    policy: &InducedPolicy,
    x0: &GridPopulation,
    cfg: &SimConfig,
    sp: &StationaryPoint,
) -> Result<Vec<TrajectoryPoint>> {
    cfg.validate(model.alpha())?;
    if x0.n() != cfg.n || policy.n() != cfg.n {
        return Err(Error::InvalidConfig("arm count mismatch".into()));
    }
    let mut out = Vec::new();
    let mut x = x0.clone();
    for t in 0..cfg.horizon {
        let mut round_rng = substream(cfg.seed, DOMAIN_ROUNDING, 0, t as u64);
        let u = policy
            .step(&x, &mut round_rng)
            .map_err(|e| Error::at_step(t, e))?;
        let x_pop = x.to_population();
        let r = crate::model::reward(model, &x_pop, &u.to_control(model.alpha())?)
            .map_err(|e| Error::at_step(t, e))?;
        if cfg.record_delta_every > 0 {
            if t % cfg.record_delta_every == 0 {
                out.push(TrajectoryPoint {
                    t,
                    delta: Some(max_alignment_coef(&x_pop, &sp.x_star)),
                    reward: r,
                });
            }
        } else {
            out.push(TrajectoryPoint {
                t,
                delta: None,
                reward: r,
            });
        }
        let mut trans_rng = substream(cfg.seed, DOMAIN_TRANSITION, 0, t as u64);
        x = sample_transition(model, &x, &u, &mut trans_rng).map_err(|e| Error::at_step(t, e))?;
    }
    Ok(out)
}

// ── Exact tiny-scale dynamic program ─────────────────────────────────────

/// Exact optimal total reward over `horizon` steps of the N-armed bandit by
/// backward induction over the full grid state space, with exact multinomial
/// transition probabilities. Enforced limits: `S <= 3`, `N <= 6`,
/// `horizon <= 5`.
pub fn brute_force_dp(
    model: &ArmModel,
    x0: &GridPopulation,
    horizon: usize,
) -> Result<f64> {
    let s = model.num_states();
    let n = x0.n();
    if s > 3 || n > 6 || horizon > 5 {
        return Err(Error::InstanceTooLarge(format!(
            "S = {s}, N = {n}, T = {horizon} exceeds S <= 3, N <= 6, T <= 5"
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be >= 1".into()));
    }
    let budget = alpha_units(model.alpha(), n).ok_or(Error::AlphaTimesNNotIntegral {
        alpha: model.alpha(),
        n,
    })?;

    let states = compositions(n, s);
    let index: BTreeMap<Vec<u64>, usize> = states
        .iter()
        .enumerate()
        .map(|(i, st)| (st.clone(), i))
        .collect();

    let mut value = vec![0.0; states.len()];
    for _ in 0..horizon {
        let mut next_value = vec![f64::NEG_INFINITY; states.len()];
        for (si, state) in states.iter().enumerate() {
            for control in controls_for(state, budget) {
                let mut q = instant_reward(model, state, &control, n);
                for (outcome, prob) in transition_distribution(model, state, &control) {
                    q += prob * value[index[&outcome]];
                }
                if q > next_value[si] {
                    next_value[si] = q;
                }
            }
        }
        value = next_value;
    }
    Ok(value[index[&x0.counts().to_vec()]])
}

/// Finite-horizon deterministic upper bound for the same instance (total
/// reward of the window LP started at `x0 / N`).
pub fn cec_upper_bound(model: &ArmModel, x0: &GridPopulation, horizon: usize) -> Result<f64> {
    cec::window_value(model, &x0.to_population(), horizon)
}

fn instant_reward(model: &ArmModel, state: &[u64], control: &[u64], n: u64) -> f64 {
    state
        .iter()
        .zip(control)
        .enumerate()
        .map(|(i, (&xs, &us))| {
            ((xs - us) as f64 * model.r0()[i] + us as f64 * model.r1()[i]) / n as f64
        })
        .sum()
}

/// All count vectors of length `parts` summing to `total`.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = vec![0u64; parts];
    fn rec(total: u64, idx: usize, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if idx + 1 == current.len() {
            current[idx] = total;
            out.push(current.clone());
            return;
        }
        for v in 0..=total {
            current[idx] = v;
            rec(total - v, idx + 1, current, out);
        }
    }
    rec(total, 0, &mut current, &mut out);
    out
}

/// All integer controls `0 <= u <= state` spending exactly `budget` units.
fn controls_for(state: &[u64], budget: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = vec![0u64; state.len()];
    fn rec(
        state: &[u64],
        budget: u64,
        idx: usize,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if idx + 1 == state.len() {
            if budget <= state[idx] {
                current[idx] = budget;
                out.push(current.clone());
            }
            return;
        }
        for v in 0..=state[idx].min(budget) {
            current[idx] = v;
            rec(state, budget - v, idx + 1, current, out);
        }
    }
    rec(state, budget, 0, &mut current, &mut out);
    out
}

/// Exact distribution of the next state: convolution over the per-(state,
/// action) multinomial groups.
fn transition_distribution(
    model: &ArmModel,
    state: &[u64],
    control: &[u64],
) -> BTreeMap<Vec<u64>, f64> {
    let s = state.len();
    let mut dist: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    dist.insert(vec![0u64; s], 1.0);
    for i in 0..s {
        for (count, row) in [
            (state[i] - control[i], model.p0().row(i)),
            (control[i], model.p1().row(i)),
        ] {
            if count == 0 {
                continue;
            }
            let outcomes = multinomial_pmf(count, row);
            let mut next: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            for (acc, p_acc) in &dist {
                for (add, p_add) in &outcomes {
                    let mut key = acc.clone();
                    for (k, a) in key.iter_mut().zip(add) {
                        *k += a;
                    }
                    *next.entry(key).or_insert(0.0) += p_acc * p_add;
                }
            }
            dist = next;
        }
    }
    dist
}

/// Exact multinomial pmf over all outcomes of `n` draws (n <= 6).
fn multinomial_pmf(n: u64, probs: &[f64]) -> Vec<(Vec<u64>, f64)> {
    const FACT: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
    compositions(n, probs.len())
        .into_iter()
        .filter_map(|counts| {
            let mut p = FACT[n as usize];
            for (&k, &pr) in counts.iter().zip(probs) {
                if pr == 0.0 && k > 0 {
                    return None;
                }
                p = p / FACT[k as usize] * pr.powi(k as i32);
            }
            (p > 0.0).then_some((counts, p))
        })
        .collect()
}
