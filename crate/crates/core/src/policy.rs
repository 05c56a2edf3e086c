//! Induced N-armed policies: rounding deterministic controls onto the `1/N`
//! grid.
//!
//! A deterministic rule emits a fractional control `u_bar`; the bandit needs
//! integer arm counts. Both rounding variants floor each component and then
//! distribute the remaining `alpha N - sum(floor)` budget units one per
//! state, which keeps the result within `S/N` of `u_bar` in L1 norm:
//!
//! - deterministic — units go to the largest fractional parts (ties to the
//!   lowest state index), skipping states with no headroom, so the induced
//!   policy is a pure function of the state;
//! - randomized — units are placed by systematic sampling so that each state
//!   is rounded up with probability equal to its fractional part, making the
//!   rounded control unbiased: `E[U] = u_bar`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::control::ControlRule;
use crate::model::{alpha_units, check_feasible, ControlVector, GridControl, GridPopulation};
use crate::{Error, Result};

/// How fractional controls are pushed onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Deterministic,
    Randomized,
}

/// A stationary N-armed policy induced by a deterministic control rule.
pub struct InducedPolicy {
    rule: Box<dyn ControlRule>,
    n: u64,
    rounding: Rounding,
}

impl InducedPolicy {
    /// `alpha * n` must be an integer so grid controls can meet the budget
    /// exactly.
    pub fn new(
        rule: Box<dyn ControlRule>,
        n: u64,
        alpha: f64,
        rounding: Rounding,
    ) -> Result<Self> {
        if alpha_units(alpha, n).is_none() {
            return Err(Error::AlphaTimesNNotIntegral { alpha, n });
        }
        Ok(InducedPolicy { rule, n, rounding })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    /// One policy evaluation: run the rule on the current population and
    /// round the result. The RNG is only consumed by randomized rounding.
    pub fn step(&self, x: &GridPopulation, rng: &mut ChaCha8Rng) -> Result<GridControl> {
        let x_pop = x.to_population();
        let u_bar = self.rule.control(&x_pop)?;
        match self.rounding {
            Rounding::Deterministic => round_control(x, &u_bar),
            Rounding::Randomized => randomized_round(x, &u_bar, rng),
        }
    }
}

/// Shared setup: clamp `u_bar` against the grid state, floor to base counts
/// and report the fractional parts plus the remaining budget units.
struct RoundingPlan {
    base: Vec<u64>,
    fractional: Vec<f64>,
    deficit: u64,
}

fn prepare(x: &GridPopulation, u_bar: &ControlVector, alpha: f64) -> Result<RoundingPlan> {
    if u_bar.len() != x.len() {
        return Err(Error::DimensionMismatch {
            what: "control length".into(),
            expected: x.len(),
            got: u_bar.len(),
        });
    }
    if !check_feasible(&x.to_population(), u_bar, alpha) {
        return Err(Error::InfeasibleControl {
            detail: "rounding input is not feasible for the grid state".into(),
        });
    }
    let n = x.n();
    let target = alpha_units(alpha, n).ok_or(Error::AlphaTimesNNotIntegral { alpha, n })?;

    let mut base = Vec::with_capacity(x.len());
    let mut fractional = Vec::with_capacity(x.len());
    for (&us, &cap) in u_bar.as_slice().iter().zip(x.counts()) {
        // Clamp against the exact per-state cap before scaling.
        let scaled = (us * n as f64).min(cap as f64).max(0.0);
        let mut b = (scaled + 1e-9).floor();
        if b > cap as f64 {
            b = cap as f64;
        }
        base.push(b as u64);
        fractional.push((scaled - b).max(0.0));
    }

    let assigned: u64 = base.iter().sum();
    if assigned > target {
        // Only possible through the floor snap on inputs sitting 1e-9 above
        // an integer; undo the snap on the smallest fractional parts.
        let mut extra = assigned - target;
        let mut order: Vec<usize> = (0..base.len()).collect();
        order.sort_by(|&a, &b| {
            fractional[a]
                .partial_cmp(&fractional[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        for &i in &order {
            if extra == 0 {
                break;
            }
            if base[i] > 0 {
                base[i] -= 1;
                fractional[i] = 0.0;
                extra -= 1;
            }
        }
    }
    let deficit = target - base.iter().sum::<u64>();
    Ok(RoundingPlan {
        base,
        fractional,
        deficit,
    })
}

/// Deterministic rounding of `u_bar` onto the grid of `x`: floors plus
/// largest-fractional-part deficit allocation. The output satisfies the
/// budget exactly, stays below the grid state and is within `S/N` of
/// `u_bar` in L1 norm.
pub fn round_control(x: &GridPopulation, u_bar: &ControlVector) -> Result<GridControl> {
    let alpha = u_bar.budget();
    let mut plan = prepare(x, u_bar, alpha)?;

    let mut order: Vec<usize> = (0..plan.base.len()).collect();
    order.sort_by(|&a, &b| {
        plan.fractional[b]
            .partial_cmp(&plan.fractional[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut remaining = plan.deficit;
    for &i in &order {
        if remaining == 0 {
            break;
        }
        if plan.base[i] < x.counts()[i] {
            plan.base[i] += 1;
            remaining -= 1;
        }
    }
    debug_assert_eq!(remaining, 0, "headroom always covers the deficit");
    GridControl::from_counts(plan.base, x.n())
}

/// Randomized rounding via systematic sampling: the deficit positions
/// `v, v+1, ..., v+deficit-1` (one uniform `v`) are dropped into the
/// cumulative fractional-part intervals, so `P(round up s) = fractional_s`
/// and `E[U] = u_bar` while every draw meets the budget exactly.
pub fn randomized_round(
    x: &GridPopulation,
    u_bar: &ControlVector,
    rng: &mut impl Rng,
) -> Result<GridControl> {
    let alpha = u_bar.budget();
    let mut plan = prepare(x, u_bar, alpha)?;
    if plan.deficit == 0 {
        return GridControl::from_counts(plan.base, x.n());
    }

    let deficit = plan.deficit as f64;
    let total: f64 = plan.fractional.iter().sum();
    debug_assert!((total - deficit).abs() < 1e-6, "fractional mass {total} vs deficit {deficit}");
    // Rescale so the cumulative intervals tile [0, deficit) exactly.
    let scale = deficit / total;
    let v: f64 = rng.gen::<f64>();
    let mut cumulative = 0.0;
    for (i, &f) in plan.fractional.iter().enumerate() {
        if f <= 0.0 {
            continue;
        }
        let lo = cumulative;
        cumulative += f * scale;
        // Does some position v + k fall inside [lo, cumulative)?
        let k = (lo - v).ceil().max(0.0);
        if v + k < cumulative && (k as u64) < plan.deficit {
            plan.base[i] += 1;
        }
    }
    GridControl::from_counts(plan.base, x.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::linear_steer;
    use crate::linalg::l1_dist;
    use crate::model::PopulationVector;
    use crate::rngs::{substream, DOMAIN_ROUNDING};

    fn grid(counts: &[u64], n: u64) -> GridPopulation {
        GridPopulation::from_counts(counts.to_vec(), n).unwrap()
    }

    #[test]
    fn grid_controls_round_to_themselves() {
        let x = grid(&[5, 5], 10);
        let u = ControlVector::new(vec![0.3, 0.2], 0.5).unwrap();
        let rounded = round_control(&x, &u).unwrap();
        assert_eq!(rounded.counts(), &[3, 2]);

        let mut rng = substream(0, DOMAIN_ROUNDING, 0, 0);
        for _ in 0..50 {
            let r = randomized_round(&x, &u, &mut rng).unwrap();
            assert_eq!(r.counts(), &[3, 2]);
        }
    }

    #[test]
    fn fractional_control_rounds_by_largest_remainder() {
        let x = grid(&[5, 5], 10);
        let u = ControlVector::new(vec![0.27, 0.23], 0.5).unwrap();
        let rounded = round_control(&x, &u).unwrap();
        assert_eq!(rounded.counts(), &[3, 2]);
        let as_fracs: Vec<f64> = rounded.counts().iter().map(|&c| c as f64 / 10.0).collect();
        let err = l1_dist(&as_fracs, u.as_slice());
        assert!((err - 0.06).abs() < 1e-12);
        assert!(err <= 2.0 / 10.0);
    }

    #[test]
    fn rounding_keeps_saturated_states_feasible() {
        // u_bar consumes all of state 0; the output must not round past the
        // single available arm there.
        let x = grid(&[1, 9], 10);
        let u = ControlVector::new(vec![0.1, 0.4], 0.5).unwrap();
        let rounded = round_control(&x, &u).unwrap();
        assert!(rounded.feasible_for(&x, 0.5));
        assert_eq!(rounded.budget_units(), 5);
    }

    #[test]
    fn randomized_rounding_is_unbiased() {
        let x = grid(&[5, 5], 10);
        let u = ControlVector::new(vec![0.27, 0.23], 0.5).unwrap();
        let reps = 100_000;
        let mut sums = vec![0.0; 2];
        let mut rng = substream(42, DOMAIN_ROUNDING, 0, 0);
        for _ in 0..reps {
            let r = randomized_round(&x, &u, &mut rng).unwrap();
            assert_eq!(r.budget_units(), 5);
            for (s, &c) in sums.iter_mut().zip(r.counts()) {
                *s += c as f64 / 10.0;
            }
        }
        // Componentwise 3-sigma band for a Bernoulli(0.7)/10 contribution.
        for (i, &s) in sums.iter().enumerate() {
            let mean = s / reps as f64;
            let p = (u.as_slice()[i] * 10.0).fract();
            let sigma = (p * (1.0 - p) / reps as f64).sqrt() / 10.0;
            assert!(
                (mean - u.as_slice()[i]).abs() <= 3.0 * sigma + 1e-12,
                "state {i}: mean {mean} vs target {}",
                u.as_slice()[i]
            );
        }
    }

    #[test]
    fn exhaustive_small_grid_rounding() {
        // Brute-force oracle over all grid states for S = 3, N = 6 and a
        // seeded mesh of feasible controls per state.
        let n = 6u64;
        let alpha = 0.5;
        let mut states = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                states.push(vec![a, b, n - a - b]);
            }
        }
        assert_eq!(states.len(), 28);
        let mut rng = substream(7, DOMAIN_ROUNDING, 9, 9);
        for counts in states {
            let x = grid(&counts, n);
            let x_pop = x.to_population();
            for trial in 0..40 {
                let u_bar = random_feasible_control(&x_pop, alpha, &mut rng);
                let rounded = round_control(&x, &u_bar).unwrap();
                assert!(rounded.feasible_for(&x, alpha), "trial {trial}");
                let as_fracs: Vec<f64> =
                    rounded.counts().iter().map(|&c| c as f64 / n as f64).collect();
                assert!(l1_dist(&as_fracs, u_bar.as_slice()) <= 3.0 / n as f64 + 1e-12);
            }
        }
    }

    pub(super) fn random_feasible_control(
        x: &PopulationVector,
        alpha: f64,
        rng: &mut impl Rng,
    ) -> ControlVector {
        // Start from the always-feasible linear control and apply random
        // mass transfers that preserve feasibility.
        let mut u = linear_steer(x, alpha).as_slice().to_vec();
        let s = x.len();
        for _ in 0..4 * s {
            let from = rng.gen_range(0..s);
            let to = rng.gen_range(0..s);
            if from == to {
                continue;
            }
            let room = (x[to] - u[to]).min(u[from]);
            if room <= 0.0 {
                continue;
            }
            let shift = rng.gen::<f64>() * room;
            u[from] -= shift;
            u[to] += shift;
        }
        ControlVector::new(u, alpha).unwrap()
    }

    #[test]
    fn policy_step_composes_rule_and_rounding() {
        use crate::control::{AlignAndSteer, SteeringRule};
        use crate::fixtures::four_state_model;
        use crate::stationary::solve_refined_static;

        let model = four_state_model();
        let x_init = PopulationVector::new(vec![0.4, 0.0, 0.6, 0.0]).unwrap();
        let sp = solve_refined_static(&model, &x_init).unwrap();
        let rule = AlignAndSteer::new(sp, SteeringRule::linear(model.clone()));

        let x = GridPopulation::from_counts(vec![8, 0, 12, 0], 20).unwrap();
        let u_bar = rule.control(&x.to_population()).unwrap();
        let expected = round_control(&x, &u_bar).unwrap();

        let policy = InducedPolicy::new(
            Box::new(rule),
            20,
            model.alpha(),
            Rounding::Deterministic,
        )
        .unwrap();
        let mut rng = substream(0, DOMAIN_ROUNDING, 0, 0);
        let got = policy.step(&x, &mut rng).unwrap();
        assert_eq!(got, expected);

        // Deterministic rounding ignores the RNG stream entirely.
        let mut other = substream(99, DOMAIN_ROUNDING, 5, 5);
        assert_eq!(policy.step(&x, &mut other).unwrap(), expected);
    }

    #[test]
    fn policy_requires_integral_budget() {
        use crate::fixtures::four_state_model;
        let model = four_state_model();
        let rule = move |x: &PopulationVector| Ok(linear_steer(x, 0.5));
        assert!(matches!(
            InducedPolicy::new(Box::new(rule), 7, model.alpha(), Rounding::Deterministic),
            Err(Error::AlphaTimesNNotIntegral { .. })
        ));
    }
}
