//! The single-armed model and the population representation of the bandit.
//!
//! An arm is a two-action MDP on states `0..S` with row-stochastic transition
//! matrices `P0` (passive) and `P1` (active), reward vectors `r0`, `r1` and a
//! budget fraction `alpha`: at every step exactly the fraction `alpha` of the
//! `N` arms takes the active action. The bandit state is summarized by the
//! population vector `x` (fraction of arms per state, a point of the simplex)
//! and the control `u` (fraction of arms per state taking action 1), feasible
//! when `u · 1 = alpha` and `0 <= u <= x` componentwise.
//!
//! The expected one-step evolution is the linear map
//! `phi(x, u) = (x - u) · P0 + u · P1` and the instant reward is
//! `R(x, u) = (x - u) · r0 + u · r1`.

use serde_json::Value;

use crate::linalg::Mat;
use crate::{Error, Result};

/// Tolerance on simplex component sums (`|sum - 1| <= SIMPLEX_SUM_TOL`).
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Tolerance below zero accepted (and clamped) for vector components.
pub const ENTRY_NONNEG_TOL: f64 = 1e-12;
/// Tolerance on the control budget sum.
pub const BUDGET_TOL: f64 = 1e-9;
/// Tolerance on transition-matrix row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Accepted distance from the 1/N grid when snapping deserialized inputs.
pub const GRID_SNAP_TOL: f64 = 1e-6;

// ── Arm model ────────────────────────────────────────────────────────────

/// A validated single-armed model: `S` states, two actions, budget `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    num_states: usize,
    p0: Mat,
    p1: Mat,
    r0: Vec<f64>,
    r1: Vec<f64>,
    alpha: f64,
}

impl ArmModel {
    /// Validates a raw model description. This is the only way to build an
    /// [`ArmModel`], so every instance satisfies the invariants: square
    /// row-stochastic `P0`/`P1` (row sums within `1e-12`, entries in [0,1]),
    /// finite rewards of matching length and `0 < alpha < 1`.
    pub fn new(
        p0: Vec<Vec<f64>>,
        p1: Vec<Vec<f64>>,
        r0: Vec<f64>,
        r1: Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let s = p0.len();
        if s == 0 {
            return Err(Error::DimensionMismatch {
                what: "P0 row count".into(),
                expected: 1,
                got: 0,
            });
        }
        let p0 = validate_stochastic("P0", p0, s)?;
        let p1 = validate_stochastic("P1", p1, s)?;
        validate_rewards("r0", &r0, s)?;
        validate_rewards("r1", &r1, s)?;
        if !(alpha > 0.0 && alpha < 1.0) || !alpha.is_finite() {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(ArmModel {
            num_states: s,
            p0,
            p1,
            r0,
            r1,
            alpha,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p0(&self) -> &Mat {
        &self.p0
    }

    pub fn p1(&self) -> &Mat {
        &self.p1
    }

    pub fn r0(&self) -> &[f64] {
        &self.r0
    }

    pub fn r1(&self) -> &[f64] {
        &self.r1
    }

    /// Transition matrix of the single-armed chain under the policy "take
    /// action 1 with probability alpha": `alpha * P1 + (1 - alpha) * P0`.
    pub fn p_alpha(&self) -> Mat {
        let s = self.num_states;
        let mut m = Mat::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                m.set(
                    i,
                    j,
                    self.alpha * self.p1.get(i, j) + (1.0 - self.alpha) * self.p0.get(i, j),
                );
            }
        }
        m
    }
}

fn validate_stochastic(name: &'static str, rows: Vec<Vec<f64>>, s: usize) -> Result<Mat> {
    if rows.len() != s {
        return Err(Error::DimensionMismatch {
            what: format!("{name} row count"),
            expected: s,
            got: rows.len(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != s {
            return Err(Error::DimensionMismatch {
                what: format!("{name} row {i}"),
                expected: s,
                got: row.len(),
            });
        }
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < -ENTRY_NONNEG_TOL || v > 1.0 + ENTRY_NONNEG_TOL {
                return Err(Error::EntryOutOfRange {
                    matrix: name,
                    row: i,
                    col: j,
                    value: v,
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NonStochasticRow {
                matrix: name,
                row: i,
                sum,
            });
        }
    }
    let mut m = Mat::from_rows(&rows).expect("row lengths checked above");
    // Clamp within-tolerance entries to [0,1] so structural zeros stay exact.
    for i in 0..s {
        for v in m.row_mut(i) {
            *v = v.clamp(0.0, 1.0);
        }
    }
    Ok(m)
}

fn validate_rewards(name: &'static str, r: &[f64], s: usize) -> Result<()> {
    if r.len() != s {
        return Err(Error::DimensionMismatch {
            what: format!("{name} length"),
            expected: s,
            got: r.len(),
        });
    }
    for (i, v) in r.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteReward {
                vector: name,
                index: i,
            });
        }
    }
    Ok(())
}

// ── Population and control vectors ───────────────────────────────────────

/// A point of the simplex: nonnegative components summing to one.
///
/// Components within `ENTRY_NONNEG_TOL` below zero are clamped on
/// construction; the sum must match 1 within `SIMPLEX_SUM_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector(Vec<f64>);

impl PopulationVector {
    pub fn new(mut x: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, v) in x.iter_mut().enumerate() {
            if !v.is_finite() || *v < -ENTRY_NONNEG_TOL {
                return Err(Error::NegativeEntry {
                    index: i,
                    value: *v,
                });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
            sum += *v;
        }
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotOnSimplex { sum });
        }
        Ok(PopulationVector(x))
    }

    /// The uniform distribution over `s` states.
    pub fn uniform(s: usize) -> Self {
        PopulationVector(vec![1.0 / s as f64; s])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for PopulationVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A control: per-state fraction of arms taking action 1.
///
/// Construction checks nonnegativity (clamping within tolerance) and the
/// budget sum against `alpha`; the componentwise pairing `u <= x` is checked
/// against a concrete state via [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(Vec<f64>);

impl ControlVector {
    pub fn new(mut u: Vec<f64>, alpha: f64) -> Result<Self> {
        let mut sum = 0.0;
        for (i, v) in u.iter_mut().enumerate() {
            if !v.is_finite() || *v < -ENTRY_NONNEG_TOL {
                return Err(Error::NegativeEntry {
                    index: i,
                    value: *v,
                });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
            sum += *v;
        }
        if (sum - alpha).abs() > BUDGET_TOL {
            return Err(Error::BudgetMismatch { sum, alpha });
        }
        Ok(ControlVector(u))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Sum of the components (the activation budget actually spent).
    pub fn budget(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for ControlVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Feasibility predicate: `u · 1 = alpha` within [`BUDGET_TOL`] and
/// `0 <= u <= x` componentwise with `1e-12` slack on the lower bounds.
pub fn check_feasible(x: &PopulationVector, u: &ControlVector, alpha: f64) -> bool {
    if x.len() != u.len() {
        return false;
    }
    let budget: f64 = u.as_slice().iter().sum();
    if (budget - alpha).abs() > BUDGET_TOL {
        return false;
    }
    x.as_slice()
        .iter()
        .zip(u.as_slice())
        .all(|(&xs, &us)| us >= -ENTRY_NONNEG_TOL && xs - us >= -ENTRY_NONNEG_TOL)
}

fn require_feasible(model: &ArmModel, x: &PopulationVector, u: &ControlVector) -> Result<()> {
    if x.len() != model.num_states() || u.len() != model.num_states() {
        return Err(Error::DimensionMismatch {
            what: "state/control length".into(),
            expected: model.num_states(),
            got: x.len().max(u.len()),
        });
    }
    if !check_feasible(x, u, model.alpha()) {
        return Err(Error::InfeasibleControl {
            detail: format!(
                "budget {:.12} (alpha {}), min slack {:.3e}",
                u.budget(),
                model.alpha(),
                x.as_slice()
                    .iter()
                    .zip(u.as_slice())
                    .map(|(xs, us)| xs - us)
                    .fold(f64::INFINITY, f64::min),
            ),
        });
    }
    Ok(())
}

/// Deterministic one-step transition `phi(x, u) = (x - u) · P0 + u · P1`.
///
/// Requires `u` feasible for `x`; the result lies on the simplex.
pub fn phi(model: &ArmModel, x: &PopulationVector, u: &ControlVector) -> Result<PopulationVector> {
    require_feasible(model, x, u)?;
    PopulationVector::new(phi_unchecked(model, x.as_slice(), u.as_slice()))
}

/// `phi` on raw slices without the feasibility gate; used by verification
/// code that reports violations instead of failing fast.
pub(crate) fn phi_unchecked(model: &ArmModel, x: &[f64], u: &[f64]) -> Vec<f64> {
    let y: Vec<f64> = x.iter().zip(u).map(|(xs, us)| xs - us).collect();
    let mut out = model.p0().vecmat(&y);
    for (o, v) in out.iter_mut().zip(model.p1().vecmat(u)) {
        *o += v;
    }
    out
}

/// Instant reward `R(x, u) = (x - u) · r0 + u · r1` (per arm, per step).
pub fn reward(model: &ArmModel, x: &PopulationVector, u: &ControlVector) -> Result<f64> {
    require_feasible(model, x, u)?;
    Ok(reward_unchecked(model, x.as_slice(), u.as_slice()))
}

pub(crate) fn reward_unchecked(model: &ArmModel, x: &[f64], u: &[f64]) -> f64 {
    x.iter()
        .zip(u)
        .zip(model.r0().iter().zip(model.r1()))
        .map(|((xs, us), (r0, r1))| (xs - us) * r0 + us * r1)
        .sum()
}

// ── 1/N grid variants ────────────────────────────────────────────────────

/// A population vector on the `1/N` grid, stored as exact integer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPopulation {
    counts: Vec<u64>,
    n: u64,
}

impl GridPopulation {
    /// Builds from integer per-state counts; counts must sum to `n`.
    pub fn from_counts(counts: Vec<u64>, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("arm count N must be >= 1".into()));
        }
        let total: u64 = counts.iter().sum();
        if total != n {
            return Err(Error::InvalidConfig(format!(
                "grid counts sum to {total}, expected N = {n}"
            )));
        }
        Ok(GridPopulation { counts, n })
    }

    /// Snaps a fractional population vector onto the grid; each `N * x_s`
    /// must be within [`GRID_SNAP_TOL`] of an integer.
    pub fn from_population(x: &PopulationVector, n: u64) -> Result<Self> {
        let counts = snap_to_grid(x.as_slice(), n)?;
        GridPopulation::from_counts(counts, n)
    }

    /// Rounds an arbitrary population vector to the nearest grid point by
    /// largest remainder, preserving the total count exactly.
    pub fn nearest(x: &PopulationVector, n: u64) -> Self {
        let counts = largest_remainder(x.as_slice(), n, n);
        GridPopulation { counts, n }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn to_population(&self) -> PopulationVector {
        PopulationVector(
            self.counts
                .iter()
                .map(|&c| c as f64 / self.n as f64)
                .collect(),
        )
    }
}

/// A control on the `1/N` grid, stored as exact integer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridControl {
    counts: Vec<u64>,
    n: u64,
}

impl GridControl {
    pub fn from_counts(counts: Vec<u64>, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("arm count N must be >= 1".into()));
        }
        Ok(GridControl { counts, n })
    }

    /// Snaps a fractional control onto the grid (tolerance [`GRID_SNAP_TOL`]).
    pub fn from_control(u: &ControlVector, n: u64) -> Result<Self> {
        let counts = snap_to_grid(u.as_slice(), n)?;
        Ok(GridControl { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn budget_units(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_control(&self, alpha: f64) -> Result<ControlVector> {
        ControlVector::new(
            self.counts
                .iter()
                .map(|&c| c as f64 / self.n as f64)
                .collect(),
            alpha,
        )
    }

    /// Grid feasibility: `u <= x` componentwise and the budget matches
    /// `alpha * N` exactly (integer arithmetic).
    pub fn feasible_for(&self, x: &GridPopulation, alpha: f64) -> bool {
        self.n == x.n
            && self.counts.len() == x.counts.len()
            && self
                .counts
                .iter()
                .zip(x.counts())
                .all(|(&us, &xs)| us <= xs)
            && alpha_units(alpha, self.n).map(|b| b == self.budget_units()) == Some(true)
    }
}

/// `alpha * N` as an exact unit count; `None` when it is not an integer
/// (within 1e-9 of one).
pub fn alpha_units(alpha: f64, n: u64) -> Option<u64> {
    let raw = alpha * n as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * (n as f64).max(1.0) && rounded >= 0.0 {
        Some(rounded as u64)
    } else {
        None
    }
}

fn snap_to_grid(v: &[f64], n: u64) -> Result<Vec<u64>> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let scaled = x * n as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > GRID_SNAP_TOL || rounded < 0.0 {
                Err(Error::NotOnGrid {
                    index: i,
                    value: x,
                    n,
                })
            } else {
                Ok(rounded as u64)
            }
        })
        .collect()
}

/// Largest-remainder apportionment of `total` units proportionally to `v`.
fn largest_remainder(v: &[f64], n: u64, total: u64) -> Vec<u64> {
    let scaled: Vec<f64> = v.iter().map(|&x| x.max(0.0) * n as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|&s| s.floor() as u64).collect();
    let mut assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut k = 0;
    while assigned < total {
        counts[order[k % order.len()]] += 1;
        assigned += 1;
        k += 1;
    }
    while assigned > total {
        // Over-assignment can only come from floor of values slightly above
        // an integer; remove from the smallest fractional parts first.
        for &i in order.iter().rev() {
            if counts[i] > 0 && assigned > total {
                counts[i] -= 1;
                assigned -= 1;
            }
        }
    }
    counts
}

// ── Model file parsing ───────────────────────────────────────────────────

/// Result of parsing a model file: the validated model, the optional initial
/// state and warnings for unknown keys.
#[derive(Debug)]
pub struct ParsedModel {
    pub model: ArmModel,
    pub x_init: Option<PopulationVector>,
    pub warnings: Vec<String>,
}

/// Parses the JSON model format: an object with keys `num_states`, `alpha`,
/// `P0`, `P1` (row-major arrays of arrays), `r0`, `r1` and optional `x_init`.
/// Unknown keys produce warnings; missing required keys are errors.
pub fn parse_model_json(text: &str) -> Result<ParsedModel> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or_else(|| Error::BadValue {
        key: "<root>".into(),
        detail: "model file must be a JSON object".into(),
    })?;

    const KNOWN: [&str; 7] = ["num_states", "alpha", "P0", "P1", "r0", "r1", "x_init"];
    let warnings: Vec<String> = obj
        .keys()
        .filter(|k| !KNOWN.contains(&k.as_str()))
        .map(|k| format!("unknown key \"{k}\" ignored"))
        .collect();

    let num_states = get_key(obj, "num_states")?
        .as_u64()
        .ok_or_else(|| bad("num_states", "expected a positive integer"))? as usize;
    let alpha = get_key(obj, "alpha")?
        .as_f64()
        .ok_or_else(|| bad("alpha", "expected a number"))?;
    let p0 = parse_matrix(get_key(obj, "P0")?, "P0")?;
    let p1 = parse_matrix(get_key(obj, "P1")?, "P1")?;
    let r0 = parse_vector(get_key(obj, "r0")?, "r0")?;
    let r1 = parse_vector(get_key(obj, "r1")?, "r1")?;

    if p0.len() != num_states {
        return Err(Error::DimensionMismatch {
            what: "P0 row count vs num_states".into(),
            expected: num_states,
            got: p0.len(),
        });
    }
    let model = ArmModel::new(p0, p1, r0, r1, alpha)?;
    let x_init = match obj.get("x_init") {
        Some(v) => Some(PopulationVector::new(parse_vector(v, "x_init")?)?),
        None => None,
    };
    if let Some(ref x) = x_init {
        if x.len() != model.num_states() {
            return Err(Error::DimensionMismatch {
                what: "x_init length".into(),
                expected: model.num_states(),
                got: x.len(),
            });
        }
    }
    Ok(ParsedModel {
        model,
        x_init,
        warnings,
    })
}

fn get_key<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::MissingKey(key.into()))
}

fn bad(key: &str, detail: &str) -> Error {
    Error::BadValue {
        key: key.into(),
        detail: detail.into(),
    }
}

fn parse_vector(value: &Value, key: &str) -> Result<Vec<f64>> {
    value
        .as_array()
        .ok_or_else(|| bad(key, "expected an array of numbers"))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| bad(key, "expected numbers")))
        .collect()
}

fn parse_matrix(value: &Value, key: &str) -> Result<Vec<Vec<f64>>> {
    value
        .as_array()
        .ok_or_else(|| bad(key, "expected an array of rows"))?
        .iter()
        .map(|row| parse_vector(row, key))
        .collect()
}
