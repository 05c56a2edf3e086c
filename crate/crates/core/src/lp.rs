//! Self-contained dense linear-program kernel.
//!
//! Solves `maximize c·z  s.t.  A z = b,  lo <= z <= hi` (bounds may be
//! infinite) with a bounded-variable two-phase revised simplex:
//!
//! - phase 1 drives artificial variables to zero starting from all structural
//!   variables at a finite bound; infeasibility is declared when the phase-1
//!   optimum exceeds `1e-7`;
//! - the basis inverse is kept explicitly and updated in product form, with
//!   reduced costs maintained from the pivot row and recomputed from scratch
//!   before optimality is accepted;
//! - entering/leaving ties always break toward the lowest variable index, and
//!   the rule switches to Bland's after `10 * (m + n)` degenerate pivots, so
//!   solves terminate and are bit-for-bit reproducible.

use thiserror::Error;

use crate::linalg::{dot, l1_norm, Mat};

/// Dual feasibility tolerance on reduced costs.
const DUAL_TOL: f64 = 1e-9;
/// Smallest pivot magnitude eligible in the ratio test.
const PIV_TOL: f64 = 1e-9;
/// Step sizes below this count as degenerate pivots.
const DEGEN_TOL: f64 = 1e-10;
/// Phase-1 objective above this value means infeasible.
const PHASE1_TOL: f64 = 1e-7;
/// Pivots between periodic refactorizations of the basis inverse. Drift is
/// caught by the residual check at extraction (and re-checked before an
/// infeasibility verdict), so periodic rebuilds are a backstop for very long
/// solves only.
const REFACTOR_INTERVAL: usize = 5_000;

/// A dense LP in the form `maximize c·z  s.t.  A z = b,  lo <= z <= hi`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients (maximized), length `n`.
    pub objective: Vec<f64>,
    /// Equality-constraint matrix, `m x n`.
    pub a: Mat,
    /// Right-hand side, length `m`.
    pub rhs: Vec<f64>,
    /// Lower bounds, length `n`; entries may be `-INFINITY`.
    pub lower: Vec<f64>,
    /// Upper bounds, length `n`; entries may be `INFINITY`.
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.num_constraints();
        if n == 0 {
            return Err(LpError::Shape("no variables".into()));
        }
        if self.a.rows() != m || self.a.cols() != n {
            return Err(LpError::Shape(format!(
                "A is {}x{}, expected {}x{}",
                self.a.rows(),
                self.a.cols(),
                m,
                n
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Shape("bound vectors must have length n".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j]
                || self.lower[j].is_nan()
                || self.upper[j].is_nan()
                || !self.objective[j].is_finite()
            {
                return Err(LpError::Shape(format!("bad bounds/objective at column {j}")));
            }
        }
        for i in 0..m {
            if !self.rhs[i].is_finite() {
                return Err(LpError::Shape(format!("non-finite rhs at row {i}")));
            }
            for j in 0..n {
                if !self.a.get(i, j).is_finite() {
                    return Err(LpError::Shape(format!("non-finite A entry at ({i},{j})")));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { z: Vec<f64>, objective_value: f64 },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpSolution::Optimal {
                z,
                objective_value,
            } => Some((z, *objective_value)),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }
}

/// Hard failures of the kernel (as opposed to infeasible/unbounded inputs).
#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Shape(String),

    #[error("numerical failure in simplex after {pivots} pivots: {detail}")]
    NumericalFailure { pivots: usize, detail: &'static str },
}

/// Solves the program; see the module docs for the algorithm.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if lp.num_constraints() == 0 {
        return Ok(solve_box_only(lp));
    }
    let mut simplex = Simplex::new(lp);
    simplex.solve()
}

/// Degenerate case without equality constraints: each variable sits at its
/// own best bound.
fn solve_box_only(lp: &LinearProgram) -> LpSolution {
    let mut z = vec![0.0; lp.num_vars()];
    for j in 0..lp.num_vars() {
        let c = lp.objective[j];
        let best = if c > 0.0 {
            lp.upper[j]
        } else if c < 0.0 {
            lp.lower[j]
        } else if lp.lower[j].is_finite() {
            lp.lower[j]
        } else if lp.upper[j].is_finite() {
            lp.upper[j]
        } else {
            0.0
        };
        if !best.is_finite() {
            return LpSolution::Unbounded;
        }
        z[j] = best;
    }
    let objective_value = dot(&lp.objective, &z);
    LpSolution::Optimal {
        z,
        objective_value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VStat {
    Basic(usize),
    AtLower,
    AtUpper,
    Free,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    m: usize,
    /// Structural variable count; variables `n..n+m` are artificials.
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    stat: Vec<VStat>,
    val: Vec<f64>,
    basis: Vec<usize>,
    /// Dense basis inverse, row-major `m x m`.
    binv: Vec<f64>,
    /// Maintained reduced costs (meaningful for nonbasic variables).
    d: Vec<f64>,
    pivots: usize,
    last_refactor: usize,
    degenerate: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.num_constraints();
        let n = lp.num_vars();
        let total = n + m;

        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(total);
        for j in 0..n {
            let mut col = Vec::new();
            for i in 0..m {
                let v = lp.a.get(i, j);
                if v != 0.0 {
                    col.push((i, v));
                }
            }
            cols.push(col);
        }

        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        let mut stat = Vec::with_capacity(total);
        let mut val = Vec::with_capacity(total);
        for j in 0..n {
            if lo[j].is_finite() {
                stat.push(VStat::AtLower);
                val.push(lo[j]);
            } else if hi[j].is_finite() {
                stat.push(VStat::AtUpper);
                val.push(hi[j]);
            } else {
                stat.push(VStat::Free);
                val.push(0.0);
            }
        }

        // Residuals at the initial nonbasic point decide artificial signs so
        // every artificial starts basic and nonnegative.
        let mut residual = lp.rhs.clone();
        for j in 0..n {
            if val[j] != 0.0 {
                for &(i, a) in &cols[j] {
                    residual[i] -= a * val[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(m);
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let sig = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
            cols.push(vec![(i, sig)]);
            lo.push(0.0);
            hi.push(f64::INFINITY);
            stat.push(VStat::Basic(i));
            val.push(residual[i].abs());
            basis.push(n + i);
            binv[i * m + i] = sig;
        }

        Simplex {
            lp,
            m,
            n,
            cols,
            lo,
            hi,
            cost: vec![0.0; total],
            stat,
            val,
            basis,
            binv,
            d: vec![0.0; total],
            pivots: 0,
            last_refactor: 0,
            degenerate: 0,
            bland: false,
        }
    }

    fn solve(&mut self) -> Result<LpSolution, LpError> {
        // Phase 1: maximize minus the sum of artificials.
        let mut cost = vec![0.0; self.n + self.m];
        for j in self.n..self.n + self.m {
            cost[j] = -1.0;
        }
        self.cost = cost;
        self.recompute_reduced_costs();
        match self.run_phase()? {
            PhaseEnd::Unbounded => {
                return Err(LpError::NumericalFailure {
                    pivots: self.pivots,
                    detail: "phase 1 reported unbounded",
                })
            }
            PhaseEnd::Optimal => {}
        }
        let mut infeasibility: f64 =
            (self.n..self.n + self.m).map(|j| self.val[j].max(0.0)).sum();
        if infeasibility > PHASE1_TOL {
            // Rule out inverse drift before declaring the program infeasible.
            self.refactorize()?;
            self.recompute_reduced_costs();
            match self.run_phase()? {
                PhaseEnd::Unbounded => {
                    return Err(LpError::NumericalFailure {
                        pivots: self.pivots,
                        detail: "phase 1 reported unbounded",
                    })
                }
                PhaseEnd::Optimal => {}
            }
            infeasibility = (self.n..self.n + self.m).map(|j| self.val[j].max(0.0)).sum();
            if infeasibility > PHASE1_TOL {
                return Ok(LpSolution::Infeasible);
            }
        }
        self.drive_out_artificials()?;
        for j in self.n..self.n + self.m {
            self.hi[j] = 0.0;
            self.val[j] = 0.0;
        }

        // Phase 2: the real objective.
        let mut cost = vec![0.0; self.n + self.m];
        cost[..self.n].copy_from_slice(&self.lp.objective);
        self.cost = cost;
        self.recompute_reduced_costs();
        match self.run_phase()? {
            PhaseEnd::Unbounded => return Ok(LpSolution::Unbounded),
            PhaseEnd::Optimal => {}
        }
        self.extract()
    }

    fn run_phase(&mut self) -> Result<PhaseEnd, LpError> {
        let cap = 100 * (self.m + self.n) + 20_000;
        let mut fresh = true;
        let mut iterations = 0usize;
        loop {
            iterations += 1;
            if iterations > cap {
                return Err(LpError::NumericalFailure {
                    pivots: self.pivots,
                    detail: "iteration cap exceeded",
                });
            }
            let Some((q, dir)) = self.price() else {
                if fresh {
                    return Ok(PhaseEnd::Optimal);
                }
                // Maintained reduced costs drift; re-derive them before
                // accepting optimality.
                self.recompute_reduced_costs();
                fresh = true;
                continue;
            };
            match self.step(q, dir)? {
                None => return Ok(PhaseEnd::Unbounded),
                Some(_) => fresh = false,
            }
            if self.pivots - self.last_refactor >= REFACTOR_INTERVAL {
                self.refactorize()?;
                self.recompute_reduced_costs();
                self.last_refactor = self.pivots;
                fresh = true;
            }
        }
    }

    /// Chooses an entering variable and its direction (+1 up, -1 down).
    fn price(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (var, dir, score)
        for j in 0..self.n + self.m {
            match self.stat[j] {
                VStat::Basic(_) => continue,
                _ if self.hi[j] - self.lo[j] <= 0.0 => continue, // pinned
                VStat::AtLower if self.d[j] > DUAL_TOL => {
                    if self.bland {
                        return Some((j, 1.0));
                    }
                    if best.map_or(true, |(_, _, s)| self.d[j] > s) {
                        best = Some((j, 1.0, self.d[j]));
                    }
                }
                VStat::AtUpper if self.d[j] < -DUAL_TOL => {
                    if self.bland {
                        return Some((j, -1.0));
                    }
                    if best.map_or(true, |(_, _, s)| -self.d[j] > s) {
                        best = Some((j, -1.0, -self.d[j]));
                    }
                }
                VStat::Free if self.d[j].abs() > DUAL_TOL => {
                    if self.bland {
                        return Some((j, self.d[j].signum()));
                    }
                    if best.map_or(true, |(_, _, s)| self.d[j].abs() > s) {
                        best = Some((j, self.d[j].signum(), self.d[j].abs()));
                    }
                }
                _ => continue,
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Performs one simplex step for entering variable `q` moving in
    /// direction `dir`. Returns `None` when the ray is unbounded.
    fn step(&mut self, q: usize, dir: f64) -> Result<Option<()>, LpError> {
        let w = self.ftran(q);

        // Ratio test: smallest step that drives a basic variable (or the
        // entering variable itself) to a bound; ties break on the lowest
        // variable index.
        let own_range = self.hi[q] - self.lo[q];
        let mut t_best = f64::INFINITY;
        let mut choice: Option<Step> = None;
        for i in 0..self.m {
            let rate = dir * w[i];
            let b = self.basis[i];
            let (t, to_upper) = if rate > PIV_TOL {
                if !self.lo[b].is_finite() {
                    continue;
                }
                ((self.val[b] - self.lo[b]) / rate, false)
            } else if rate < -PIV_TOL {
                if !self.hi[b].is_finite() {
                    continue;
                }
                ((self.hi[b] - self.val[b]) / -rate, true)
            } else {
                continue;
            };
            let t = t.max(0.0);
            let better = match choice {
                None => t < t_best,
                Some(Step::Pivot { row, .. }) => {
                    t < t_best - DEGEN_TOL
                        || ((t - t_best).abs() <= DEGEN_TOL && b < self.basis[row])
                }
                Some(Step::Flip) => t < t_best,
            };
            if better {
                t_best = t;
                choice = Some(Step::Pivot { row: i, to_upper });
            }
        }
        if own_range.is_finite() && own_range < t_best {
            t_best = own_range;
            choice = Some(Step::Flip);
        }

        let Some(step) = choice else {
            return Ok(None); // unbounded ray
        };
        if t_best <= DEGEN_TOL {
            self.degenerate += 1;
            if self.degenerate > 10 * (self.m + self.n) {
                self.bland = true;
            }
        }

        // Move the basic variables along the ray.
        if t_best > 0.0 {
            for i in 0..self.m {
                let b = self.basis[i];
                self.val[b] -= dir * t_best * w[i];
            }
        }

        match step {
            Step::Flip => {
                self.stat[q] = match self.stat[q] {
                    VStat::AtLower => {
                        self.val[q] = self.hi[q];
                        VStat::AtUpper
                    }
                    VStat::AtUpper => {
                        self.val[q] = self.lo[q];
                        VStat::AtLower
                    }
                    other => other, // free variables have no finite range
                };
            }
            Step::Pivot { row, to_upper } => {
                self.apply_pivot(q, dir, row, to_upper, t_best, &w);
            }
        }
        Ok(Some(()))
    }

    fn apply_pivot(
        &mut self,
        q: usize,
        dir: f64,
        row: usize,
        to_upper: bool,
        t: f64,
        w: &[f64],
    ) {
        let leaving = self.basis[row];
        let pivot_row: Vec<f64> = self.binv[row * self.m..(row + 1) * self.m].to_vec();
        let ratio = self.d[q] / w[row];

        self.val[leaving] = if to_upper {
            self.hi[leaving]
        } else {
            self.lo[leaving]
        };
        self.stat[leaving] = if to_upper {
            VStat::AtUpper
        } else {
            VStat::AtLower
        };
        // Leaving artificials are pinned at zero and never re-enter.
        if leaving >= self.n {
            self.hi[leaving] = 0.0;
        }
        self.val[q] += dir * t;
        self.stat[q] = VStat::Basic(row);
        self.basis[row] = q;

        // Product-form update of the basis inverse.
        let piv = w[row];
        let mut new_row = pivot_row.clone();
        for v in &mut new_row {
            *v /= piv;
        }
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = w[i];
            if factor == 0.0 {
                continue;
            }
            let dst = &mut self.binv[i * self.m..(i + 1) * self.m];
            for (dv, &rv) in dst.iter_mut().zip(&new_row) {
                *dv -= factor * rv;
            }
        }
        self.binv[row * self.m..(row + 1) * self.m].copy_from_slice(&new_row);

        // Reduced-cost update from the (pre-update) pivot row.
        for j in 0..self.n + self.m {
            if matches!(self.stat[j], VStat::Basic(_)) || self.hi[j] - self.lo[j] <= 0.0 {
                continue;
            }
            let alpha = sparse_dot(&pivot_row, &self.cols[j]);
            if alpha != 0.0 {
                self.d[j] -= ratio * alpha;
            }
        }
        self.d[q] = 0.0;
        self.pivots += 1;
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let col = &self.cols[j];
        let mut w = vec![0.0; self.m];
        if let [(i, a)] = col[..] {
            for (wk, row) in w.iter_mut().zip(self.binv.chunks_exact(self.m)) {
                *wk = row[i] * a;
            }
        } else {
            for (wk, row) in w.iter_mut().zip(self.binv.chunks_exact(self.m)) {
                *wk = col.iter().map(|&(i, a)| row[i] * a).sum();
            }
        }
        w
    }

    fn recompute_reduced_costs(&mut self) {
        // y = c_B B^-1
        let mut y = vec![0.0; self.m];
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            for (yk, &bk) in y.iter_mut().zip(row) {
                *yk += cb * bk;
            }
        }
        for j in 0..self.n + self.m {
            self.d[j] = match self.stat[j] {
                VStat::Basic(_) => 0.0,
                _ => self.cost[j] - sparse_dot(&y, &self.cols[j]),
            };
        }
    }

    /// Pivots still-basic artificials out of the basis where a structural
    /// column can replace them; rows with no eligible column are redundant
    /// constraints and keep their (pinned) artificial.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        for row in 0..self.m {
            if self.basis[row] < self.n {
                continue;
            }
            let pivot_row = self.binv[row * self.m..(row + 1) * self.m].to_vec();
            let entering = (0..self.n).find(|&j| {
                !matches!(self.stat[j], VStat::Basic(_))
                    && self.hi[j] - self.lo[j] > 0.0
                    && sparse_dot(&pivot_row, &self.cols[j]).abs() > 1e-7
            });
            let Some(q) = entering else { continue };
            let w = self.ftran(q);
            let leaving = self.basis[row];
            self.stat[leaving] = VStat::AtLower;
            self.val[leaving] = 0.0;
            self.hi[leaving] = 0.0;
            self.stat[q] = VStat::Basic(row);
            self.basis[row] = q;
            let piv = w[row];
            if piv.abs() <= 1e-12 {
                return Err(LpError::NumericalFailure {
                    pivots: self.pivots,
                    detail: "vanishing pivot while removing artificials",
                });
            }
            let new_row: Vec<f64> = pivot_row.iter().map(|v| v / piv).collect();
            for i in 0..self.m {
                if i == row || w[i] == 0.0 {
                    continue;
                }
                let factor = w[i];
                for k in 0..self.m {
                    self.binv[i * self.m + k] -= factor * new_row[k];
                }
            }
            self.binv[row * self.m..(row + 1) * self.m].copy_from_slice(&new_row);
            self.pivots += 1;
        }
        Ok(())
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination and recomputes
    /// the basic variable values from the nonbasic point.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut aug = vec![0.0; m * 2 * m];
        for (k, &var) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[var] {
                aug[i * 2 * m + k] = a;
            }
        }
        for i in 0..m {
            aug[i * 2 * m + m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = aug[col * 2 * m + col].abs();
            for r in col + 1..m {
                let v = aug[r * 2 * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return Err(LpError::NumericalFailure {
                    pivots: self.pivots,
                    detail: "singular basis during refactorization",
                });
            }
            if piv_row != col {
                for k in 0..2 * m {
                    aug.swap(col * 2 * m + k, piv_row * 2 * m + k);
                }
            }
            let inv = 1.0 / aug[col * 2 * m + col];
            for k in 0..2 * m {
                aug[col * 2 * m + k] *= inv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = aug[r * 2 * m + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..2 * m {
                    aug[r * 2 * m + k] -= f * aug[col * 2 * m + k];
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = aug[i * 2 * m + m + k];
            }
        }

        // Recompute basic values: x_B = B^-1 (b - N x_N).
        let mut rhs = self.lp.rhs.clone();
        for j in 0..self.n + self.m {
            if matches!(self.stat[j], VStat::Basic(_)) || self.val[j] == 0.0 {
                continue;
            }
            for &(i, a) in &self.cols[j] {
                rhs[i] -= a * self.val[j];
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.val[self.basis[i]] = dot(row, &rhs);
        }
        Ok(())
    }

    fn extract(&mut self) -> Result<LpSolution, LpError> {
        if std::env::var_os("RESTLESS_LP_STATS").is_some() {
            eprintln!(
                "lp stats: m={} n={} pivots={} degenerate={} bland={}",
                self.m, self.n, self.pivots, self.degenerate, self.bland
            );
        }
        let residual_tol = 1e-9 * (1.0 + l1_norm(&self.lp.rhs));
        if self.residual_linf() > residual_tol {
            self.refactorize()?;
            if self.residual_linf() > 1e-7 * (1.0 + l1_norm(&self.lp.rhs)) {
                return Err(LpError::NumericalFailure {
                    pivots: self.pivots,
                    detail: "residual check failed after refactorization",
                });
            }
        }
        let mut z = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let mut v = self.val[j];
            // Snap round-off just outside the box back onto it.
            if v < self.lp.lower[j] && v >= self.lp.lower[j] - 1e-9 {
                v = self.lp.lower[j];
            }
            if v > self.lp.upper[j] && v <= self.lp.upper[j] + 1e-9 {
                v = self.lp.upper[j];
            }
            z.push(v);
        }
        let objective_value = dot(&self.lp.objective, &z);
        let solution = LpSolution::Optimal {
            z,
            objective_value,
        };
        #[cfg(debug_assertions)]
        self.verify(&solution);
        Ok(solution)
    }

    /// Max-norm residual of `A z - b` at the current (structural) point.
    fn residual_linf(&self) -> f64 {
        let mut res = self.lp.rhs.clone();
        for j in 0..self.n + self.m {
            if self.val[j] == 0.0 {
                continue;
            }
            for &(i, a) in &self.cols[j] {
                res[i] -= a * self.val[j];
            }
        }
        res.iter().fold(0.0, |acc, r| acc.max(r.abs()))
    }

    #[cfg(debug_assertions)]
    fn verify(&self, solution: &LpSolution) {
        let Some((z, obj)) = solution.optimal() else {
            return;
        };
        let m = self.m;
        let mut res = self.lp.rhs.clone();
        for j in 0..self.n {
            if z[j] == 0.0 {
                continue;
            }
            for &(i, a) in &self.cols[j] {
                res[i] -= a * z[j];
            }
        }
        // Artificials kept for redundant rows still carry (zero) values.
        for j in self.n..self.n + m {
            if self.val[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    res[i] -= a * self.val[j];
                }
            }
        }
        let tol = 1e-7 * (1.0 + l1_norm(&self.lp.rhs));
        for (i, r) in res.iter().enumerate() {
            debug_assert!(r.abs() <= tol, "constraint residual {r:.3e} at row {i}");
        }
        for j in 0..self.n {
            debug_assert!(
                z[j] >= self.lp.lower[j] - 1e-9 && z[j] <= self.lp.upper[j] + 1e-9,
                "bound violation at column {j}: {} not in [{}, {}]",
                z[j],
                self.lp.lower[j],
                self.lp.upper[j]
            );
        }
        let check = dot(&self.lp.objective, z);
        debug_assert!(
            (check - obj).abs() <= 1e-7 * (1.0 + obj.abs()),
            "objective mismatch: {check} vs {obj}"
        );
    }
}

fn sparse_dot(dense: &[f64], col: &[(usize, f64)]) -> f64 {
    col.iter().map(|&(i, a)| dense[i] * a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        objective: Vec<f64>,
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> LinearProgram {
        LinearProgram {
            objective,
            a: Mat::from_rows(&rows).unwrap(),
            rhs,
            lower,
            upper,
        }
    }

    #[test]
    fn forced_objective() {
        // maximize z1+z2 s.t. z1+z2 = 1, 0 <= z <= 1
        let sol = solve_lp(&lp(
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0]],
            vec![1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        ))
        .unwrap();
        let (_, v) = sol.optimal().unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vertex_from_upper_bounds() {
        // maximize z1 s.t. z1 - z2 = 0, z1 <= 0.5, z2 <= 0.3, z >= 0.
        // Hand vertex enumeration over the 2-variable polytope gives (0.3, 0.3).
        let sol = solve_lp(&lp(
            vec![1.0, 0.0],
            vec![vec![1.0, -1.0]],
            vec![0.0],
            vec![0.0, 0.0],
            vec![0.5, 0.3],
        ))
        .unwrap();
        let (z, v) = sol.optimal().unwrap();
        assert!((v - 0.3).abs() < 1e-9);
        assert!((z[0] - 0.3).abs() < 1e-9 && (z[1] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let sol = solve_lp(&lp(
            vec![1.0],
            vec![vec![1.0], vec![1.0]],
            vec![1.0, 2.0],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
        ))
        .unwrap();
        assert_eq!(sol, LpSolution::Infeasible);
    }

    #[test]
    fn unbounded_ray_detected() {
        // maximize z1 s.t. z1 - z2 = 0, z >= 0 (both can grow forever).
        let sol = solve_lp(&lp(
            vec![1.0, 0.0],
            vec![vec![1.0, -1.0]],
            vec![0.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        ))
        .unwrap();
        assert_eq!(sol, LpSolution::Unbounded);
    }

    #[test]
    fn free_variables_and_negative_rhs() {
        // maximize -z1 - z2 s.t. z1 + z2 = -3, free vars: optimum value 3.
        let sol = solve_lp(&lp(
            vec![-1.0, -1.0],
            vec![vec![1.0, 1.0]],
            vec![-3.0],
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![f64::INFINITY, f64::INFINITY],
        ))
        .unwrap();
        let (_, v) = sol.optimal().unwrap();
        assert!((v - 3.0).abs() < 1e-9);
    }

    #[test]
    fn box_only_programs() {
        let sol = solve_lp(&LinearProgram {
            objective: vec![2.0, -1.0],
            a: Mat::zeros(0, 2),
            rhs: vec![],
            lower: vec![0.0, -1.0],
            upper: vec![3.0, 5.0],
        })
        .unwrap();
        let (z, v) = sol.optimal().unwrap();
        assert_eq!(z, vec![3.0, -1.0]);
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let program = lp(
            vec![1.0, 2.0, 0.5],
            vec![vec![1.0, 1.0, 1.0], vec![0.5, -1.0, 0.0]],
            vec![1.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
        );
        let a = solve_lp(&program).unwrap();
        let b = solve_lp(&program).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_malformed_programs() {
        let bad = lp(
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0]],
            vec![1.0],
            vec![0.5, 0.0],
            vec![0.0, 1.0], // lower > upper
        );
        assert!(matches!(solve_lp(&bad), Err(LpError::Shape(_))));
    }
}
