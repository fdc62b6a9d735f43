//! A dense bounded-variable primal simplex solver.
//!
//! Stand-in for an external LP engine: two phases, full-tableau updates,
//! Dantzig pricing with a Bland fallback once pivots stall, and fixed
//! tolerances so runs are bit-deterministic. Row activity at the optimum is
//! within `1e-7` of the right-hand sides.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::RelOp;

/// Feasibility/pivot tolerance; see the solver's determinism contract.
pub const LP_TOL: f64 = 1e-9;

/// Degenerate pivots tolerated before switching to Bland's rule.
const BLAND_THRESHOLD: u32 = 50;

#[derive(Debug, Clone)]
pub struct LpRow {
    /// Sparse coefficients `(column, value)`, columns strictly increasing.
    pub coeffs: Vec<(usize, f64)>,
    pub op: RelOp,
    pub rhs: f64,
}

/// `maximize objective · x` subject to the rows and variable bounds.
/// Bounds may be infinite on one side; every variable needs at least one
/// finite bound.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub bounds: Vec<(f64, f64)>,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars],
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot loop hit its iteration cap; treat the result as unusable.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    /// Values of the structural variables (empty unless optimal).
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic with no finite bound, resting at zero.
    Free,
}

struct Tableau {
    /// Dense `m x total` matrix, kept equal to `B^{-1} A`.
    t: Vec<f64>,
    total: usize,
    m: usize,
    basis: Vec<usize>,
    state: Vec<VarState>,
    value: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    bland: bool,
    degenerate_streak: u32,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.total + c]
    }

    fn reduced_costs(&self) -> Vec<f64> {
        let mut d = self.objective.clone();
        for r in 0..self.m {
            let cb = self.objective[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[r * self.total..(r + 1) * self.total];
            for (slot, &a) in d.iter_mut().zip(row) {
                *slot -= cb * a;
            }
        }
        d
    }

    fn choose_entering(&self, d: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (var, dir, score)
        for j in 0..self.total {
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => {
                    if self.upper[j] - self.lower[j] <= LP_TOL {
                        continue; // fixed
                    }
                    if d[j] > LP_TOL {
                        1.0
                    } else {
                        continue;
                    }
                }
                VarState::AtUpper => {
                    if self.upper[j] - self.lower[j] <= LP_TOL {
                        continue;
                    }
                    if d[j] < -LP_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
                VarState::Free => {
                    if d[j] > LP_TOL {
                        1.0
                    } else if d[j] < -LP_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = d[j].abs();
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, dir, score)),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Ratio test. Returns `(t, limiting)` where `limiting` is the row whose
    /// basic variable leaves (None for a bound flip of the entering var).
    fn ratio_test(&self, q: usize, dir: f64) -> Option<(f64, Option<(usize, f64)>)> {
        // bound flip distance; infinite for free or half-bounded vars
        let mut t_best = match self.state[q] {
            VarState::AtLower if self.upper[q].is_finite() => self.upper[q] - self.lower[q],
            VarState::AtUpper if self.lower[q].is_finite() => self.upper[q] - self.lower[q],
            _ => f64::INFINITY,
        };
        let mut limiting: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.at(r, q) * dir;
            let b = self.basis[r];
            let xb = self.value[b];
            let (t_r, hits) = if a > LP_TOL {
                if self.lower[b] == f64::NEG_INFINITY {
                    continue;
                }
                ((xb - self.lower[b]) / a, self.lower[b])
            } else if a < -LP_TOL {
                if self.upper[b] == f64::INFINITY {
                    continue;
                }
                ((xb - self.upper[b]) / a, self.upper[b])
            } else {
                continue;
            };
            let t_r = t_r.max(0.0);
            let replace = match limiting {
                None => t_r < t_best - LP_TOL,
                Some((lr, _)) => {
                    t_r < t_best - LP_TOL
                        || (t_r <= t_best + LP_TOL && self.basis[r] < self.basis[lr])
                }
            };
            if replace {
                t_best = t_r;
                limiting = Some((r, hits));
            }
        }
        if t_best == f64::INFINITY {
            return None; // unbounded direction
        }
        Some((t_best.max(0.0), limiting))
    }

    fn pivot(&mut self, q: usize, dir: f64, t: f64, limiting: Option<(usize, f64)>) {
        // move the point
        self.value[q] += dir * t;
        if t > 0.0 {
            for r in 0..self.m {
                let b = self.basis[r];
                self.value[b] -= dir * t * self.at(r, q);
            }
        }
        match limiting {
            None => {
                // bound flip
                self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                self.value[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            }
            Some((r, hit_bound)) => {
                let leaving = self.basis[r];
                self.value[leaving] = hit_bound;
                self.state[leaving] = if hit_bound == self.lower[leaving] {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                self.eliminate(r, q);
                self.basis[r] = q;
                self.state[q] = VarState::Basic(r);
            }
        }
        if t <= LP_TOL {
            self.degenerate_streak += 1;
            if self.degenerate_streak > BLAND_THRESHOLD {
                self.bland = true;
            }
        } else {
            self.degenerate_streak = 0;
            self.bland = false;
        }
    }

    fn eliminate(&mut self, r: usize, q: usize) {
        let piv = self.at(r, q);
        debug_assert!(piv.abs() > LP_TOL);
        let inv = 1.0 / piv;
        for c in 0..self.total {
            self.t[r * self.total + c] *= inv;
        }
        self.t[r * self.total + q] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, q);
            if f == 0.0 {
                continue;
            }
            for c in 0..self.total {
                let v = self.at(r, c);
                self.t[i * self.total + c] -= f * v;
            }
            self.t[i * self.total + q] = 0.0;
        }
    }

    /// Runs pivots until optimal. Returns false on an unbounded direction.
    fn optimize(&mut self, max_iters: usize) -> Result<bool, ()> {
        for _ in 0..max_iters {
            let d = self.reduced_costs();
            let Some((q, dir)) = self.choose_entering(&d) else {
                return Ok(true);
            };
            let Some((t, limiting)) = self.ratio_test(q, dir) else {
                return Ok(false);
            };
            self.pivot(q, dir, t, limiting);
        }
        Err(())
    }


    fn objective_value(&self) -> f64 {
        self.objective.iter().zip(&self.value).map(|(c, x)| c * x).sum()
    }
}

/// Solves `maximize objective · x`. Deterministic: identical inputs produce
/// identical pivots and identical output.
pub fn solve_lp(lp: &LpProblem) -> LpSolution {
    let n = lp.num_vars;
    let m = lp.rows.len();
    let total = n + 2 * m; // structural + slack + artificial

    let mut lower = vec![0.0; total];
    let mut upper = vec![0.0; total];
    for j in 0..n {
        lower[j] = lp.bounds[j].0;
        upper[j] = lp.bounds[j].1;
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let s = n + i;
        match row.op {
            RelOp::Le => {
                lower[s] = 0.0;
                upper[s] = f64::INFINITY;
            }
            RelOp::Ge => {
                lower[s] = f64::NEG_INFINITY;
                upper[s] = 0.0;
            }
            RelOp::Eq => {
                lower[s] = 0.0;
                upper[s] = 0.0;
            }
        }
    }

    // Nonbasic start: every structural/slack at a finite bound (or zero for
    // fully free variables).
    let mut state = vec![VarState::AtLower; total];
    let mut value = vec![0.0; total];
    for j in 0..n + m {
        if lower[j].is_finite() {
            state[j] = VarState::AtLower;
            value[j] = lower[j];
        } else if upper[j].is_finite() {
            state[j] = VarState::AtUpper;
            value[j] = upper[j];
        } else {
            state[j] = VarState::Free;
            value[j] = 0.0;
        }
    }

    // One artificial per row, basic at |residual|. Rows with a negative
    // residual are negated so every basis column is +1 and the tableau
    // starts as B^{-1}A with B = I.
    let mut t = vec![0.0; m * total];
    let mut basis = vec![0usize; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut act = 0.0;
        for &(j, a) in &row.coeffs {
            act += a * value[j];
        }
        act += value[n + i];
        let resid = row.rhs - act;
        let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
        for &(j, a) in &row.coeffs {
            t[i * total + j] = sign * a;
        }
        t[i * total + n + i] = sign; // slack
        let a_col = n + m + i;
        t[i * total + a_col] = 1.0;
        lower[a_col] = 0.0;
        upper[a_col] = f64::INFINITY;
        value[a_col] = resid.abs();
        basis[i] = a_col;
        state[a_col] = VarState::Basic(i);
    }

    // Phase 1: maximize -sum(artificials).
    let mut phase1_obj = vec![0.0; total];
    for i in 0..m {
        phase1_obj[n + m + i] = -1.0;
    }
    let mut tab = Tableau {
        t,
        total,
        m,
        basis,
        state,
        value,
        lower,
        upper,
        objective: phase1_obj,
        bland: false,
        degenerate_streak: 0,
    };
    let iter_cap = 2000 + 200 * (n + m);
    match tab.optimize(iter_cap) {
        Ok(true) => {}
        Ok(false) => unreachable!("phase-1 objective is bounded"),
        Err(()) => return LpSolution { status: LpStatus::Stalled, value: 0.0, point: vec![] },
    }
    let infeasibility: f64 = (0..m).map(|i| tab.value[n + m + i]).sum();
    if infeasibility > 1e-7 {
        return LpSolution { status: LpStatus::Infeasible, value: 0.0, point: vec![] };
    }

    // Pin artificials to zero and try to pivot basic ones out.
    for i in 0..m {
        let a_col = n + m + i;
        tab.lower[a_col] = 0.0;
        tab.upper[a_col] = 0.0;
        tab.value[a_col] = if matches!(tab.state[a_col], VarState::Basic(_)) {
            tab.value[a_col]
        } else {
            0.0
        };
    }
    for r in 0..m {
        let b = tab.basis[r];
        if b < n + m {
            continue;
        }
        // find any eligible non-artificial column in this row
        let mut found = None;
        for j in 0..n + m {
            if matches!(tab.state[j], VarState::Basic(_)) {
                continue;
            }
            if tab.at(r, j).abs() > 1e-7 {
                found = Some(j);
                break;
            }
        }
        if let Some(j) = found {
            let entering_value = tab.value[j];
            tab.eliminate(r, j);
            tab.state[tab.basis[r]] = VarState::AtLower;
            tab.value[tab.basis[r]] = 0.0;
            tab.basis[r] = j;
            tab.state[j] = VarState::Basic(r);
            tab.value[j] = entering_value;
        }
        // otherwise the row is redundant; the artificial stays basic at 0
        // with zero bounds and never moves.
    }

    // Phase 2.
    let mut phase2_obj = vec![0.0; total];
    phase2_obj[..n].copy_from_slice(&lp.objective);
    tab.objective = phase2_obj;
    tab.bland = false;
    tab.degenerate_streak = 0;
    match tab.optimize(iter_cap) {
        Ok(true) => {}
        Ok(false) => return LpSolution { status: LpStatus::Unbounded, value: 0.0, point: vec![] },
        Err(()) => return LpSolution { status: LpStatus::Stalled, value: 0.0, point: vec![] },
    }

    LpSolution {
        status: LpStatus::Optimal,
        value: tab.objective_value(),
        point: tab.value[..n].to_vec(),
    }
}

/// Largest row violation of `point` against the problem rows and bounds.
pub fn max_violation(lp: &LpProblem, point: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if lo.is_finite() {
            worst = worst.max(lo - point[j]);
        }
        if hi.is_finite() {
            worst = worst.max(point[j] - hi);
        }
    }
    for row in &lp.rows {
        let act: f64 = row.coeffs.iter().map(|&(j, a)| a * point[j]).sum();
        let v = match row.op {
            RelOp::Le => act - row.rhs,
            RelOp::Ge => row.rhs - act,
            RelOp::Eq => (act - row.rhs).abs(),
        };
        worst = worst.max(v);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[(usize, f64)], op: RelOp, rhs: f64) -> LpRow {
        LpRow { coeffs: coeffs.to_vec(), op, rhs }
    }

    #[test]
    fn max_x_with_upper_row() {
        let mut lp = LpProblem::new(1);
        lp.bounds[0] = (0.0, f64::INFINITY);
        lp.objective[0] = 1.0;
        lp.rows.push(row(&[(0, 1.0)], RelOp::Le, 3.0));
        let sol = solve_lp(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let mut lp = LpProblem::new(1);
        lp.bounds[0] = (f64::NEG_INFINITY, f64::INFINITY);
        lp.objective[0] = 1.0;
        lp.rows.push(row(&[(0, 1.0)], RelOp::Ge, 1.0));
        lp.rows.push(row(&[(0, 1.0)], RelOp::Le, 0.0));
        assert_eq!(solve_lp(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn no_upper_row_unbounded() {
        let mut lp = LpProblem::new(1);
        lp.bounds[0] = (0.0, f64::INFINITY);
        lp.objective[0] = 1.0;
        assert_eq!(solve_lp(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn box_only_maximum_at_upper_bounds() {
        let mut lp = LpProblem::new(2);
        lp.bounds = vec![(0.0, 0.4), (-1.0, 2.0)];
        lp.objective = vec![2.0, -3.0];
        let sol = solve_lp(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - (0.8 + 3.0)).abs() < 1e-9);
        assert!((sol.point[0] - 0.4).abs() < 1e-9);
        assert!((sol.point[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_inequality_mix() {
        // max x + y  s.t.  x + y = 1, x - y <= 0.5, 0 <= x,y <= 1
        let mut lp = LpProblem::new(2);
        lp.bounds = vec![(0.0, 1.0), (0.0, 1.0)];
        lp.objective = vec![1.0, 1.0];
        lp.rows.push(row(&[(0, 1.0), (1, 1.0)], RelOp::Eq, 1.0));
        lp.rows.push(row(&[(0, 1.0), (1, -1.0)], RelOp::Le, 0.5));
        let sol = solve_lp(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!(max_violation(&lp, &sol.point) < 1e-7);
    }

    #[test]
    fn classic_two_var_lp() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0
        // optimum 36 at (2, 6)
        let mut lp = LpProblem::new(2);
        lp.bounds = vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)];
        lp.objective = vec![3.0, 5.0];
        lp.rows.push(row(&[(0, 1.0)], RelOp::Le, 4.0));
        lp.rows.push(row(&[(1, 2.0)], RelOp::Le, 12.0));
        lp.rows.push(row(&[(0, 3.0), (1, 2.0)], RelOp::Le, 18.0));
        let sol = solve_lp(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 36.0).abs() < 1e-8);
        assert!((sol.point[0] - 2.0).abs() < 1e-8);
        assert!((sol.point[1] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn ge_rows_need_phase_one() {
        // min x + y ( = max -x - y) s.t. x + 2y >= 4, 3x + y >= 6, x,y >= 0
        // optimum at intersection (8/5, 6/5), value 14/5
        let mut lp = LpProblem::new(2);
        lp.bounds = vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)];
        lp.objective = vec![-1.0, -1.0];
        lp.rows.push(row(&[(0, 1.0), (1, 2.0)], RelOp::Ge, 4.0));
        lp.rows.push(row(&[(0, 3.0), (1, 1.0)], RelOp::Ge, 6.0));
        let sol = solve_lp(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 14.0 / 5.0).abs() < 1e-8);
        assert!(max_violation(&lp, &sol.point) < 1e-7);
    }

    #[test]
    fn determinism() {
        let mut lp = LpProblem::new(3);
        lp.bounds = vec![(0.0, 1.0); 3];
        lp.objective = vec![1.0, 0.5, 0.25];
        lp.rows.push(row(&[(0, 1.0), (1, 1.0), (2, 1.0)], RelOp::Eq, 1.5));
        lp.rows.push(row(&[(0, 1.0), (1, -1.0)], RelOp::Le, 0.25));
        let a = solve_lp(&lp);
        let b = solve_lp(&lp);
        assert_eq!(a.status, b.status);
        assert_eq!(a.value, b.value);
        assert_eq!(a.point, b.point);
    }

    #[test]
    fn random_lps_beat_sampled_feasible_points() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        for case in 0..120 {
            let n = rng.random_range(2..5);
            let m = rng.random_range(1..4);
            let mut lp = LpProblem::new(n);
            for j in 0..n {
                let lo: f64 = rng.random_range(-1.0..0.5);
                lp.bounds[j] = (lo, lo + rng.random_range(0.1..2.0));
                lp.objective[j] = rng.random_range(-2.0..2.0);
            }
            for _ in 0..m {
                let coeffs: Vec<(usize, f64)> =
                    (0..n).map(|j| (j, rng.random_range(-1.0..1.0))).collect();
                // pick rhs so that the box midpoint is feasible
                let mid_act: f64 = coeffs
                    .iter()
                    .map(|&(j, a)| a * 0.5 * (lp.bounds[j].0 + lp.bounds[j].1))
                    .sum();
                let op = match rng.random_range(0..3) {
                    0 => RelOp::Le,
                    1 => RelOp::Ge,
                    _ => RelOp::Eq,
                };
                let rhs = match op {
                    RelOp::Le => mid_act + rng.random_range(0.0..1.0),
                    RelOp::Ge => mid_act - rng.random_range(0.0..1.0),
                    RelOp::Eq => mid_act,
                };
                lp.rows.push(row(&coeffs, op, rhs));
            }
            let sol = solve_lp(&lp);
            assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
            assert!(max_violation(&lp, &sol.point) < 1e-7, "case {case}");
            // no sampled feasible point may beat the reported optimum
            for _ in 0..200 {
                let p: Vec<f64> = (0..n)
                    .map(|j| rng.random_range(lp.bounds[j].0..=lp.bounds[j].1))
                    .collect();
                if max_violation(&lp, &p) <= 1e-9 {
                    let v: f64 = lp.objective.iter().zip(&p).map(|(c, x)| c * x).sum();
                    assert!(v <= sol.value + 1e-7, "case {case}: sampled {v} > {}", sol.value);
                }
            }
        }
    }
}
