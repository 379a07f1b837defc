//! Bounded-variable primal simplex on a dense tableau.
//!
//! Rows of any relation are turned into equalities with signed slacks
//! (`<=`: slack in `[0, inf)`, `>=`: slack in `(-inf, 0]`, `=`: slack fixed
//! at 0). A phase-1 run with per-row artificials restores feasibility when
//! the slack basis violates its bounds; phase 2 then optimizes the real
//! objective. Entering variables follow Dantzig's rule with lowest-index
//! tie-breaking and fall back to Bland's rule after 1000 degenerate pivots,
//! so every run is deterministic and terminating.

use crate::error::{Error, Result};
use crate::instance::{evaluate_objective, MilpInstance, Relation, Sense};

const REDUCED_COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-7;
const DEGENERATE_PIVOT_LIMIT: usize = 1000;

/// Solve status of one LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Result of an LP solve. `x` and `objective` are meaningful only when the
/// status is [`LpStatus::Optimal`]; otherwise `x` is empty and the objective
/// is NaN.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

struct Tableau {
    /// `(m + 1) x num_cols`; row `m` holds reduced costs.
    rows: Vec<Vec<f64>>,
    /// Current value of the basic variable in each constraint row.
    xb: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<ColStatus>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    m: usize,
    num_cols: usize,
    degenerate_pivots: usize,
    use_bland: bool,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            ColStatus::AtLower => self.lower[j],
            ColStatus::AtUpper => self.upper[j],
            ColStatus::Free => 0.0,
            ColStatus::Basic => unreachable!("basic column has no resting value"),
        }
    }

    /// Recomputes the reduced-cost row from `cost` and the current basis.
    fn reset_reduced_costs(&mut self) {
        let m = self.m;
        for j in 0..self.num_cols {
            let mut d = self.cost[j];
            for i in 0..m {
                let cb = self.cost[self.basis[i]];
                if cb != 0.0 {
                    d -= cb * self.rows[i][j];
                }
            }
            self.rows[m][j] = d;
        }
    }

    fn select_entering(&self) -> Option<(usize, f64)> {
        let d = &self.rows[self.m];
        if self.use_bland {
            for j in 0..self.num_cols {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                match self.status[j] {
                    ColStatus::AtLower | ColStatus::Free if d[j] < -REDUCED_COST_TOL => {
                        return Some((j, 1.0));
                    }
                    ColStatus::AtUpper if d[j] > REDUCED_COST_TOL => return Some((j, -1.0)),
                    _ => {}
                }
            }
            None
        } else {
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.num_cols {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let (score, dir) = match self.status[j] {
                    ColStatus::AtLower | ColStatus::Free if d[j] < -REDUCED_COST_TOL => {
                        (-d[j], 1.0)
                    }
                    ColStatus::AtUpper if d[j] > REDUCED_COST_TOL => (d[j], -1.0),
                    _ => continue,
                };
                if best.map_or(true, |(_, _, s)| score > s) {
                    best = Some((j, dir, score));
                }
            }
            best.map(|(j, dir, _)| (j, dir))
        }
    }

    /// One pivot or bound flip in direction `dir` for entering column `q`.
    fn step(&mut self) -> StepOutcome {
        let Some((q, dir)) = self.select_entering() else {
            return StepOutcome::Optimal;
        };

        // Bound-flip limit for the entering variable itself.
        let flip_limit = if self.lower[q].is_finite() && self.upper[q].is_finite() {
            self.upper[q] - self.lower[q]
        } else {
            f64::INFINITY
        };

        // Ratio test over basic variables. delta is the rate of change of
        // x_B[i] per unit increase of t.
        let mut best_t = f64::INFINITY;
        let mut best_row: Option<(usize, bool)> = None; // (row, leaves_at_upper)
        for i in 0..self.m {
            let alpha = self.rows[i][q];
            let delta = -dir * alpha;
            let bi = self.basis[i];
            let (limit, at_upper) = if delta > PIVOT_TOL {
                if self.upper[bi].is_finite() {
                    ((self.upper[bi] - self.xb[i]) / delta, true)
                } else {
                    continue;
                }
            } else if delta < -PIVOT_TOL {
                if self.lower[bi].is_finite() {
                    ((self.lower[bi] - self.xb[i]) / delta, false)
                } else {
                    continue;
                }
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let replace = match best_row {
                None => limit < best_t,
                Some((r, _)) => {
                    limit < best_t - DEGENERATE_STEP_TOL
                        || (limit <= best_t + DEGENERATE_STEP_TOL && {
                            if self.use_bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                self.rows[i][q].abs() > self.rows[r][q].abs()
                            }
                        })
                }
            };
            if replace {
                best_t = limit.min(best_t);
                best_row = Some((i, at_upper));
            }
        }

        if best_t.is_infinite() && flip_limit.is_infinite() {
            return StepOutcome::Unbounded;
        }

        if best_row.is_none() || flip_limit < best_t {
            // Bound flip: the entering variable runs to its opposite bound.
            let t = flip_limit;
            if t <= DEGENERATE_STEP_TOL {
                self.degenerate_pivots += 1;
            }
            for i in 0..self.m {
                let delta = -dir * self.rows[i][q];
                if delta != 0.0 {
                    self.xb[i] += delta * t;
                }
            }
            self.status[q] = match self.status[q] {
                ColStatus::AtLower => ColStatus::AtUpper,
                ColStatus::AtUpper => ColStatus::AtLower,
                other => other,
            };
        } else {
            let (r, leaves_at_upper) = best_row.expect("ratio test selected a row");
            let t = best_t;
            if t <= DEGENERATE_STEP_TOL {
                self.degenerate_pivots += 1;
            }
            let entering_value = self.nonbasic_value(q) + dir * t;
            for i in 0..self.m {
                if i == r {
                    continue;
                }
                let delta = -dir * self.rows[i][q];
                if delta != 0.0 {
                    self.xb[i] += delta * t;
                }
            }
            let leaving = self.basis[r];
            self.status[leaving] = if leaves_at_upper {
                ColStatus::AtUpper
            } else {
                ColStatus::AtLower
            };
            self.pivot(r, q);
            self.status[q] = ColStatus::Basic;
            self.basis[r] = q;
            self.xb[r] = entering_value;
        }

        if self.degenerate_pivots >= DEGENERATE_PIVOT_LIMIT {
            self.use_bland = true;
        }
        StepOutcome::Moved
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.rows[r][q];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][q] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[q];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * p;
                }
                row[q] = 0.0;
            }
        }
    }

    fn run(&mut self, max_iters: usize) -> (LpStatus, usize) {
        for it in 0..max_iters {
            match self.step() {
                StepOutcome::Optimal => return (LpStatus::Optimal, it),
                StepOutcome::Unbounded => return (LpStatus::Unbounded, it),
                StepOutcome::Moved => {}
            }
        }
        (LpStatus::IterationLimit, max_iters)
    }

    /// Current value of every column.
    fn column_values(&self) -> Vec<f64> {
        let mut vals = vec![0.0; self.num_cols];
        for (j, v) in vals.iter_mut().enumerate() {
            if self.status[j] != ColStatus::Basic {
                *v = self.nonbasic_value(j);
            }
        }
        for i in 0..self.m {
            vals[self.basis[i]] = self.xb[i];
        }
        vals
    }
}

/// Solves the LP relaxation of `inst` (binaries relaxed to their `[0, 1]`
/// bounds). Deterministic: identical instances produce identical results.
pub fn solve_lp(inst: &MilpInstance) -> Result<LpResult> {
    solve_lp_with_bounds(inst, &inst.lower, &inst.upper)
}

/// LP relaxation with overridden variable bounds (used by branch-and-bound).
pub fn solve_lp_with_bounds(
    inst: &MilpInstance,
    lower: &[f64],
    upper: &[f64],
) -> Result<LpResult> {
    let n = inst.num_vars;
    let m = inst.num_rows();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension(format!(
            "bounds have {}/{} entries, instance has {n} variables",
            lower.len(),
            upper.len()
        )));
    }
    for j in 0..n {
        if lower[j] > upper[j] {
            // Branching can empty a variable's domain; that is an infeasible
            // node, not an error.
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
            });
        }
    }

    let obj_sign = match inst.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Columns: n structural, then m slacks, then phase-1 artificials.
    let base_cols = n + m;
    let mut col_lower = Vec::with_capacity(base_cols);
    let mut col_upper = Vec::with_capacity(base_cols);
    col_lower.extend_from_slice(lower);
    col_upper.extend_from_slice(upper);
    for row in &inst.rows {
        match row.rel {
            Relation::Le => {
                col_lower.push(0.0);
                col_upper.push(f64::INFINITY);
            }
            Relation::Ge => {
                col_lower.push(f64::NEG_INFINITY);
                col_upper.push(0.0);
            }
            Relation::Eq => {
                col_lower.push(0.0);
                col_upper.push(0.0);
            }
        }
    }

    let mut status = Vec::with_capacity(base_cols);
    for j in 0..n {
        status.push(if col_lower[j].is_finite() {
            ColStatus::AtLower
        } else if col_upper[j].is_finite() {
            ColStatus::AtUpper
        } else {
            ColStatus::Free
        });
    }
    // Slacks start basic; status entries are fixed up below.
    status.resize(base_cols, ColStatus::Basic);

    // Initial basic values for the slack basis.
    let structural_value = |j: usize| -> f64 {
        match status[j] {
            ColStatus::AtLower => col_lower[j],
            ColStatus::AtUpper => col_upper[j],
            _ => 0.0,
        }
    };
    let mut xb = Vec::with_capacity(m);
    for row in &inst.rows {
        let lhs: f64 = row.terms().map(|(j, a)| a * structural_value(j)).sum();
        xb.push(row.rhs - lhs);
    }

    // Detect slack-bound violations and mount artificials for them.
    let mut artificial_cols = Vec::new();
    let mut phase1_cost_sign = Vec::new();
    for i in 0..m {
        let s = n + i;
        let violated = xb[i] < col_lower[s] - FEASIBILITY_TOL || xb[i] > col_upper[s] + FEASIBILITY_TOL;
        if violated {
            artificial_cols.push(i);
            phase1_cost_sign.push(if xb[i] > col_upper[s] { 1.0 } else { -1.0 });
        }
    }

    let num_cols = base_cols + artificial_cols.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for (i, row) in inst.rows.iter().enumerate() {
        let mut r = vec![0.0; num_cols];
        for (j, a) in row.terms() {
            r[j] = a;
        }
        r[n + i] = 1.0;
        rows.push(r);
    }
    rows.push(vec![0.0; num_cols]);

    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
    let mut cost = vec![0.0; base_cols];

    for (a, (&i, &sign)) in artificial_cols
        .iter()
        .zip(phase1_cost_sign.iter())
        .enumerate()
    {
        let art = base_cols + a;
        rows[i][art] = 1.0;
        // Slack leaves the basis at the bound nearest its violated side.
        let s = n + i;
        status[s] = if col_upper[s] == 0.0 && col_lower[s].is_finite() {
            ColStatus::AtLower // equality slack, fixed at 0
        } else if col_upper[s] == 0.0 {
            ColStatus::AtUpper
        } else {
            ColStatus::AtLower
        };
        status.push(ColStatus::Basic);
        basis[i] = art;
        if sign > 0.0 {
            col_lower.push(0.0);
            col_upper.push(f64::INFINITY);
        } else {
            col_lower.push(f64::NEG_INFINITY);
            col_upper.push(0.0);
        }
        cost.push(sign);
    }

    let mut tab = Tableau {
        rows,
        xb,
        basis,
        status,
        lower: col_lower,
        upper: col_upper,
        cost,
        m,
        num_cols,
        degenerate_pivots: 0,
        use_bland: false,
    };

    let max_iters = 2000 + 200 * (n + m);

    // Phase 1: drive artificial infeasibility to zero.
    if !artificial_cols.is_empty() {
        tab.reset_reduced_costs();
        let (p1_status, _) = tab.run(max_iters);
        if p1_status == LpStatus::IterationLimit {
            return Ok(LpResult {
                status: LpStatus::IterationLimit,
                x: Vec::new(),
                objective: f64::NAN,
            });
        }
        if p1_status == LpStatus::Unbounded {
            return Err(Error::Solver(
                "phase-1 infeasibility objective reported unbounded".into(),
            ));
        }
        let vals = tab.column_values();
        let infeasibility: f64 = (0..artificial_cols.len())
            .map(|a| (tab.cost[base_cols + a] * vals[base_cols + a]).max(0.0))
            .sum();
        if infeasibility > FEASIBILITY_TOL {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
            });
        }
        // Freeze artificials at zero for phase 2.
        for a in 0..artificial_cols.len() {
            let art = base_cols + a;
            tab.lower[art] = 0.0;
            tab.upper[art] = 0.0;
            if tab.status[art] != ColStatus::Basic {
                tab.status[art] = ColStatus::AtLower;
            }
        }
    }

    // Phase 2: real objective.
    for j in 0..num_cols {
        tab.cost[j] = if j < n { obj_sign * inst.objective[j] } else { 0.0 };
    }
    tab.reset_reduced_costs();
    let (p2_status, _) = tab.run(max_iters);
    match p2_status {
        LpStatus::Optimal => {}
        other => {
            return Ok(LpResult {
                status: other,
                x: Vec::new(),
                objective: f64::NAN,
            });
        }
    }

    let vals = tab.column_values();
    let x: Vec<f64> = vals[..n].to_vec();

    // Never report a wrong optimum: verify the claimed solution.
    for j in 0..n {
        if x[j] < lower[j] - FEASIBILITY_TOL || x[j] > upper[j] + FEASIBILITY_TOL {
            return Err(Error::Solver(format!(
                "lp solution violates bounds on variable {j}: {} not in [{}, {}]",
                x[j], lower[j], upper[j]
            )));
        }
    }
    for (k, row) in inst.rows.iter().enumerate() {
        let lhs = row.lhs(&x);
        let violated = match row.rel {
            Relation::Le => lhs - row.rhs > FEASIBILITY_TOL,
            Relation::Ge => row.rhs - lhs > FEASIBILITY_TOL,
            Relation::Eq => (lhs - row.rhs).abs() > FEASIBILITY_TOL,
        };
        if violated {
            return Err(Error::Solver(format!(
                "lp solution violates row {k}: lhs = {lhs}, rhs = {}",
                row.rhs
            )));
        }
    }

    let objective = evaluate_objective(inst, &x)?;
    Ok(LpResult {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}
