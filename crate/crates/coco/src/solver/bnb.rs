//! Exact branch-and-bound for binary MILPs with best-N solution pooling.
//!
//! Nodes are explored in best-bound order with most-fractional branching
//! (lowest index on ties). Pruning is pool-aware: a subtree is cut only when
//! its relaxation bound cannot improve the pool of the `pool_size` best
//! distinct solutions, so a finished run has both a proven optimum and the
//! N best feasible points it encountered. Runs are single-threaded and
//! deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{check_feasibility, evaluate_objective, Assignment, MilpInstance, Sense};
use crate::solver::simplex::{solve_lp_with_bounds, LpStatus};

/// Variable-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branching {
    MostFractional,
}

/// Node-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrder {
    BestBound,
}

/// Branch-and-bound limits and tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnbConfig {
    pub node_limit: u64,
    /// Wall-clock safety valve in seconds; desk-scale runs should never hit
    /// it (hitting it makes re-runs non-reproducible).
    pub time_limit: f64,
    pub abs_gap_tol: f64,
    pub integrality_tol: f64,
    pub pool_size: usize,
    pub branching: Branching,
    pub node_order: NodeOrder,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            node_limit: 100_000,
            time_limit: 3600.0,
            abs_gap_tol: 1e-6,
            integrality_tol: 1e-6,
            pool_size: 10,
            branching: Branching::MostFractional,
            node_order: NodeOrder::BestBound,
        }
    }
}

impl BnbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_limit == 0 || self.time_limit <= 0.0 || self.pool_size == 0 {
            return Err(Error::Config(
                "branch-and-bound limits and pool size must be positive".into(),
            ));
        }
        if self.abs_gap_tol < 0.0 || self.integrality_tol < 0.0 {
            return Err(Error::Config(
                "branch-and-bound tolerances must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BnbStatus {
    /// Gap closed within tolerances.
    Optimal,
    /// Incumbent found but optimality not proven (clean stop without limits;
    /// not produced by the current search strategy, kept for completeness).
    Feasible,
    /// Proven: no feasible assignment exists.
    Infeasible,
    /// A node or time limit stopped the search; incumbent may or may not
    /// exist.
    Limit,
}

/// One incumbent-improvement event. `node` doubles as the deterministic time
/// axis of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub node: u64,
    pub bound: f64,
    pub incumbent: f64,
}

/// The best distinct feasible solutions seen during a run, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPool {
    pub sense: Sense,
    pub entries: Vec<Assignment>,
}

impl SolutionPool {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&Assignment> {
        self.entries.first()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.entries.iter().map(|a| a.objective).collect()
    }

    /// Sense-adjusted objective where smaller is always better.
    fn internal_obj(&self, objective: f64) -> f64 {
        match self.sense {
            Sense::Minimize => objective,
            Sense::Maximize => -objective,
        }
    }

    /// Inserts a solution if its binary pattern is new, keeping the `cap`
    /// best entries. `num_binary` identifies the pattern prefix.
    fn insert(&mut self, assignment: Assignment, num_binary: usize, cap: usize) -> bool {
        let pattern = |a: &Assignment| -> Vec<u8> {
            a.values[..num_binary]
                .iter()
                .map(|&v| if v >= 0.5 { 1 } else { 0 })
                .collect()
        };
        let new_pattern = pattern(&assignment);
        if self.entries.iter().any(|e| pattern(e) == new_pattern) {
            return false;
        }
        let key = self.internal_obj(assignment.objective);
        let pos = self
            .entries
            .partition_point(|e| self.internal_obj(e.objective) <= key);
        self.entries.insert(pos, assignment);
        self.entries.truncate(cap);
        true
    }
}

/// Result of a branch-and-bound run. `bound` is a valid dual bound in the
/// instance's own sense (lower bound when minimizing, upper when
/// maximizing).
#[derive(Debug, Clone)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub incumbent: Option<Assignment>,
    pub bound: f64,
    pub pool: SolutionPool,
    pub nodes_explored: u64,
    pub trace: Vec<TraceEvent>,
}

struct HeapNode {
    bound: f64, // internal (minimization) sense
    id: u64,
    fix: Vec<i8>, // per binary: -1 free, 0 fixed to 0, 1 fixed to 1
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    // Reversed: BinaryHeap is a max-heap, we want smallest bound first,
    // FIFO on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Exact solve of a binary MILP.
pub fn branch_and_bound(inst: &MilpInstance, cfg: &BnbConfig) -> Result<BnbResult> {
    cfg.validate()?;
    let p = inst.num_binary;
    let sign = match inst.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let to_original = |internal: f64| sign * internal;

    let start = Instant::now();
    let mut pool = SolutionPool::new(inst.sense);
    let mut incumbent: Option<Assignment> = None;
    let mut incumbent_internal = f64::INFINITY;
    let mut trace = Vec::new();
    let mut nodes_explored: u64 = 0;
    let mut next_id: u64 = 1;
    let mut limit_hit = false;

    let mut heap = BinaryHeap::new();
    heap.push(HeapNode {
        bound: f64::NEG_INFINITY,
        id: 0,
        fix: vec![-1; p],
    });

    // Bound below which a solution would still enter the pool.
    let cutoff = |pool: &SolutionPool| -> f64 {
        if pool.len() < cfg.pool_size {
            f64::INFINITY
        } else {
            pool.internal_obj(pool.entries.last().expect("pool nonempty").objective)
        }
    };

    while let Some(node) = heap.pop() {
        if nodes_explored >= cfg.node_limit
            || start.elapsed().as_secs_f64() > cfg.time_limit
        {
            limit_hit = true;
            heap.push(node);
            break;
        }
        if node.bound >= cutoff(&pool) - cfg.abs_gap_tol {
            continue; // cannot improve the pool
        }
        nodes_explored += 1;

        let mut lower = inst.lower.clone();
        let mut upper = inst.upper.clone();
        for (j, &f) in node.fix.iter().enumerate() {
            match f {
                0 => upper[j] = 0.0,
                1 => lower[j] = 1.0,
                _ => {}
            }
        }
        let lp = solve_lp_with_bounds(inst, &lower, &upper)?;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Optimal => {}
            LpStatus::Unbounded => {
                return Err(Error::Solver(format!(
                    "relaxation unbounded at node {}; cannot bound the search",
                    node.id
                )));
            }
            LpStatus::IterationLimit => {
                return Err(Error::Solver(format!(
                    "relaxation hit the simplex iteration limit at node {}",
                    node.id
                )));
            }
        }
        let node_bound = sign * lp.objective;
        if node_bound >= cutoff(&pool) - cfg.abs_gap_tol {
            continue;
        }

        // Most fractional binary, ties to the lowest index.
        let mut branch_var: Option<(usize, f64)> = None;
        for j in 0..p {
            let frac = (lp.x[j] - lp.x[j].round()).abs();
            if frac > cfg.integrality_tol && branch_var.map_or(true, |(_, f)| frac > f) {
                branch_var = Some((j, frac));
            }
        }

        if branch_var.is_none() {
            // Integral relaxation: snap binaries exactly and record.
            let mut x = lp.x.clone();
            for v in x.iter_mut().take(p) {
                *v = v.round();
            }
            let report = check_feasibility(inst, &x, 1e-6)?;
            if report.feasible {
                let assignment = Assignment {
                    objective: evaluate_objective(inst, &x)?,
                    values: x,
                };
                let internal = sign * assignment.objective;
                if internal < incumbent_internal - 1e-12 {
                    incumbent_internal = internal;
                    incumbent = Some(assignment.clone());
                    let open_min = heap
                        .peek()
                        .map_or(f64::INFINITY, |top: &HeapNode| top.bound);
                    let global_bound = node_bound.min(open_min).min(incumbent_internal);
                    trace.push(TraceEvent {
                        node: nodes_explored,
                        bound: to_original(global_bound),
                        incumbent: assignment.objective,
                    });
                }
                pool.insert(assignment, p, cfg.pool_size);
                if node_bound >= cutoff(&pool) - cfg.abs_gap_tol {
                    continue; // subtree cannot add anything better
                }
                // Keep enumerating the subtree for further pool entries.
                if let Some(j) = node.fix.iter().position(|&f| f < 0) {
                    push_children(&mut heap, &node, j, node_bound, &mut next_id);
                }
            } else if let Some(j) = node.fix.iter().position(|&f| f < 0) {
                // Rounding broke feasibility (numerically tight row): split
                // instead of fathoming so exactness is preserved.
                push_children(&mut heap, &node, j, node_bound, &mut next_id);
            }
            continue;
        }

        let (j, _) = branch_var.expect("fractional variable present");
        push_children(&mut heap, &node, j, node_bound, &mut next_id);
    }

    let open_min = heap.peek().map_or(f64::INFINITY, |top| top.bound);
    let (status, bound_internal) = if limit_hit {
        (BnbStatus::Limit, open_min.min(incumbent_internal))
    } else if incumbent.is_some() {
        (BnbStatus::Optimal, incumbent_internal)
    } else {
        (BnbStatus::Infeasible, f64::INFINITY)
    };

    Ok(BnbResult {
        status,
        incumbent,
        bound: to_original(bound_internal),
        pool,
        nodes_explored,
        trace,
    })
}

fn push_children(
    heap: &mut BinaryHeap<HeapNode>,
    node: &HeapNode,
    var: usize,
    bound: f64,
    next_id: &mut u64,
) {
    for value in [0i8, 1i8] {
        let mut fix = node.fix.clone();
        fix[var] = value;
        heap.push(HeapNode {
            bound,
            id: *next_id,
            fix,
        });
        *next_id += 1;
    }
}
