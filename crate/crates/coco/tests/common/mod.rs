//! Shared test helpers: an exhaustive-enumeration oracle that is independent
//! of the solver implementation, plus seeded desk-scale instance samplers.

use coco_milp::instance::{MilpInstance, Relation, Sense};
use coco_milp::rng::SplitMix64;

/// Independent feasibility check: evaluates every row and bound directly.
pub fn oracle_feasible(inst: &MilpInstance, x: &[f64], tol: f64) -> bool {
    for row in &inst.rows {
        let mut lhs = 0.0;
        for (j, a) in row.terms() {
            lhs += a * x[j];
        }
        let ok = match row.rel {
            Relation::Le => lhs <= row.rhs + tol,
            Relation::Ge => lhs >= row.rhs - tol,
            Relation::Eq => (lhs - row.rhs).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    for j in 0..inst.num_vars {
        if x[j] < inst.lower[j] - tol || x[j] > inst.upper[j] + tol {
            return false;
        }
        if j < inst.num_binary && x[j].abs().min((x[j] - 1.0).abs()) > tol {
            return false;
        }
    }
    true
}

/// Independent objective: plain dot product in index order.
pub fn oracle_objective(inst: &MilpInstance, x: &[f64]) -> f64 {
    inst.objective.iter().zip(x).map(|(c, v)| c * v).sum()
}

/// Exhaustive optimum over all binary assignments (requires an all-binary
/// instance with at most ~20 variables). Ties resolve to the lowest bit
/// pattern, which is irrelevant for objective comparisons.
pub fn oracle_optimum(inst: &MilpInstance) -> Option<(f64, Vec<f64>)> {
    assert_eq!(
        inst.num_binary, inst.num_vars,
        "oracle handles all-binary instances only"
    );
    let p = inst.num_binary;
    assert!(p <= 20, "oracle explosion guard");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << p) {
        let x: Vec<f64> = (0..p)
            .map(|j| if mask >> j & 1 == 1 { 1.0 } else { 0.0 })
            .collect();
        if !oracle_feasible(inst, &x, 1e-9) {
            continue;
        }
        let obj = oracle_objective(inst, &x);
        let better = match (&best, inst.sense) {
            (None, _) => true,
            (Some((b, _)), Sense::Minimize) => obj < *b,
            (Some((b, _)), Sense::Maximize) => obj > *b,
        };
        if better {
            best = Some((obj, x));
        }
    }
    best
}

/// All feasible binary assignments of an all-binary instance.
pub fn oracle_feasible_set(inst: &MilpInstance) -> Vec<Vec<f64>> {
    assert_eq!(inst.num_binary, inst.num_vars);
    let p = inst.num_binary;
    assert!(p <= 16, "oracle explosion guard");
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << p) {
        let x: Vec<f64> = (0..p)
            .map(|j| if mask >> j & 1 == 1 { 1.0 } else { 0.0 })
            .collect();
        if oracle_feasible(inst, &x, 1e-9) {
            out.push(x);
        }
    }
    out
}

/// Deterministic small instance with mixed SC/CA structure, at most
/// `max_binaries` variables. Even seeds give set covering, odd seeds give
/// combinatorial auctions; sizes vary with the seed.
pub fn small_random_instance(seed: u64, max_binaries: usize) -> MilpInstance {
    let mut rng = SplitMix64::new(seed);
    if seed % 2 == 0 {
        let rows = 3 + rng.gen_index(6); // 3..=8
        let cols = 8 + rng.gen_index(max_binaries.saturating_sub(7).min(8)); // 8..=15
        let density = 0.25 + rng.next_f64() * 0.25;
        coco_milp::instance::generate_set_cover(rows, cols, density, 1, 20, rng.next_u64())
            .expect("valid SC parameters")
    } else {
        let items = 4 + rng.gen_index(5); // 4..=8
        let bids = 8 + rng.gen_index(max_binaries.saturating_sub(7).min(8)); // 8..=15
        let max_bundle = 2 + rng.gen_index(2);
        coco_milp::instance::generate_comb_auction(items, bids, max_bundle, rng.next_u64())
            .expect("valid CA parameters")
    }
}
