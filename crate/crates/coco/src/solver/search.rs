//! Trust-region construction around predicted marginals and the
//! predict-and-search driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphenc::encode;
use crate::instance::{evaluate_objective, Assignment, ConstraintRow, MilpInstance, Relation};
use crate::nn::GnnModel;
use crate::solver::bnb::{branch_and_bound, BnbConfig, BnbResult};

/// Trust-region shape: fix the `k0` lowest-scored binaries toward 0 and the
/// `k1` highest toward 1, allowing at most `delta` of these fixings to be
/// violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k0: usize,
    pub k1: usize,
    pub delta: usize,
}

impl SearchConfig {
    pub fn validate(&self, num_binary: usize) -> Result<()> {
        if self.k0 + self.k1 > num_binary {
            return Err(Error::Config(format!(
                "SearchConfig: k0 + k1 = {} exceeds the {} binary variables",
                self.k0 + self.k1,
                num_binary
            )));
        }
        Ok(())
    }
}

/// The selected index sets: `low` holds the k0 smallest marginals, `high`
/// the k1 largest among the rest; ties break toward the lowest index.
pub fn select_fix_sets(marginals: &[f64], sc: &SearchConfig) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..marginals.len()).collect();
    order.sort_by(|&a, &b| marginals[a].total_cmp(&marginals[b]).then(a.cmp(&b)));
    let low: Vec<usize> = order[..sc.k0].to_vec();
    let mut rest: Vec<usize> = order[sc.k0..].to_vec();
    rest.sort_by(|&a, &b| marginals[b].total_cmp(&marginals[a]).then(a.cmp(&b)));
    let high: Vec<usize> = rest[..sc.k1].to_vec();
    (low, high)
}

/// Returns a copy of `inst` with one extra row
/// `sum_{i in L} x_i + sum_{i in H} (1 - x_i) <= delta`, realized as
/// `sum_L x_i - sum_H x_i <= delta - k1`. With `k0 = k1 = 0` the feasible
/// set is unchanged and the instance is returned as-is (an empty row would
/// violate the instance invariants).
pub fn build_trust_region(
    inst: &MilpInstance,
    marginals: &[f64],
    sc: &SearchConfig,
) -> Result<MilpInstance> {
    let p = inst.num_binary;
    if marginals.len() != p {
        return Err(Error::Dimension(format!(
            "marginals have {} entries, instance has {p} binaries",
            marginals.len()
        )));
    }
    sc.validate(p)?;
    let mut out = inst.clone();
    if sc.k0 + sc.k1 == 0 {
        return Ok(out);
    }
    let (low, high) = select_fix_sets(marginals, sc);
    let mut terms: Vec<(usize, f64)> = Vec::with_capacity(low.len() + high.len());
    terms.extend(low.iter().map(|&i| (i, 1.0)));
    terms.extend(high.iter().map(|&i| (i, -1.0)));
    let rhs = sc.delta as f64 - sc.k1 as f64;
    out.rows.push(ConstraintRow::new(terms, Relation::Le, rhs));
    Ok(out)
}

/// Encode, predict, restrict to the trust region, then solve exactly.
/// Objectives in the result are evaluated against the original instance.
/// An infeasible trust region is reported as-is, without repair.
pub fn predict_and_search(
    inst: &MilpInstance,
    model: &GnnModel,
    sc: &SearchConfig,
    cfg: &BnbConfig,
) -> Result<BnbResult> {
    let graph = encode(inst);
    let prediction = model.forward(&graph)?;
    search_with_marginals(inst, &prediction.marginals, sc, cfg)
}

/// Predict-and-search with externally supplied marginals (used for oracle
/// and ablation probes).
pub fn search_with_marginals(
    inst: &MilpInstance,
    marginals: &[f64],
    sc: &SearchConfig,
    cfg: &BnbConfig,
) -> Result<BnbResult> {
    let augmented = build_trust_region(inst, marginals, sc)?;
    let mut res = branch_and_bound(&augmented, cfg)?;
    if let Some(inc) = res.incumbent.take() {
        res.incumbent = Some(Assignment {
            objective: evaluate_objective(inst, &inc.values)?,
            values: inc.values,
        });
    }
    for entry in res.pool.entries.iter_mut() {
        entry.objective = evaluate_objective(inst, &entry.values)?;
    }
    Ok(res)
}
