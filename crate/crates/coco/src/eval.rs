//! Diagnostic analyses: pairwise logit separability, intra-constraint logit
//! variance, constraint activation ratios, and primal-gap curves. All
//! reports are pure functions of their inputs and emit plain CSV.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{check_feasibility, MilpInstance};
use crate::rng::SplitMix64;
use crate::solver::TraceEvent;

/// Fixed-width histogram over `[lo, hi]`; out-of-range values clamp into
/// the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            hi,
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, value: f64) {
        let bins = self.counts.len();
        let t = (value - self.lo) / (self.hi - self.lo);
        let idx = ((t * bins as f64).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        self.counts[idx] += 1;
    }

    pub fn bin_edges(&self, idx: usize) -> (f64, f64) {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        (
            self.lo + idx as f64 * width,
            self.lo + (idx + 1) as f64 * width,
        )
    }

    /// CSV rows `bin_lo,bin_hi,count` (no header).
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for (i, &c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(i);
            out.push_str(&format!("{lo},{hi},{c}\n"));
        }
        out
    }
}

/// Distribution of score differences over sampled (positive, negative)
/// variable pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub sampled_pairs: usize,
    /// Fraction of pairs ranked correctly (difference strictly positive).
    pub fraction_positive: f64,
    pub mean_delta: f64,
    pub delta_histogram: Histogram,
}

/// Samples (or enumerates, when few) pairs `(i, j)` with `truth[i] = 1` and
/// `truth[j] = 0` and reports the distribution of `scores[i] - scores[j]`
/// over a 50-bin histogram on `[-1, 1]`.
pub fn pairwise_ranking_stats(
    scores: &[f64],
    truth: &[u8],
    num_pairs: usize,
    seed: u64,
) -> Result<SeparabilityReport> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} scores vs {} truth entries",
            scores.len(),
            truth.len()
        )));
    }
    let positives: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] == 1).collect();
    let negatives: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] == 0).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Data(
            "degenerate truth: pairwise ranking needs at least one 1 and one 0".into(),
        ));
    }
    let mut histogram = Histogram::new(-1.0, 1.0, 50);
    let mut count = 0usize;
    let mut positive = 0usize;
    let mut sum = 0.0;
    let mut record = |delta: f64, histogram: &mut Histogram| {
        histogram.add(delta);
        sum += delta;
        count += 1;
        if delta > 0.0 {
            positive += 1;
        }
    };
    let total = positives.len() * negatives.len();
    if total <= num_pairs {
        for &i in &positives {
            for &j in &negatives {
                record(scores[i] - scores[j], &mut histogram);
            }
        }
    } else {
        let mut rng = SplitMix64::new(seed);
        for _ in 0..num_pairs {
            let i = positives[rng.gen_index(positives.len())];
            let j = negatives[rng.gen_index(negatives.len())];
            record(scores[i] - scores[j], &mut histogram);
        }
    }
    Ok(SeparabilityReport {
        sampled_pairs: count,
        fraction_positive: positive as f64 / count as f64,
        mean_delta: sum / count as f64,
        delta_histogram: histogram,
    })
}

/// Within-constraint versus global logit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub intra_var_mean: f64,
    pub inter_var: f64,
    pub ratio: f64,
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
}

/// Mean population variance of the logits within each constraint (over
/// constraints with at least two binary members) against the population
/// variance of all binary logits.
pub fn intra_constraint_variance(logits: &[f64], inst: &MilpInstance) -> Result<VarianceReport> {
    let p = inst.num_binary;
    if logits.len() != p {
        return Err(Error::Dimension(format!(
            "{} logits vs {p} binary variables",
            logits.len()
        )));
    }
    let mut per_constraint = Vec::new();
    for row in &inst.rows {
        let members: Vec<usize> = row.cols.iter().copied().filter(|&j| j < p).collect();
        if members.len() >= 2 {
            per_constraint.push(population_variance(
                members.iter().map(|&j| logits[j]).collect::<Vec<_>>().into_iter(),
            ));
        }
    }
    if per_constraint.is_empty() {
        return Err(Error::Data(
            "no constraint has two or more binary members".into(),
        ));
    }
    let intra_var_mean = per_constraint.iter().sum::<f64>() / per_constraint.len() as f64;
    let inter_var = population_variance(logits.to_vec().into_iter());
    let ratio = if inter_var > 0.0 {
        intra_var_mean / inter_var
    } else {
        0.0
    };
    Ok(VarianceReport {
        intra_var_mean,
        inter_var,
        ratio,
    })
}

/// Histogram (20 bins over `[0, 1]`) of the fraction of each constraint's
/// binary members set to 1 in a feasible reference solution.
pub fn activation_ratios(inst: &MilpInstance, solution: &[f64]) -> Result<Histogram> {
    let report = check_feasibility(inst, solution, 1e-6)?;
    if !report.feasible {
        return Err(Error::Data(
            "activation ratios need a feasible reference solution".into(),
        ));
    }
    let p = inst.num_binary;
    let mut histogram = Histogram::new(0.0, 1.0, 20);
    for row in &inst.rows {
        let members: Vec<usize> = row.cols.iter().copied().filter(|&j| j < p).collect();
        if members.is_empty() {
            continue;
        }
        let active = members.iter().filter(|&&j| solution[j] > 0.5).count();
        histogram.add(active as f64 / members.len() as f64);
    }
    Ok(histogram)
}

/// Step function of the absolute primal gap at each incumbent-improvement
/// event; `no_solution` marks a run that never found an incumbent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalCurve {
    pub points: Vec<(f64, f64)>,
    pub no_solution: bool,
}

impl PrimalCurve {
    /// CSV rows `time,gap_abs`; a run without solutions yields the single
    /// marker row `,,no_solution`.
    pub fn to_csv_rows(&self) -> String {
        if self.no_solution {
            return ",,no_solution\n".into();
        }
        let mut out = String::new();
        for (t, gap) in &self.points {
            out.push_str(&format!("{t},{gap},\n"));
        }
        out
    }
}

/// Builds the primal-gap curve from a solver trace. The trace's node counter
/// serves as the deterministic time axis.
pub fn primal_curve(trace: &[TraceEvent], bks: f64) -> PrimalCurve {
    if trace.is_empty() {
        return PrimalCurve {
            points: Vec::new(),
            no_solution: true,
        };
    }
    PrimalCurve {
        points: trace
            .iter()
            .map(|e| (e.node as f64, (e.incumbent - bks).abs()))
            .collect(),
        no_solution: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConstraintRow, Relation, Sense};

    #[test]
    fn separability_single_pair() {
        let report = pairwise_ranking_stats(&[0.9, 0.1], &[1, 0], 1000, 0).unwrap();
        assert_eq!(report.sampled_pairs, 1);
        assert_eq!(report.fraction_positive, 1.0);
        assert!((report.mean_delta - 0.8).abs() < 1e-12);
    }

    #[test]
    fn separability_constant_scores_all_ties() {
        let report = pairwise_ranking_stats(&[0.4, 0.4, 0.4], &[1, 0, 0], 1000, 0).unwrap();
        assert_eq!(report.fraction_positive, 0.0); // ties are not positive
        assert_eq!(report.mean_delta, 0.0);
    }

    #[test]
    fn separability_anti_predictor_is_zero() {
        let truth = [1u8, 0, 1, 0];
        let scores: Vec<f64> = truth.iter().map(|&t| 1.0 - f64::from(t)).collect();
        let report = pairwise_ranking_stats(&scores, &truth, 1000, 0).unwrap();
        assert_eq!(report.fraction_positive, 0.0);
    }

    #[test]
    fn separability_rejects_degenerate_truth() {
        assert!(pairwise_ranking_stats(&[0.5, 0.6], &[1, 1], 10, 0).is_err());
        assert!(pairwise_ranking_stats(&[0.5, 0.6], &[0, 0], 10, 0).is_err());
    }

    #[test]
    fn separability_sampling_deterministic() {
        let scores: Vec<f64> = (0..60).map(|i| (i as f64) / 60.0).collect();
        let truth: Vec<u8> = (0..60).map(|i| u8::from(i % 2 == 0)).collect();
        let a = pairwise_ranking_stats(&scores, &truth, 100, 9).unwrap();
        let b = pairwise_ranking_stats(&scores, &truth, 100, 9).unwrap();
        assert_eq!(a.fraction_positive, b.fraction_positive);
        assert_eq!(a.delta_histogram, b.delta_histogram);
        assert_eq!(a.sampled_pairs, 100);
    }

    fn chain_instance() -> MilpInstance {
        // Constraints {v0, v1} and {v1, v2}.
        MilpInstance {
            name: "chain".into(),
            num_vars: 3,
            num_binary: 3,
            objective: vec![1.0; 3],
            sense: Sense::Minimize,
            rows: vec![
                ConstraintRow::new(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 1.0),
                ConstraintRow::new(vec![(1, 1.0), (2, 1.0)], Relation::Ge, 1.0),
            ],
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
        }
    }

    #[test]
    fn variance_hand_computed_chain() {
        let report = intra_constraint_variance(&[1.0, 3.0, 5.0], &chain_instance()).unwrap();
        assert!((report.intra_var_mean - 1.0).abs() < 1e-12);
        assert!((report.inter_var - 8.0 / 3.0).abs() < 1e-12);
        assert!((report.ratio - 0.375).abs() < 1e-12);
    }

    #[test]
    fn variance_constant_logits_all_zero() {
        let report = intra_constraint_variance(&[2.0, 2.0, 2.0], &chain_instance()).unwrap();
        assert_eq!(
            report,
            VarianceReport {
                intra_var_mean: 0.0,
                inter_var: 0.0,
                ratio: 0.0
            }
        );
    }

    #[test]
    fn variance_single_constraint_over_all_vars_ratio_one() {
        let mut inst = chain_instance();
        inst.rows = vec![ConstraintRow::new(
            vec![(0, 1.0), (1, 1.0), (2, 1.0)],
            Relation::Ge,
            1.0,
        )];
        let report = intra_constraint_variance(&[0.5, 1.5, 4.0], &inst).unwrap();
        assert!((report.intra_var_mean - report.inter_var).abs() < 1e-12);
        assert_eq!(report.ratio, 1.0);
    }

    #[test]
    fn activation_ratio_counts() {
        // Set-packing row over three variables, one active.
        let inst = MilpInstance {
            name: "packing".into(),
            num_vars: 3,
            num_binary: 3,
            objective: vec![1.0; 3],
            sense: Sense::Maximize,
            rows: vec![ConstraintRow::new(
                vec![(0, 1.0), (1, 1.0), (2, 1.0)],
                Relation::Le,
                1.0,
            )],
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
        };
        let hist = activation_ratios(&inst, &[1.0, 0.0, 0.0]).unwrap();
        // 1/3 lands in bin 6 of 20 over [0, 1].
        assert_eq!(hist.counts.iter().sum::<u64>(), 1);
        assert_eq!(hist.counts[6], 1);
    }

    #[test]
    fn activation_all_ones_cover_hits_top_bin() {
        let inst = crate::instance::generate_set_cover(6, 10, 0.3, 1, 9, 3).unwrap();
        let hist = activation_ratios(&inst, &vec![1.0; 10]).unwrap();
        assert_eq!(hist.counts[19], inst.num_rows() as u64);
    }

    #[test]
    fn curve_reaches_zero_at_bks() {
        let trace = vec![TraceEvent {
            node: 3,
            bound: 1.0,
            incumbent: 5.0,
        }];
        let curve = primal_curve(&trace, 5.0);
        assert!(!curve.no_solution);
        assert_eq!(curve.points, vec![(3.0, 0.0)]);
    }

    #[test]
    fn empty_trace_marks_no_solution() {
        let curve = primal_curve(&[], 1.0);
        assert!(curve.no_solution);
        assert!(curve.points.is_empty());
        assert_eq!(curve.to_csv_rows(), ",,no_solution\n");
    }

    #[test]
    fn curve_monotone_on_solver_traces() {
        for seed in 0..5 {
            let inst = crate::instance::generate_set_cover(8, 14, 0.25, 1, 9, seed).unwrap();
            let res =
                crate::solver::branch_and_bound(&inst, &crate::solver::BnbConfig::default())
                    .unwrap();
            let bks = res.incumbent.as_ref().unwrap().objective;
            let curve = primal_curve(&res.trace, bks);
            for w in curve.points.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-12);
            }
            assert_eq!(curve.points.last().map(|&(_, g)| g), Some(0.0));
        }
    }
}
