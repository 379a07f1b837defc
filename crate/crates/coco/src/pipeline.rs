//! Orchestration: label collection, solution weighting, training with
//! validation-based model selection, and batch predict-and-search
//! evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphenc::{encode, BipartiteGraph};
use crate::instance::{check_feasibility, MilpInstance, Sense};
use crate::loss::{bce_weighted, vcl_with, LabeledSolutionSet, LossConfig};
use crate::nn::{
    adam_step, init_model, AdamState, GnnConfig, GnnModel, Prediction, ADAM_BETA1, ADAM_BETA2,
    ADAM_EPS,
};
use crate::rng::{derive_subseed, SplitMix64};
use crate::solver::{branch_and_bound, predict_and_search, BnbConfig, SearchConfig, SolutionPool};

/// Which supervision objective drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Bce,
    Vcl,
    VclNoRank,
    VclNoMscl,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Bce,
        LossKind::Vcl,
        LossKind::VclNoRank,
        LossKind::VclNoMscl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Vcl => "vcl",
            LossKind::VclNoRank => "vcl_no_rank",
            LossKind::VclNoMscl => "vcl_no_mscl",
        }
    }
}

/// Training protocol settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub loss_kind: LossKind,
    pub icc_enabled: bool,
    /// Labeled solutions kept per instance.
    pub pool_size: usize,
    pub weight_temperature: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 1e-4,
            loss_kind: LossKind::Vcl,
            icc_enabled: true,
            pool_size: 10,
            weight_temperature: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("TrainConfig: epochs must be >= 1".into()));
        }
        if self.lr <= 0.0 || self.weight_temperature <= 0.0 || self.pool_size == 0 {
            return Err(Error::Config(
                "TrainConfig: lr, weight_temperature, and pool_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Dataset split tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// One labeled instance.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub name: String,
    pub split: Split,
    pub instance: MilpInstance,
    pub pool: SolutionPool,
    /// Best-known objective (the pool's best at desk scale).
    pub bks: f64,
}

/// Labeled instances across disjoint splits.
#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    pub items: Vec<DatasetItem>,
}

impl LabeledDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetItem> {
        self.items.iter().filter(move |it| it.split == split)
    }

    pub fn validate(&self) -> Result<()> {
        for item in &self.items {
            if item.pool.is_empty() {
                return Err(Error::Data(format!("instance {} has an empty pool", item.name)));
            }
        }
        Ok(())
    }
}

/// Runs the exact solver and returns its solution pool; an instance without
/// any feasible solution within the limits is a labeled-data error.
pub fn collect_pool(inst: &MilpInstance, cfg: &BnbConfig) -> Result<SolutionPool> {
    let result = branch_and_bound(inst, cfg)?;
    if result.pool.is_empty() {
        return Err(Error::Data(format!(
            "no feasible solution found for {} within limits (status {:?})",
            inst.name, result.status
        )));
    }
    Ok(result.pool)
}

/// Boltzmann weights over pool objectives: better objectives get more mass,
/// shifted by the best objective for overflow safety, normalized to sum 1.
pub fn compute_weights(pool: &SolutionPool, temperature: f64) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::Data("cannot weight an empty pool".into()));
    }
    if temperature <= 0.0 {
        return Err(Error::Config(format!(
            "weight temperature must be positive, got {temperature}"
        )));
    }
    let objectives = pool.objectives();
    let sign = match pool.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let best = objectives
        .iter()
        .map(|&o| sign * o)
        .fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = objectives
        .iter()
        .map(|&o| (-(sign * o - best) / temperature).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Builds the loss-facing label set from a pool, validating feasibility of
/// every member.
pub fn labeled_set(
    inst: &MilpInstance,
    pool: &SolutionPool,
    temperature: f64,
) -> Result<LabeledSolutionSet> {
    let p = inst.num_binary;
    let weights = compute_weights(pool, temperature)?;
    let mut solutions = Vec::with_capacity(pool.len());
    for entry in &pool.entries {
        let report = check_feasibility(inst, &entry.values, 1e-6)?;
        if !report.feasible {
            return Err(Error::Data(format!(
                "pool member of {} is infeasible",
                inst.name
            )));
        }
        solutions.push(
            entry.values[..p]
                .iter()
                .map(|&v| if v >= 0.5 { 1u8 } else { 0u8 })
                .collect(),
        );
    }
    LabeledSolutionSet::new(solutions, weights, pool.objectives())
}

/// Per-epoch record of mean training and validation loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,valid_loss\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.valid_loss));
        }
        out
    }

    pub fn min_valid_loss(&self) -> Option<f64> {
        self.epochs
            .iter()
            .map(|e| e.valid_loss)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}

/// Loss dispatch shared by training and validation.
pub fn compute_loss(
    kind: LossKind,
    pred: &Prediction,
    labels: &LabeledSolutionSet,
    lcfg: &LossConfig,
) -> Result<(f64, Vec<f64>)> {
    match kind {
        LossKind::Bce => bce_weighted(pred, labels),
        LossKind::Vcl => vcl_with(pred, labels, lcfg, true, true),
        LossKind::VclNoRank => vcl_with(pred, labels, lcfg, true, false),
        LossKind::VclNoMscl => vcl_with(pred, labels, lcfg, false, true),
    }
}

struct PreparedItem {
    name: String,
    graph: BipartiteGraph,
    labels: LabeledSolutionSet,
}

/// Trains a model with per-instance Adam steps in seeded shuffled order;
/// returns the parameter snapshot with the lowest validation loss (first
/// epoch on ties) together with the full log.
pub fn train_model(
    dataset: &LabeledDataset,
    gcfg: &GnnConfig,
    tcfg: &TrainConfig,
    lcfg: &LossConfig,
) -> Result<(GnnModel, TrainingLog)> {
    tcfg.validate()?;
    lcfg.validate()?;
    dataset.validate()?;

    let prepare = |item: &DatasetItem| -> Result<PreparedItem> {
        Ok(PreparedItem {
            name: item.name.clone(),
            graph: encode(&item.instance),
            labels: labeled_set(&item.instance, &item.pool, tcfg.weight_temperature)?,
        })
    };
    let train_items: Vec<PreparedItem> = dataset
        .split(Split::Train)
        .map(prepare)
        .collect::<Result<_>>()?;
    let valid_items: Vec<PreparedItem> = dataset
        .split(Split::Valid)
        .map(prepare)
        .collect::<Result<_>>()?;
    if train_items.is_empty() || valid_items.is_empty() {
        return Err(Error::Data(
            "training requires nonempty train and valid splits".into(),
        ));
    }

    let mut model_cfg = gcfg.clone();
    model_cfg.icc_enabled = tcfg.icc_enabled;
    let mut model = init_model(&model_cfg)?;
    let mut adam = AdamState::new(model.param_count());

    let mut log = TrainingLog::default();
    let mut best: Option<(f64, GnnModel)> = None;

    for epoch in 0..tcfg.epochs {
        let mut order: Vec<usize> = (0..train_items.len()).collect();
        let mut rng = SplitMix64::new(derive_subseed(tcfg.seed, &format!("shuffle-{epoch}")));
        rng.shuffle(&mut order);

        let mut train_loss_sum = 0.0;
        for &idx in &order {
            let item = &train_items[idx];
            let (pred, trace) = model.forward_traced(&item.graph)?;
            let (loss, grad) = compute_loss(tcfg.loss_kind, &pred, &item.labels, lcfg)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss on instance {} at epoch {epoch}",
                    item.name
                )));
            }
            train_loss_sum += loss;
            let grads = model.backward(&item.graph, &trace, &grad)?;
            adam_step(
                &mut model, &grads, &mut adam, tcfg.lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
            )?;
        }
        let train_loss = train_loss_sum / train_items.len() as f64;

        let mut valid_loss_sum = 0.0;
        for item in &valid_items {
            let pred = model.forward(&item.graph)?;
            let (loss, _) = compute_loss(tcfg.loss_kind, &pred, &item.labels, lcfg)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite validation loss on instance {} at epoch {epoch}",
                    item.name
                )));
            }
            valid_loss_sum += loss;
        }
        let valid_loss = valid_loss_sum / valid_items.len() as f64;

        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            valid_loss,
        });
        if best.as_ref().map_or(true, |(b, _)| valid_loss < *b) {
            best = Some((valid_loss, model.clone()));
            log.best_epoch = epoch;
        }
    }

    let (_, selected) = best.expect("at least one epoch ran");
    Ok((selected, log))
}

/// Absolute primal gap `|obj - bks|`.
pub fn absolute_gap(objective: f64, bks: f64) -> f64 {
    (objective - bks).abs()
}

/// Outcome of predict-and-search against the plain solver on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceResult {
    pub name: String,
    pub bks: f64,
    pub ps_objective: Option<f64>,
    /// `|obj - bks|`; infinite when no solution was found.
    pub ps_gap: f64,
    pub base_objective: Option<f64>,
    pub base_gap: f64,
    pub outcome: Outcome,
}

/// Per-instance rows plus aggregates over the test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<InstanceResult>,
    pub mean_ps_objective: f64,
    pub mean_ps_gap: f64,
    pub mean_base_gap: f64,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("instance,bks,ps_objective,ps_gap,base_objective,base_gap,outcome\n");
        for r in &self.rows {
            let fmt_opt = |o: Option<f64>| o.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{:?}\n",
                r.name,
                r.bks,
                fmt_opt(r.ps_objective),
                r.ps_gap,
                fmt_opt(r.base_objective),
                r.base_gap,
                r.outcome
            ));
        }
        out
    }
}

/// Runs predict-and-search and the plain solver under the same budget on
/// every test instance, reporting absolute gaps against the stored BKS and
/// win/tie/loss counts (on gaps, smaller better, tolerance 1e-9).
pub fn evaluate_suite(
    dataset: &LabeledDataset,
    model: &GnnModel,
    sc: &SearchConfig,
    cfg: &BnbConfig,
) -> Result<ResultTable> {
    let mut rows = Vec::new();
    for item in dataset.split(Split::Test) {
        let ps = predict_and_search(&item.instance, model, sc, cfg)?;
        let base = branch_and_bound(&item.instance, cfg)?;
        let ps_objective = ps.incumbent.as_ref().map(|a| a.objective);
        let base_objective = base.incumbent.as_ref().map(|a| a.objective);
        let ps_gap = ps_objective.map_or(f64::INFINITY, |o| absolute_gap(o, item.bks));
        let base_gap = base_objective.map_or(f64::INFINITY, |o| absolute_gap(o, item.bks));
        let outcome = if (ps_gap - base_gap).abs() <= 1e-9 || (ps_gap.is_infinite() && base_gap.is_infinite()) {
            Outcome::Tie
        } else if ps_gap < base_gap {
            Outcome::Win
        } else {
            Outcome::Loss
        };
        rows.push(InstanceResult {
            name: item.name.clone(),
            bks: item.bks,
            ps_objective,
            ps_gap,
            base_objective,
            base_gap,
            outcome,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data("test split is empty".into()));
    }
    let solved: Vec<f64> = rows.iter().filter_map(|r| r.ps_objective).collect();
    let mean_ps_objective = if solved.is_empty() {
        f64::NAN
    } else {
        solved.iter().sum::<f64>() / solved.len() as f64
    };
    let mean_ps_gap = rows.iter().map(|r| r.ps_gap).sum::<f64>() / rows.len() as f64;
    let mean_base_gap = rows.iter().map(|r| r.base_gap).sum::<f64>() / rows.len() as f64;
    let wins = rows.iter().filter(|r| r.outcome == Outcome::Win).count();
    let ties = rows.iter().filter(|r| r.outcome == Outcome::Tie).count();
    let losses = rows.iter().filter(|r| r.outcome == Outcome::Loss).count();
    Ok(ResultTable {
        rows,
        mean_ps_objective,
        mean_ps_gap,
        mean_base_gap,
        wins,
        ties,
        losses,
    })
}

// --- dataset manifest on disk ------------------------------------------------

/// One manifest line: all paths are relative to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub instance: String,
    pub split: Split,
    pub pool: Option<String>,
    pub bks: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_comb_auction, generate_set_cover, Assignment, ConstraintRow, Relation};

    fn toy_packing() -> MilpInstance {
        MilpInstance {
            name: "toy".into(),
            num_vars: 2,
            num_binary: 2,
            objective: vec![-3.0, -2.0],
            sense: Sense::Minimize,
            rows: vec![ConstraintRow::new(
                vec![(0, 1.0), (1, 1.0)],
                Relation::Le,
                1.0,
            )],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        }
    }

    #[test]
    fn collect_pool_toy_example() {
        let cfg = BnbConfig {
            pool_size: 2,
            ..BnbConfig::default()
        };
        let pool = collect_pool(&toy_packing(), &cfg).unwrap();
        assert_eq!(pool.objectives(), vec![-3.0, -2.0]);

        let cfg1 = BnbConfig {
            pool_size: 1,
            ..BnbConfig::default()
        };
        let pool1 = collect_pool(&toy_packing(), &cfg1).unwrap();
        assert_eq!(pool1.objectives(), vec![-3.0]);
    }

    #[test]
    fn weights_closed_form() {
        let mut pool = SolutionPool::new(Sense::Minimize);
        pool.entries.push(Assignment {
            values: vec![1.0, 0.0],
            objective: 0.0,
        });
        pool.entries.push(Assignment {
            values: vec![0.0, 1.0],
            objective: std::f64::consts::LN_2,
        });
        let w = compute_weights(&pool, 1.0).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_single_and_uniform() {
        let mut pool = SolutionPool::new(Sense::Maximize);
        pool.entries.push(Assignment {
            values: vec![1.0],
            objective: 5.0,
        });
        assert_eq!(compute_weights(&pool, 1.0).unwrap(), vec![1.0]);

        pool.entries.push(Assignment {
            values: vec![0.0],
            objective: 5.0,
        });
        let w = compute_weights(&pool, 1.0).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn weights_invariant_to_objective_shift() {
        let mk = |shift: f64| {
            let mut pool = SolutionPool::new(Sense::Minimize);
            for (i, obj) in [3.0, 4.5, 7.25].iter().enumerate() {
                pool.entries.push(Assignment {
                    values: vec![i as f64],
                    objective: obj + shift,
                });
            }
            compute_weights(&pool, 1.0).unwrap()
        };
        let a = mk(0.0);
        let b = mk(123.0);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn micro_dataset(seeds: std::ops::Range<u64>, family_ca: bool) -> LabeledDataset {
        let cfg = BnbConfig {
            pool_size: 4,
            ..BnbConfig::default()
        };
        let mut items = Vec::new();
        let total = seeds.clone().count();
        for (i, seed) in seeds.enumerate() {
            let inst = if family_ca {
                generate_comb_auction(5, 8, 3, seed).unwrap()
            } else {
                generate_set_cover(5, 8, 0.3, 1, 9, seed).unwrap()
            };
            let pool = collect_pool(&inst, &cfg).unwrap();
            let bks = pool.best().unwrap().objective;
            let split = if i + 2 < total {
                Split::Train
            } else if i + 1 < total {
                Split::Valid
            } else {
                Split::Test
            };
            items.push(DatasetItem {
                name: inst.name.clone(),
                split,
                instance: inst,
                pool,
                bks,
            });
        }
        LabeledDataset { items }
    }

    fn micro_gnn(seed: u64) -> GnnConfig {
        GnnConfig {
            embed_size: 8,
            num_rounds: 1,
            mlp_hidden: 8,
            icc_enabled: true,
            seed,
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = micro_dataset(0..5, false);
        let tcfg = TrainConfig {
            epochs: 3,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let lcfg = LossConfig::default();
        let (m1, l1) = train_model(&data, &micro_gnn(7), &tcfg, &lcfg).unwrap();
        let (m2, l2) = train_model(&data, &micro_gnn(7), &tcfg, &lcfg).unwrap();
        assert_eq!(m1.flatten(), m2.flatten());
        assert_eq!(l1.best_epoch, l2.best_epoch);
    }

    #[test]
    fn bce_and_vcl_select_different_parameters() {
        let data = micro_dataset(0..5, false);
        let lcfg = LossConfig::default();
        let t_bce = TrainConfig {
            epochs: 2,
            lr: 1e-3,
            loss_kind: LossKind::Bce,
            ..TrainConfig::default()
        };
        let t_vcl = TrainConfig {
            loss_kind: LossKind::Vcl,
            ..t_bce.clone()
        };
        let (m1, _) = train_model(&data, &micro_gnn(7), &t_bce, &lcfg).unwrap();
        let (m2, _) = train_model(&data, &micro_gnn(7), &t_vcl, &lcfg).unwrap();
        assert_ne!(m1.flatten(), m2.flatten());
    }

    #[test]
    fn best_epoch_matches_log_minimum() {
        let data = micro_dataset(2..8, true);
        let tcfg = TrainConfig {
            epochs: 4,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let (_, log) = train_model(&data, &micro_gnn(3), &tcfg, &LossConfig::default()).unwrap();
        let min = log.min_valid_loss().unwrap();
        assert_eq!(log.epochs[log.best_epoch].valid_loss, min);
        // First index attaining the minimum.
        let first = log
            .epochs
            .iter()
            .position(|e| e.valid_loss == min)
            .unwrap();
        assert_eq!(log.best_epoch, first);
    }

    #[test]
    fn single_instance_memorization_smoke() {
        // Training loss on one memorizable instance drops by >= 50%.
        let cfg = BnbConfig {
            pool_size: 3,
            ..BnbConfig::default()
        };
        let inst = generate_set_cover(5, 8, 0.3, 1, 9, 42).unwrap();
        let pool = collect_pool(&inst, &cfg).unwrap();
        let bks = pool.best().unwrap().objective;
        let mk = |split| DatasetItem {
            name: inst.name.clone(),
            split,
            instance: inst.clone(),
            pool: pool.clone(),
            bks,
        };
        let data = LabeledDataset {
            items: vec![mk(Split::Train), mk(Split::Valid)],
        };
        let tcfg = TrainConfig {
            epochs: 200,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let (_, log) = train_model(&data, &micro_gnn(1), &tcfg, &LossConfig::default()).unwrap();
        let first = log.epochs.first().unwrap().train_loss;
        let last = log.epochs.last().unwrap().train_loss;
        assert!(
            last <= 0.5 * first,
            "train loss {first} -> {last} did not halve"
        );
    }

    #[test]
    fn gap_arithmetic_spot_values() {
        let g1 = absolute_gap(11.43, 11.16);
        assert!((g1 - 0.27).abs() < 1e-12);
        let g2 = absolute_gap(97228.93, 97524.37);
        assert!((g2 - 295.44).abs() < 1e-9);
        assert_eq!(absolute_gap(5.5, 5.5), 0.0);
    }

    #[test]
    fn evaluate_suite_produces_rows_and_counts() {
        let data = micro_dataset(0..6, true);
        let tcfg = TrainConfig {
            epochs: 2,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let (model, _) = train_model(&data, &micro_gnn(5), &tcfg, &LossConfig::default()).unwrap();
        let sc = SearchConfig {
            k0: 2,
            k1: 0,
            delta: 1,
        };
        let table = evaluate_suite(&data, &model, &sc, &BnbConfig::default()).unwrap();
        assert_eq!(table.rows.len(), data.split(Split::Test).count());
        assert_eq!(
            table.wins + table.ties + table.losses,
            table.rows.len()
        );
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            entries: vec![ManifestEntry {
                instance: "instances/a.milp.json".into(),
                split: Split::Train,
                pool: Some("pools/a.pool.json".into()),
                bks: Some(12.5),
            }],
        };
        let bytes = m.to_bytes().unwrap();
        let back = Manifest::from_bytes(&bytes).unwrap();
        assert_eq!(back.entries.len(), 1);
        assert_eq!(back.entries[0].bks, Some(12.5));
    }
}
