//! Experiment configuration: a TOML document with sectioned tables, command
//! line overrides, and derivation of per-component configs. All randomness
//! fans out from the single top-level `seed` through labeled subseeds, so
//! one number reproduces an entire experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossConfig;
use crate::nn::GnnConfig;
use crate::pipeline::{LossKind, TrainConfig};
use crate::rng::derive_subseed;
use crate::solver::{BnbConfig, Branching, NodeOrder, SearchConfig};

/// Instance family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sc,
    Ca,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Sc => "sc",
            Family::Ca => "ca",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnSettings {
    pub embed_size: usize,
    pub num_rounds: usize,
    pub mlp_hidden: usize,
    pub icc_enabled: bool,
}

impl Default for GnnSettings {
    fn default() -> Self {
        Self {
            embed_size: 64,
            num_rounds: 2,
            mlp_hidden: 64,
            icc_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub epochs: usize,
    pub lr: f64,
    pub loss_kind: LossKind,
    pub pool_size: usize,
    pub weight_temperature: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 1e-4,
            loss_kind: LossKind::Vcl,
            pool_size: 10,
            weight_temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSettings {
    pub tau: f64,
    pub gamma: f64,
    pub lambda_rank: f64,
    pub pair_cap: usize,
}

impl Default for LossSettings {
    fn default() -> Self {
        Self {
            tau: 0.1,
            gamma: 0.9,
            lambda_rank: 0.01,
            pair_cap: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BnbSettings {
    /// Node budget for search/eval runs (matched between predict-and-search
    /// and the plain baseline).
    pub node_limit: u64,
    /// Node budget when collecting label pools and best-known solutions.
    pub label_node_limit: u64,
    pub time_limit: f64,
    pub abs_gap_tol: f64,
    pub integrality_tol: f64,
    /// Pool size for plain solver runs (labeling uses `train.pool_size`).
    pub pool_size: usize,
}

impl Default for BnbSettings {
    fn default() -> Self {
        Self {
            node_limit: 400,
            label_node_limit: 200_000,
            time_limit: 3600.0,
            abs_gap_tol: 1e-6,
            integrality_tol: 1e-6,
            pool_size: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSettings {
    pub k0: usize,
    pub k1: usize,
    pub delta: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            k0: 30,
            k1: 0,
            delta: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSettings {
    pub families: Vec<Family>,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub sc_rows: usize,
    pub sc_cols: usize,
    pub sc_density: f64,
    pub sc_cost_lo: i64,
    pub sc_cost_hi: i64,
    pub ca_items: usize,
    pub ca_bids: usize,
    pub ca_max_bundle: usize,
    /// Pairs sampled per instance by the separability analysis.
    pub analyze_pairs: usize,
}

impl Default for DataSettings {
    fn default() -> Self {
        Self {
            families: vec![Family::Sc],
            n_train: 60,
            n_valid: 15,
            n_test: 25,
            sc_rows: 40,
            sc_cols: 80,
            sc_density: 0.1,
            sc_cost_lo: 1,
            sc_cost_hi: 100,
            ca_items: 8,
            ca_bids: 20,
            ca_max_bundle: 3,
            analyze_pairs: 10_000,
        }
    }
}

impl DataSettings {
    /// Number of binary variables an instance of `family` will have.
    pub fn num_binary(&self, family: Family) -> usize {
        match family {
            Family::Sc => self.sc_cols,
            Family::Ca => self.ca_bids,
        }
    }
}

/// The whole experiment: every component's knobs plus the master seed and
/// output directory. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: String,
    pub gnn: GnnSettings,
    pub train: TrainSettings,
    pub loss: LossSettings,
    pub bnb: BnbSettings,
    pub search: SearchSettings,
    pub data: DataSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: "out".into(),
            gnn: GnnSettings::default(),
            train: TrainSettings::default(),
            loss: LossSettings::default(),
            bnb: BnbSettings::default(),
            search: SearchSettings::default(),
            data: DataSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn gnn_config(&self) -> GnnConfig {
        GnnConfig {
            embed_size: self.gnn.embed_size,
            num_rounds: self.gnn.num_rounds,
            mlp_hidden: self.gnn.mlp_hidden,
            icc_enabled: self.gnn.icc_enabled,
            seed: derive_subseed(self.seed, "gnn-init"),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            lr: self.train.lr,
            loss_kind: self.train.loss_kind,
            icc_enabled: self.gnn.icc_enabled,
            pool_size: self.train.pool_size,
            weight_temperature: self.train.weight_temperature,
            seed: derive_subseed(self.seed, "train"),
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            tau: self.loss.tau,
            gamma: self.loss.gamma,
            lambda_rank: self.loss.lambda_rank,
            pair_cap: self.loss.pair_cap,
            seed: derive_subseed(self.seed, "loss"),
        }
    }

    /// Solver budget for search/eval runs.
    pub fn search_bnb_config(&self) -> BnbConfig {
        BnbConfig {
            node_limit: self.bnb.node_limit,
            time_limit: self.bnb.time_limit,
            abs_gap_tol: self.bnb.abs_gap_tol,
            integrality_tol: self.bnb.integrality_tol,
            pool_size: self.bnb.pool_size,
            branching: Branching::MostFractional,
            node_order: NodeOrder::BestBound,
        }
    }

    /// Solver budget for label collection (pool size follows the training
    /// settings).
    pub fn label_bnb_config(&self) -> BnbConfig {
        BnbConfig {
            node_limit: self.bnb.label_node_limit,
            pool_size: self.train.pool_size,
            ..self.search_bnb_config()
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            k0: self.search.k0,
            k1: self.search.k1,
            delta: self.search.delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gnn_config().validate()?;
        self.train_config().validate()?;
        self.loss_config().validate()?;
        self.search_bnb_config().validate()?;
        self.label_bnb_config().validate()?;
        if self.data.families.is_empty() {
            return Err(Error::Config("data.families must not be empty".into()));
        }
        if self.data.n_train == 0 || self.data.n_valid == 0 || self.data.n_test == 0 {
            return Err(Error::Config(
                "data.n_train, data.n_valid, data.n_test must be >= 1".into(),
            ));
        }
        for &family in &self.data.families {
            let p = self.data.num_binary(family);
            if self.search.k0 + self.search.k1 > p {
                return Err(Error::Config(format!(
                    "SearchConfig: k0 + k1 = {} exceeds the {} binaries of family {}",
                    self.search.k0 + self.search.k1,
                    p,
                    family.name()
                )));
            }
        }
        if self.out_dir.is_empty() {
            return Err(Error::Config("out_dir must not be empty".into()));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize config: {e}")))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        Ok(cfg)
    }
}

/// Loads a config file (or the defaults) and applies `key=value` overrides
/// with dotted paths, e.g. `train.epochs=50` or `seed=7`. Override types
/// are coerced to the type of the existing value; unknown keys are
/// rejected with the offending name.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", p.display()))
            })?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if overrides.is_empty() {
        base.validate()?;
        return Ok(base);
    }

    let mut table = toml::Table::try_from(&base)
        .map_err(|e| Error::Config(format!("serialize config: {e}")))?;
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{entry}' is not key=value")))?;
        apply_override(&mut table, key.trim(), value.trim())?;
    }
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e| Error::Config(format!("config after overrides: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut current = table;
    loop {
        let part = parts
            .next()
            .ok_or_else(|| Error::Config(format!("empty override key '{key}'")))?;
        if parts.peek().is_none() {
            let slot = current
                .get_mut(part)
                .ok_or_else(|| Error::Config(format!("unknown config key '{key}'")))?;
            *slot = coerce(slot, value, key)?;
            return Ok(());
        }
        current = current
            .get_mut(part)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| Error::Config(format!("unknown config section in '{key}'")))?;
    }
}

fn coerce(existing: &toml::Value, raw: &str, key: &str) -> Result<toml::Value> {
    use toml::Value;
    let parse_err = |ty: &str| Error::Config(format!("config key '{key}' expects {ty}, got '{raw}'"));
    match existing {
        Value::Integer(_) => raw
            .parse::<i64>()
            .map(Value::Integer)
            .map_err(|_| parse_err("an integer")),
        Value::Float(_) => raw
            .parse::<f64>()
            .map(Value::Float)
            .map_err(|_| parse_err("a number")),
        Value::Boolean(_) => raw
            .parse::<bool>()
            .map(Value::Boolean)
            .map_err(|_| parse_err("a boolean")),
        Value::String(_) => Ok(Value::String(raw.to_string())),
        Value::Array(_) => Ok(Value::Array(
            raw.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| Value::String(s.trim().to_string()))
                .collect(),
        )),
        _ => Err(parse_err("a scalar")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_exactly() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        // The standard hyperparameter defaults survive the round trip
        // bit for bit.
        assert_eq!(back.gnn.embed_size, 64);
        assert_eq!(back.train.lr, 1e-4);
        assert_eq!(back.loss.tau, 0.1);
        assert_eq!(back.loss.lambda_rank, 0.01);
        assert_eq!(back.loss.gamma, 0.9);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml_str("bogus_key = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config(msg) if msg.contains("bogus_key")));
        let err = ExperimentConfig::from_toml_str("[train]\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config(msg) if msg.contains("bogus")));
    }

    #[test]
    fn overrides_apply_with_type_coercion() {
        let cfg = load_config(
            None,
            &[
                "seed=7".into(),
                "train.epochs=3".into(),
                "loss.tau=0.25".into(),
                "gnn.icc_enabled=false".into(),
                "data.families=sc,ca".into(),
                "search.k0=10".into(), // must fit the smaller CA family
                "out_dir=elsewhere".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.loss.tau, 0.25);
        assert!(!cfg.gnn.icc_enabled);
        assert_eq!(cfg.data.families, vec![Family::Sc, Family::Ca]);
        assert_eq!(cfg.search.k0, 10);
        assert_eq!(cfg.out_dir, "elsewhere");
    }

    #[test]
    fn override_unknown_key_names_it() {
        let err = load_config(None, &["train.bogus=1".into()]).unwrap_err();
        assert!(matches!(err, Error::Config(msg) if msg.contains("train.bogus")));
    }

    #[test]
    fn oversized_trust_region_rejected_naming_searchconfig() {
        let err = load_config(None, &["search.k0=999".into()]).unwrap_err();
        assert!(matches!(err, Error::Config(msg) if msg.contains("SearchConfig")));
    }

    #[test]
    fn seed_fan_out_is_labeled_and_stable() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.gnn_config().seed, cfg.gnn_config().seed);
        assert_ne!(cfg.gnn_config().seed, cfg.train_config().seed);
        assert_ne!(cfg.train_config().seed, cfg.loss_config().seed);
    }

    #[test]
    fn non_numeric_override_rejected() {
        let err = load_config(None, &["loss.tau=abc".into()]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
