//! The `coco` command line: generate, label, train, search, eval, analyze,
//! ablate. Every subcommand reads one TOML config (plus overrides), writes
//! its artifacts under the output directory, and leaves a resolved-config
//! snapshot for provenance. Identical config and seed reproduce identical
//! artifact bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_config, ExperimentConfig, Family};
use crate::error::{Error, Result};
use crate::eval::{activation_ratios, intra_constraint_variance, pairwise_ranking_stats, primal_curve};
use crate::graphenc::encode;
use crate::instance::{generate_comb_auction, generate_set_cover, read_instance, write_instance};
use crate::loss::LossConfig;
use crate::nn::{from_checkpoint_bytes, to_checkpoint_bytes, GnnModel};
use crate::pipeline::{
    collect_pool, evaluate_suite, train_model, DatasetItem, LabeledDataset, LossKind, Manifest,
    ManifestEntry, Split, TrainConfig,
};
use crate::rng::derive_subseed;
use crate::solver::{branch_and_bound, predict_and_search, BnbStatus, SolutionPool};

#[derive(Parser)]
#[command(name = "coco", version, about = "Desk-scale predict-and-search laboratory for MILP")]
struct Cli {
    /// TOML experiment config (defaults apply when omitted)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for instance-parallel stages
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Config override as section.key=value (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write instance files and the dataset manifest
    Generate,
    /// Solve every instance for label pools and best-known solutions
    Label,
    /// Train a model on the labeled train/valid splits
    Train,
    /// Run predict-and-search on the test split
    Search,
    /// Compare predict-and-search against the plain solver
    Eval,
    /// Emit diagnostic reports for the test split
    Analyze,
    /// Run the full loss-kind x ICC ablation grid
    Ablate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Label => "label",
            Command::Train => "train",
            Command::Search => "search",
            Command::Eval => "eval",
            Command::Analyze => "analyze",
            Command::Ablate => "ablate",
        }
    }
}

/// Entry point used by the binary; maps errors to the exit-code contract
/// (0 success, 1 config error, 2 runtime failure).
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let _ = env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("COCO_LOG", "info"),
    )
    .format_timestamp(None)
    .try_init();

    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("out_dir={}", out.display()));
    }
    let cfg = load_config(cli.config.as_deref(), &overrides)?;

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        // Ignore the error if a global pool already exists (e.g. tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let out = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out)?;
    let snapshot = cfg.to_toml_string()?;
    write_bytes(
        &out.join(format!("config-{}.resolved.toml", cli.command.name())),
        snapshot.as_bytes(),
    )?;

    match cli.command {
        Command::Generate => cmd_generate(&cfg, &out),
        Command::Label => cmd_label(&cfg, &out),
        Command::Train => cmd_train(&cfg, &out),
        Command::Search => cmd_search(&cfg, &out),
        Command::Eval => cmd_eval(&cfg, &out),
        Command::Analyze => cmd_analyze(&cfg, &out),
        Command::Ablate => cmd_ablate(&cfg, &out),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

// --- generate ----------------------------------------------------------------

fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = &cfg.data;
    let mut manifest = Manifest::default();
    for &family in &data.families {
        let total = data.n_train + data.n_valid + data.n_test;
        for i in 0..total {
            let seed = derive_subseed(cfg.seed, &format!("gen-{}-{i}", family.name()));
            let inst = match family {
                Family::Sc => generate_set_cover(
                    data.sc_rows,
                    data.sc_cols,
                    data.sc_density,
                    data.sc_cost_lo,
                    data.sc_cost_hi,
                    seed,
                )?,
                Family::Ca => {
                    generate_comb_auction(data.ca_items, data.ca_bids, data.ca_max_bundle, seed)?
                }
            };
            let file = format!("instances/{}.milp.json", inst.name);
            write_bytes(&out.join("data").join(&file), &write_instance(&inst)?)?;
            let split = if i < data.n_train {
                Split::Train
            } else if i < data.n_train + data.n_valid {
                Split::Valid
            } else {
                Split::Test
            };
            manifest.entries.push(ManifestEntry {
                instance: file,
                split,
                pool: None,
                bks: None,
            });
        }
    }
    write_bytes(&out.join("data/manifest.json"), &manifest.to_bytes()?)?;
    info!(
        "generate: wrote {} instances under {}",
        manifest.entries.len(),
        out.join("data").display()
    );
    Ok(())
}

// --- label ---------------------------------------------------------------

fn instance_stem(entry: &ManifestEntry) -> String {
    Path::new(&entry.instance)
        .file_name()
        .map(|s| s.to_string_lossy().replace(".milp.json", ""))
        .unwrap_or_else(|| entry.instance.clone())
}

fn cmd_label(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data_dir = out.join("data");
    let mut manifest = Manifest::from_bytes(&read_bytes(&data_dir.join("manifest.json"))?)?;
    let bnb = cfg.label_bnb_config();

    let labeled: Vec<Result<Option<(String, SolutionPool, f64)>>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let inst = read_instance(&read_bytes(&data_dir.join(&entry.instance))?)?;
            match collect_pool(&inst, &bnb) {
                Ok(pool) => {
                    let bks = pool.best().expect("nonempty pool").objective;
                    Ok(Some((instance_stem(entry), pool, bks)))
                }
                Err(Error::Data(msg)) => {
                    warn!("label: skipping instance: {msg}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    for (entry, result) in manifest.entries.iter_mut().zip(labeled) {
        match result? {
            Some((stem, pool, bks)) => {
                let file = format!("pools/{stem}.pool.json");
                let mut bytes = serde_json::to_vec_pretty(&pool)?;
                bytes.push(b'\n');
                write_bytes(&data_dir.join(&file), &bytes)?;
                entry.pool = Some(file);
                entry.bks = Some(bks);
            }
            None => {
                entry.pool = None;
                entry.bks = None;
            }
        }
    }
    write_bytes(&data_dir.join("manifest.json"), &manifest.to_bytes()?)?;
    info!("label: pools and best-known solutions written");
    Ok(())
}

/// Loads the labeled dataset rooted at `<out>/data`, skipping entries
/// without pools.
fn load_dataset(out: &Path) -> Result<LabeledDataset> {
    let data_dir = out.join("data");
    let manifest = Manifest::from_bytes(&read_bytes(&data_dir.join("manifest.json"))?)?;
    let mut items = Vec::new();
    for entry in &manifest.entries {
        let Some(pool_path) = &entry.pool else {
            warn!("dataset: {} has no pool, skipping", entry.instance);
            continue;
        };
        let instance = read_instance(&read_bytes(&data_dir.join(&entry.instance))?)?;
        let pool: SolutionPool = serde_json::from_slice(&read_bytes(&data_dir.join(pool_path))?)
            .map_err(|e| Error::Parse(format!("pool {pool_path}: {e}")))?;
        let bks = entry
            .bks
            .ok_or_else(|| Error::Data(format!("{} lacks a BKS", entry.instance)))?;
        items.push(DatasetItem {
            name: instance.name.clone(),
            split: entry.split,
            instance,
            pool,
            bks,
        });
    }
    if items.is_empty() {
        return Err(Error::Data(
            "dataset is empty; run `coco generate` and `coco label` first".into(),
        ));
    }
    Ok(LabeledDataset { items })
}

// --- train ---------------------------------------------------------------

fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = load_dataset(out)?;
    let (model, log) = train_model(
        &dataset,
        &cfg.gnn_config(),
        &cfg.train_config(),
        &cfg.loss_config(),
    )?;
    write_bytes(&out.join("train/model.json"), &to_checkpoint_bytes(&model)?)?;
    write_bytes(&out.join("train/log.csv"), log.to_csv().as_bytes())?;
    info!(
        "train: best epoch {} (valid loss {})",
        log.best_epoch,
        log.epochs[log.best_epoch].valid_loss
    );
    Ok(())
}

fn load_model(out: &Path) -> Result<GnnModel> {
    from_checkpoint_bytes(&read_bytes(&out.join("train/model.json"))?)
}

// --- search ----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SearchRow {
    name: String,
    bks: f64,
    status: BnbStatus,
    objective: Option<f64>,
    gap_abs: Option<f64>,
    nodes_explored: u64,
}

fn cmd_search(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = load_dataset(out)?;
    let model = load_model(out)?;
    let sc = cfg.search_config();
    let bnb = cfg.search_bnb_config();
    let test: Vec<&DatasetItem> = dataset.split(Split::Test).collect();
    let rows: Vec<Result<SearchRow>> = test
        .par_iter()
        .map(|item| {
            let res = predict_and_search(&item.instance, &model, &sc, &bnb)?;
            let objective = res.incumbent.as_ref().map(|a| a.objective);
            Ok(SearchRow {
                name: item.name.clone(),
                bks: item.bks,
                status: res.status,
                objective,
                gap_abs: objective.map(|o| (o - item.bks).abs()),
                nodes_explored: res.nodes_explored,
            })
        })
        .collect();
    let rows: Vec<SearchRow> = rows.into_iter().collect::<Result<_>>()?;
    let mut bytes = serde_json::to_vec_pretty(&rows)?;
    bytes.push(b'\n');
    write_bytes(&out.join("search/results.json"), &bytes)?;
    info!("search: {} instances searched", rows.len());
    Ok(())
}

// --- eval ----------------------------------------------------------------

fn cmd_eval(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = load_dataset(out)?;
    let model = load_model(out)?;
    let table = evaluate_suite(&dataset, &model, &cfg.search_config(), &cfg.search_bnb_config())?;
    write_bytes(&out.join("eval/results.csv"), table.to_csv().as_bytes())?;
    let summary = format!(
        "metric,value\nmean_ps_objective,{}\nmean_ps_gap,{}\nmean_base_gap,{}\nwins,{}\nties,{}\nlosses,{}\n",
        table.mean_ps_objective,
        table.mean_ps_gap,
        table.mean_base_gap,
        table.wins,
        table.ties,
        table.losses
    );
    write_bytes(&out.join("eval/summary.csv"), summary.as_bytes())?;
    info!(
        "eval: mean gap {} vs baseline {} ({} wins / {} ties / {} losses)",
        table.mean_ps_gap, table.mean_base_gap, table.wins, table.ties, table.losses
    );
    Ok(())
}

// --- analyze ---------------------------------------------------------------

struct AnalysisRow {
    name: String,
    separability: crate::eval::SeparabilityReport,
    variance: crate::eval::VarianceReport,
    activation: crate::eval::Histogram,
    curve: crate::eval::PrimalCurve,
}

fn cmd_analyze(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = load_dataset(out)?;
    let model = load_model(out)?;
    let bnb = cfg.search_bnb_config();
    let test: Vec<&DatasetItem> = dataset.split(Split::Test).collect();
    if test.is_empty() {
        return Err(Error::Data("no labeled test instances to analyze".into()));
    }

    let rows: Vec<Result<AnalysisRow>> = test
        .par_iter()
        .map(|item| {
            let inst = &item.instance;
            let graph = encode(inst);
            let pred = model.forward(&graph)?;
            let best = item.pool.best().expect("pools validated nonempty");
            let truth: Vec<u8> = best.values[..inst.num_binary]
                .iter()
                .map(|&v| if v >= 0.5 { 1 } else { 0 })
                .collect();
            let pair_seed = derive_subseed(cfg.seed, &format!("analyze-pairs-{}", item.name));
            let separability = pairwise_ranking_stats(
                &pred.marginals,
                &truth,
                cfg.data.analyze_pairs,
                pair_seed,
            )?;
            let variance = intra_constraint_variance(&pred.logits, inst)?;
            let activation = activation_ratios(inst, &best.values)?;
            let plain = branch_and_bound(inst, &bnb)?;
            let curve = primal_curve(&plain.trace, item.bks);
            Ok(AnalysisRow {
                name: item.name.clone(),
                separability,
                variance,
                activation,
                curve,
            })
        })
        .collect();
    let rows: Vec<AnalysisRow> = rows.into_iter().collect::<Result<_>>()?;

    let mut sep = String::from("instance,sampled_pairs,fraction_positive,mean_delta\n");
    let mut sep_hist = String::from("instance,bin_lo,bin_hi,count\n");
    let mut var = String::from("instance,intra_var_mean,inter_var,ratio\n");
    let mut act = String::from("instance,bin_lo,bin_hi,count\n");
    let mut curves = String::from("instance,time,gap_abs,note\n");
    for row in &rows {
        sep.push_str(&format!(
            "{},{},{},{}\n",
            row.name,
            row.separability.sampled_pairs,
            row.separability.fraction_positive,
            row.separability.mean_delta
        ));
        for line in row.separability.delta_histogram.to_csv_rows().lines() {
            sep_hist.push_str(&format!("{},{line}\n", row.name));
        }
        var.push_str(&format!(
            "{},{},{},{}\n",
            row.name, row.variance.intra_var_mean, row.variance.inter_var, row.variance.ratio
        ));
        for line in row.activation.to_csv_rows().lines() {
            act.push_str(&format!("{},{line}\n", row.name));
        }
        for line in row.curve.to_csv_rows().lines() {
            curves.push_str(&format!("{},{line}\n", row.name));
        }
    }
    write_bytes(&out.join("analyze/separability.csv"), sep.as_bytes())?;
    write_bytes(&out.join("analyze/separability_hist.csv"), sep_hist.as_bytes())?;
    write_bytes(&out.join("analyze/variance.csv"), var.as_bytes())?;
    write_bytes(&out.join("analyze/activation_hist.csv"), act.as_bytes())?;
    write_bytes(&out.join("analyze/curves.csv"), curves.as_bytes())?;
    info!("analyze: reports for {} instances written", rows.len());
    Ok(())
}

// --- ablate ----------------------------------------------------------------

fn variant_label(kind: LossKind, icc: bool) -> &'static str {
    match (kind, icc) {
        (LossKind::Vcl, true) => "full",
        (LossKind::Bce, true) => "bce",
        (LossKind::VclNoRank, true) => "no_rank",
        (LossKind::VclNoMscl, true) => "no_mscl",
        (LossKind::Vcl, false) => "no_icc",
        (LossKind::Bce, false) => "bce_no_icc",
        (LossKind::VclNoRank, false) => "no_rank_no_icc",
        (LossKind::VclNoMscl, false) => "no_mscl_no_icc",
    }
}

fn cmd_ablate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = load_dataset(out)?;
    let lcfg: LossConfig = cfg.loss_config();
    let sc = cfg.search_config();
    let bnb = cfg.search_bnb_config();

    let mut grid = String::from(
        "variant,loss_kind,icc,best_epoch,mean_ps_objective,mean_ps_gap,mean_base_gap,wins,ties,losses\n",
    );
    for kind in LossKind::ALL {
        for icc in [true, false] {
            let mut gnn = cfg.gnn_config();
            gnn.icc_enabled = icc;
            let tcfg = TrainConfig {
                loss_kind: kind,
                icc_enabled: icc,
                ..cfg.train_config()
            };
            let (model, log) = train_model(&dataset, &gnn, &tcfg, &lcfg)?;
            let table = evaluate_suite(&dataset, &model, &sc, &bnb)?;
            info!(
                "ablate[{}]: mean gap {} ({} wins / {} ties / {} losses)",
                variant_label(kind, icc),
                table.mean_ps_gap,
                table.wins,
                table.ties,
                table.losses
            );
            grid.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                variant_label(kind, icc),
                kind.name(),
                icc,
                log.best_epoch,
                table.mean_ps_objective,
                table.mean_ps_gap,
                table.mean_base_gap,
                table.wins,
                table.ties,
                table.losses
            ));
        }
    }
    write_bytes(&out.join("ablate/grid.csv"), grid.as_bytes())?;
    info!("ablate: grid written to {}", out.join("ablate/grid.csv").display());
    Ok(())
}
