//! Desk-scale predict-and-search laboratory for mixed-integer linear programs.
//!
//! The crate bundles everything needed to study learned primal heuristics
//! without an external solver:
//!
//! - [`instance`]: MILP data model, feasibility checking, and deterministic
//!   set-covering / combinatorial-auction generators.
//! - [`graphenc`]: variable-constraint bipartite graph encoding.
//! - [`nn`]: a GNN predictor (half-convolutions, intra-constraint competitive
//!   normalization, jumping-knowledge head) with exact reverse-mode gradients
//!   and an Adam optimizer.
//! - [`loss`]: weighted BCE, multi-sample contrastive loss, pairwise ranking
//!   loss, and their combination, all with analytic gradients.
//! - [`solver`]: bounded-variable primal simplex, exact branch-and-bound with
//!   solution pooling, and trust-region predict-and-search.
//! - [`pipeline`]: label collection, training with validation-based model
//!   selection, and batch evaluation.
//! - [`eval`]: diagnostic analyses (logit separability, intra-constraint
//!   variance, activation ratios, primal-gap curves).
//! - [`config`] / [`cli`]: TOML experiment configs and the `coco` binary.
//!
//! All randomness flows from explicit 64-bit seeds through [`rng::SplitMix64`];
//! identical seeds reproduce identical artifacts byte for byte.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod graphenc;
pub mod instance;
pub mod loss;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
