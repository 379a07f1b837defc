//! GNN predictor over bipartite MILP graphs.
//!
//! Architecture, per forward pass:
//!
//! 1. Input MLPs embed variable, constraint, and edge features into `d`
//!    dimensions.
//! 2. `K` rounds of half-convolutions: constraints aggregate messages from
//!    incident (constraint, edge, variable) triples and update, then
//!    variables do the same against the fresh constraint embeddings.
//! 3. After each round, the intra-constraint competitive (ICC) update
//!    subtracts `beta` times each variable's averaged peer embedding
//!    ([`icc_apply`]).
//! 4. A jumping-knowledge head concatenates the variable embeddings of all
//!    rounds (including round 0) and an output MLP maps to one logit per
//!    variable; marginals are sigmoids of the binary-variable logits.
//!
//! Every aggregation sums its operands in ascending value order
//! ([`f64::total_cmp`]), so results are invariant to node relabeling bit for
//! bit. [`GnnModel::backward`] implements exact reverse-mode differentiation
//! of the whole pipeline, including through the ICC update and its `beta`.

mod adam;
mod mlp;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphenc::{BipartiteGraph, CON_FEATURES, EDGE_FEATURES, VAR_FEATURES};
use crate::rng::SplitMix64;
use mlp::Mlp;

/// Shape and seed of a GNN predictor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub embed_size: usize,
    pub num_rounds: usize,
    pub mlp_hidden: usize,
    pub icc_enabled: bool,
    pub seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            embed_size: 64,
            num_rounds: 2,
            mlp_hidden: 64,
            icc_enabled: true,
            seed: 0,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_size == 0 || self.num_rounds == 0 || self.mlp_hidden == 0 {
            return Err(Error::Config(
                "GnnConfig: embed_size, num_rounds, and mlp_hidden must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RoundParams {
    con_msg: Mlp,
    con_upd: Mlp,
    var_msg: Mlp,
    var_upd: Mlp,
    beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct GnnParams {
    var_in: Mlp,
    con_in: Mlp,
    edge_in: Mlp,
    rounds: Vec<RoundParams>,
    jk: Mlp,
    out: Mlp,
}

impl GnnParams {
    /// Canonical parameter order: input MLPs, then per round
    /// (con_msg, con_upd, var_msg, var_upd, beta), then the JK and output
    /// heads. Each MLP walks l1.w, l1.b, l2.w, l2.b.
    fn visit(&self, f: &mut impl FnMut(f64)) {
        self.var_in.visit(f);
        self.con_in.visit(f);
        self.edge_in.visit(f);
        for r in &self.rounds {
            r.con_msg.visit(f);
            r.con_upd.visit(f);
            r.var_msg.visit(f);
            r.var_upd.visit(f);
            f(r.beta);
        }
        self.jk.visit(f);
        self.out.visit(f);
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        self.var_in.visit_mut(f);
        self.con_in.visit_mut(f);
        self.edge_in.visit_mut(f);
        for r in self.rounds.iter_mut() {
            r.con_msg.visit_mut(f);
            r.con_upd.visit_mut(f);
            r.var_msg.visit_mut(f);
            r.var_upd.visit_mut(f);
            f(&mut r.beta);
        }
        self.jk.visit_mut(f);
        self.out.visit_mut(f);
    }

    fn zeros_like(&self) -> Self {
        Self {
            var_in: self.var_in.zeros_like(),
            con_in: self.con_in.zeros_like(),
            edge_in: self.edge_in.zeros_like(),
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundParams {
                    con_msg: r.con_msg.zeros_like(),
                    con_upd: r.con_upd.zeros_like(),
                    var_msg: r.var_msg.zeros_like(),
                    var_upd: r.var_upd.zeros_like(),
                    beta: 0.0,
                })
                .collect(),
            jk: self.jk.zeros_like(),
            out: self.out.zeros_like(),
        }
    }

    fn param_count(&self) -> usize {
        let mut count = 0;
        self.visit(&mut |_| count += 1);
        count
    }
}

/// The GNN predictor: all parameter blocks plus the configuration that
/// fixes their shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub cfg: GnnConfig,
    params: GnnParams,
}

/// Model output for one graph.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// One logit per binary variable (indices `0..p`).
    pub logits: Vec<f64>,
    /// `sigmoid(logit)`, clamped to the open unit interval.
    pub marginals: Vec<f64>,
    /// Variable embeddings after each round (`num_rounds + 1` matrices of
    /// `n * embed_size`), for diagnostics.
    pub layer_var_embeddings: Vec<Vec<f64>>,
}

/// Parameter gradients in the same canonical order as the model.
#[derive(Debug, Clone)]
pub struct GnnGrads {
    inner: GnnParams,
}

impl GnnGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.inner.param_count());
        self.inner.visit(&mut |v| out.push(v));
        out
    }

    /// Gradient of the ICC scale of round `k`.
    pub fn beta_grad(&self, k: usize) -> f64 {
        self.inner.rounds[k].beta
    }
}

/// Builds a model with seeded uniform fan-in weights; every `beta` starts
/// at 0 so the ICC update begins as the identity.
pub fn init_model(cfg: &GnnConfig) -> Result<GnnModel> {
    cfg.validate()?;
    let d = cfg.embed_size;
    let h = cfg.mlp_hidden;
    let mut rng = SplitMix64::new(cfg.seed);
    let params = GnnParams {
        var_in: Mlp::init(&mut rng, VAR_FEATURES, h, d),
        con_in: Mlp::init(&mut rng, CON_FEATURES, h, d),
        edge_in: Mlp::init(&mut rng, EDGE_FEATURES, h, d),
        rounds: (0..cfg.num_rounds)
            .map(|_| RoundParams {
                con_msg: Mlp::init(&mut rng, 3 * d, h, d),
                con_upd: Mlp::init(&mut rng, 2 * d, h, d),
                var_msg: Mlp::init(&mut rng, 3 * d, h, d),
                var_upd: Mlp::init(&mut rng, 2 * d, h, d),
                beta: 0.0,
            })
            .collect(),
        jk: Mlp::init(&mut rng, (cfg.num_rounds + 1) * d, h, d),
        out: Mlp::init(&mut rng, d, h, 1),
    };
    Ok(GnnModel {
        cfg: cfg.clone(),
        params,
    })
}

/// Sums values in ascending `total_cmp` order, making the result a function
/// of the multiset only.
fn sorted_sum(vals: &mut Vec<f64>) -> f64 {
    vals.sort_unstable_by(|a, b| a.total_cmp(b));
    vals.iter().sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One intra-constraint competitive update on a variable embedding matrix.
///
/// Three steps: per constraint, average the embeddings of its member
/// variables; per variable, average those constraint means over the
/// constraints it belongs to (variables in no constraint get 0); subtract
/// `beta` times the result from each embedding.
///
/// `incidence` lists `(constraint, variable)` pairs; every constraint index
/// that appears must have at least one member (guaranteed by construction
/// here since it appears in a pair).
pub fn icc_apply(
    var_emb: &[f64],
    num_vars: usize,
    embed: usize,
    incidence: &[(usize, usize)],
    num_cons: usize,
    beta: f64,
) -> Vec<f64> {
    assert_eq!(var_emb.len(), num_vars * embed, "embedding shape mismatch");
    let mut con_vars: Vec<Vec<usize>> = vec![Vec::new(); num_cons];
    let mut var_cons: Vec<Vec<usize>> = vec![Vec::new(); num_vars];
    for &(c, v) in incidence {
        con_vars[c].push(v);
        var_cons[v].push(c);
    }
    let (out, _) = icc_forward(var_emb, num_vars, embed, &con_vars, &var_cons, beta);
    out
}

/// ICC forward returning both the updated embeddings and the per-variable
/// peer means (needed for the beta gradient).
fn icc_forward(
    var_emb: &[f64],
    num_vars: usize,
    embed: usize,
    con_vars: &[Vec<usize>],
    var_cons: &[Vec<usize>],
    beta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let num_cons = con_vars.len();
    let mut con_mean = vec![0.0; num_cons * embed];
    let mut scratch: Vec<f64> = Vec::new();
    for (c, members) in con_vars.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let inv = 1.0 / members.len() as f64;
        for t in 0..embed {
            scratch.clear();
            scratch.extend(members.iter().map(|&v| var_emb[v * embed + t]));
            con_mean[c * embed + t] = sorted_sum(&mut scratch) * inv;
        }
    }
    let mut var_mean = vec![0.0; num_vars * embed];
    for (v, cons) in var_cons.iter().enumerate() {
        if cons.is_empty() {
            continue; // no competitors, no deviation
        }
        let inv = 1.0 / cons.len() as f64;
        for t in 0..embed {
            scratch.clear();
            scratch.extend(cons.iter().map(|&c| con_mean[c * embed + t]));
            var_mean[v * embed + t] = sorted_sum(&mut scratch) * inv;
        }
    }
    let out: Vec<f64> = var_emb
        .iter()
        .zip(var_mean.iter())
        .map(|(h, hbar)| h - beta * hbar)
        .collect();
    (out, var_mean)
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardTrace {
    num_vars: usize,
    num_cons: usize,
    num_edges: usize,
    /// Variable embeddings per round, `num_rounds + 1` matrices `n x d`
    /// (post-ICC for rounds >= 1).
    h_var: Vec<Vec<f64>>,
    h_con: Vec<Vec<f64>>,
    h_edge: Vec<f64>,
    var_in_hid: Vec<f64>,
    con_in_hid: Vec<f64>,
    edge_in_hid: Vec<f64>,
    rounds: Vec<RoundTrace>,
    jk_hid: Vec<f64>,
    jk_out: Vec<f64>,
    out_hid: Vec<f64>,
    logits_all: Vec<f64>,
}

struct RoundTrace {
    con_msg_in: Vec<f64>,
    con_msg_hid: Vec<f64>,
    con_upd_in: Vec<f64>,
    con_upd_hid: Vec<f64>,
    var_msg_in: Vec<f64>,
    var_msg_hid: Vec<f64>,
    var_upd_in: Vec<f64>,
    var_upd_hid: Vec<f64>,
    /// Per-variable peer means (empty when ICC is disabled).
    icc_var_mean: Vec<f64>,
}

struct Adjacency {
    con_edges: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
    con_vars: Vec<Vec<usize>>,
    var_cons: Vec<Vec<usize>>,
}

fn adjacency(g: &BipartiteGraph) -> Adjacency {
    let mut con_edges = vec![Vec::new(); g.num_con_nodes];
    let mut var_edges = vec![Vec::new(); g.num_var_nodes];
    let mut con_vars = vec![Vec::new(); g.num_con_nodes];
    let mut var_cons = vec![Vec::new(); g.num_var_nodes];
    for (e, edge) in g.edges.iter().enumerate() {
        con_edges[edge.con].push(e);
        var_edges[edge.var].push(e);
        con_vars[edge.con].push(edge.var);
        var_cons[edge.var].push(edge.con);
    }
    Adjacency {
        con_edges,
        var_edges,
        con_vars,
        var_cons,
    }
}

impl GnnModel {
    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    /// Flat parameter vector in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.params.visit(&mut |v| out.push(v));
        out
    }

    /// Overwrites all parameters from a flat vector in canonical order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, model has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut it = flat.iter();
        self.params.visit_mut(&mut |v| {
            *v = *it.next().expect("length checked");
        });
        Ok(())
    }

    pub fn beta(&self, round: usize) -> f64 {
        self.params.rounds[round].beta
    }

    pub fn set_beta(&mut self, round: usize, value: f64) {
        self.params.rounds[round].beta = value;
    }

    /// Zero-initialized gradient container matching this model.
    pub fn zero_grads(&self) -> GnnGrads {
        GnnGrads {
            inner: self.params.zeros_like(),
        }
    }

    pub fn forward(&self, g: &BipartiteGraph) -> Result<Prediction> {
        Ok(self.forward_traced(g)?.0)
    }

    /// Forward pass that records everything [`Self::backward`] needs.
    pub fn forward_traced(&self, g: &BipartiteGraph) -> Result<(Prediction, ForwardTrace)> {
        let d = self.cfg.embed_size;
        let hd = self.cfg.mlp_hidden;
        let rounds = self.cfg.num_rounds;
        let n = g.num_var_nodes;
        let m = g.num_con_nodes;
        let ne = g.edges.len();
        if g.var_features.len() != n * VAR_FEATURES || g.con_features.len() != m * CON_FEATURES {
            return Err(Error::Dimension("graph feature matrices are ragged".into()));
        }
        let adj = adjacency(g);

        let mut trace = ForwardTrace {
            num_vars: n,
            num_cons: m,
            num_edges: ne,
            h_var: Vec::with_capacity(rounds + 1),
            h_con: Vec::with_capacity(rounds + 1),
            h_edge: vec![0.0; ne * d],
            var_in_hid: vec![0.0; n * hd],
            con_in_hid: vec![0.0; m * hd],
            edge_in_hid: vec![0.0; ne * hd],
            rounds: Vec::with_capacity(rounds),
            jk_hid: vec![0.0; n * hd],
            jk_out: vec![0.0; n * d],
            out_hid: vec![0.0; n * hd],
            logits_all: vec![0.0; n],
        };

        // Input embeddings.
        let mut h_var0 = vec![0.0; n * d];
        for v in 0..n {
            self.params.var_in.forward(
                g.var_feature_row(v),
                &mut trace.var_in_hid[v * hd..(v + 1) * hd],
                &mut h_var0[v * d..(v + 1) * d],
            );
        }
        let mut h_con0 = vec![0.0; m * d];
        for c in 0..m {
            self.params.con_in.forward(
                g.con_feature_row(c),
                &mut trace.con_in_hid[c * hd..(c + 1) * hd],
                &mut h_con0[c * d..(c + 1) * d],
            );
        }
        for (e, edge) in g.edges.iter().enumerate() {
            self.params.edge_in.forward(
                &edge.features,
                &mut trace.edge_in_hid[e * hd..(e + 1) * hd],
                &mut trace.h_edge[e * d..(e + 1) * d],
            );
        }
        trace.h_var.push(h_var0);
        trace.h_con.push(h_con0);

        let mut scratch: Vec<f64> = Vec::new();
        for k in 0..rounds {
            let rp = &self.params.rounds[k];
            let h_var_k = &trace.h_var[k];
            let h_con_k = &trace.h_con[k];

            // Constraint-side half-convolution.
            let mut con_msg_in = vec![0.0; ne * 3 * d];
            let mut con_msg_hid = vec![0.0; ne * hd];
            let mut con_msg_out = vec![0.0; ne * d];
            for (e, edge) in g.edges.iter().enumerate() {
                let x = &mut con_msg_in[e * 3 * d..(e + 1) * 3 * d];
                x[..d].copy_from_slice(&h_con_k[edge.con * d..(edge.con + 1) * d]);
                x[d..2 * d].copy_from_slice(&trace.h_edge[e * d..(e + 1) * d]);
                x[2 * d..].copy_from_slice(&h_var_k[edge.var * d..(edge.var + 1) * d]);
                rp.con_msg.forward(
                    x,
                    &mut con_msg_hid[e * hd..(e + 1) * hd],
                    &mut con_msg_out[e * d..(e + 1) * d],
                );
            }
            let mut con_upd_in = vec![0.0; m * 2 * d];
            let mut con_upd_hid = vec![0.0; m * hd];
            let mut h_con_next = vec![0.0; m * d];
            for c in 0..m {
                let x = &mut con_upd_in[c * 2 * d..(c + 1) * 2 * d];
                x[..d].copy_from_slice(&h_con_k[c * d..(c + 1) * d]);
                for t in 0..d {
                    scratch.clear();
                    scratch.extend(adj.con_edges[c].iter().map(|&e| con_msg_out[e * d + t]));
                    x[d + t] = sorted_sum(&mut scratch);
                }
                rp.con_upd.forward(
                    x,
                    &mut con_upd_hid[c * hd..(c + 1) * hd],
                    &mut h_con_next[c * d..(c + 1) * d],
                );
            }

            // Variable-side half-convolution against the fresh constraint
            // embeddings.
            let mut var_msg_in = vec![0.0; ne * 3 * d];
            let mut var_msg_hid = vec![0.0; ne * hd];
            let mut var_msg_out = vec![0.0; ne * d];
            for (e, edge) in g.edges.iter().enumerate() {
                let x = &mut var_msg_in[e * 3 * d..(e + 1) * 3 * d];
                x[..d].copy_from_slice(&h_con_next[edge.con * d..(edge.con + 1) * d]);
                x[d..2 * d].copy_from_slice(&trace.h_edge[e * d..(e + 1) * d]);
                x[2 * d..].copy_from_slice(&h_var_k[edge.var * d..(edge.var + 1) * d]);
                rp.var_msg.forward(
                    x,
                    &mut var_msg_hid[e * hd..(e + 1) * hd],
                    &mut var_msg_out[e * d..(e + 1) * d],
                );
            }
            let mut var_upd_in = vec![0.0; n * 2 * d];
            let mut var_upd_hid = vec![0.0; n * hd];
            let mut pre_icc = vec![0.0; n * d];
            for v in 0..n {
                let x = &mut var_upd_in[v * 2 * d..(v + 1) * 2 * d];
                x[..d].copy_from_slice(&h_var_k[v * d..(v + 1) * d]);
                for t in 0..d {
                    scratch.clear();
                    scratch.extend(adj.var_edges[v].iter().map(|&e| var_msg_out[e * d + t]));
                    x[d + t] = sorted_sum(&mut scratch);
                }
                rp.var_upd.forward(
                    x,
                    &mut var_upd_hid[v * hd..(v + 1) * hd],
                    &mut pre_icc[v * d..(v + 1) * d],
                );
            }

            let (h_var_next, icc_var_mean) = if self.cfg.icc_enabled {
                icc_forward(&pre_icc, n, d, &adj.con_vars, &adj.var_cons, rp.beta)
            } else {
                (pre_icc, Vec::new())
            };

            trace.rounds.push(RoundTrace {
                con_msg_in,
                con_msg_hid,
                con_upd_in,
                con_upd_hid,
                var_msg_in,
                var_msg_hid,
                var_upd_in,
                var_upd_hid,
                icc_var_mean,
            });
            trace.h_con.push(h_con_next);
            trace.h_var.push(h_var_next);
        }

        // Jumping-knowledge head and per-variable logits.
        let jk_dim = (rounds + 1) * d;
        let mut jk_in = vec![0.0; jk_dim];
        for v in 0..n {
            for (k, h) in trace.h_var.iter().enumerate() {
                jk_in[k * d..(k + 1) * d].copy_from_slice(&h[v * d..(v + 1) * d]);
            }
            self.params.jk.forward(
                &jk_in,
                &mut trace.jk_hid[v * hd..(v + 1) * hd],
                &mut trace.jk_out[v * d..(v + 1) * d],
            );
            let mut logit = [0.0];
            self.params.out.forward(
                &trace.jk_out[v * d..(v + 1) * d],
                &mut trace.out_hid[v * hd..(v + 1) * hd],
                &mut logit,
            );
            trace.logits_all[v] = logit[0];
        }

        let p = g.num_binary();
        debug_assert!(
            g.binary_mask.iter().take(p).all(|&b| b),
            "binary variables must occupy the index prefix"
        );
        let logits: Vec<f64> = trace.logits_all[..p].to_vec();
        let marginals: Vec<f64> = logits
            .iter()
            .map(|&z| sigmoid(z).clamp(1e-15, 1.0 - 1e-15))
            .collect();

        let prediction = Prediction {
            logits,
            marginals,
            layer_var_embeddings: trace.h_var.clone(),
        };
        Ok((prediction, trace))
    }

    /// Exact reverse-mode gradients of `upstream . logits` with respect to
    /// every parameter, including each round's `beta`. The trace must come
    /// from a forward pass of this model on `g`.
    pub fn backward(
        &self,
        g: &BipartiteGraph,
        trace: &ForwardTrace,
        upstream: &[f64],
    ) -> Result<GnnGrads> {
        let d = self.cfg.embed_size;
        let hd = self.cfg.mlp_hidden;
        let rounds = self.cfg.num_rounds;
        let n = g.num_var_nodes;
        let m = g.num_con_nodes;
        let ne = g.edges.len();
        let p = g.num_binary();
        if trace.num_vars != n
            || trace.num_cons != m
            || trace.num_edges != ne
            || trace.h_var.len() != rounds + 1
        {
            return Err(Error::Dimension(
                "forward trace does not match this model/graph pair".into(),
            ));
        }
        if upstream.len() != p {
            return Err(Error::Dimension(format!(
                "upstream gradient has {} entries, graph has {p} binaries",
                upstream.len()
            )));
        }
        let adj = adjacency(g);
        let mut grads = self.params.zeros_like();

        // Output head.
        let mut g_jk_out = vec![0.0; n * d];
        for v in 0..n {
            let gz = if v < p { upstream[v] } else { 0.0 };
            self.params.out.backward(
                &trace.jk_out[v * d..(v + 1) * d],
                &trace.out_hid[v * hd..(v + 1) * hd],
                &[gz],
                &mut grads.out,
                &mut g_jk_out[v * d..(v + 1) * d],
            );
        }

        // Jumping-knowledge head back to each round's embeddings.
        let jk_dim = (rounds + 1) * d;
        let mut g_h_var: Vec<Vec<f64>> = (0..=rounds).map(|_| vec![0.0; n * d]).collect();
        let mut g_h_con: Vec<Vec<f64>> = (0..=rounds).map(|_| vec![0.0; m * d]).collect();
        let mut g_h_edge = vec![0.0; ne * d];
        let mut jk_in = vec![0.0; jk_dim];
        let mut g_jk_in = vec![0.0; jk_dim];
        for v in 0..n {
            for (k, h) in trace.h_var.iter().enumerate() {
                jk_in[k * d..(k + 1) * d].copy_from_slice(&h[v * d..(v + 1) * d]);
            }
            g_jk_in.iter_mut().for_each(|x| *x = 0.0);
            self.params.jk.backward(
                &jk_in,
                &trace.jk_hid[v * hd..(v + 1) * hd],
                &g_jk_out[v * d..(v + 1) * d],
                &mut grads.jk,
                &mut g_jk_in,
            );
            for (k, gh) in g_h_var.iter_mut().enumerate() {
                for t in 0..d {
                    gh[v * d + t] += g_jk_in[k * d + t];
                }
            }
        }

        for k in (0..rounds).rev() {
            let rp = &self.params.rounds[k];
            let rt = &trace.rounds[k];
            let gr = &mut grads.rounds[k];

            // ICC backward: out = pre - beta * mean-of-means(pre).
            let g_pre: Vec<f64> = if self.cfg.icc_enabled {
                let g_out = &g_h_var[k + 1];
                let mut beta_grad = 0.0;
                for (go, hbar) in g_out.iter().zip(rt.icc_var_mean.iter()) {
                    beta_grad -= go * hbar;
                }
                gr.beta += beta_grad;

                let mut g_pre = g_out.clone();
                if rp.beta != 0.0 {
                    // Adjoint of the two averaging steps.
                    let mut t_con = vec![0.0; m * d];
                    for (v, cons) in adj.var_cons.iter().enumerate() {
                        if cons.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / cons.len() as f64;
                        for &c in cons {
                            for t in 0..d {
                                t_con[c * d + t] += -rp.beta * g_out[v * d + t] * inv;
                            }
                        }
                    }
                    for (c, members) in adj.con_vars.iter().enumerate() {
                        if members.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / members.len() as f64;
                        for &v in members {
                            for t in 0..d {
                                g_pre[v * d + t] += t_con[c * d + t] * inv;
                            }
                        }
                    }
                }
                g_pre
            } else {
                std::mem::take(&mut g_h_var[k + 1])
            };

            // Variable update backward.
            let mut g_var_agg = vec![0.0; n * d];
            let mut g_in2 = vec![0.0; 2 * d];
            for v in 0..n {
                g_in2.iter_mut().for_each(|x| *x = 0.0);
                rp.var_upd.backward(
                    &rt.var_upd_in[v * 2 * d..(v + 1) * 2 * d],
                    &rt.var_upd_hid[v * hd..(v + 1) * hd],
                    &g_pre[v * d..(v + 1) * d],
                    &mut gr.var_upd,
                    &mut g_in2,
                );
                for t in 0..d {
                    g_h_var[k][v * d + t] += g_in2[t];
                    g_var_agg[v * d + t] += g_in2[d + t];
                }
            }

            // Variable-side messages.
            let mut g_in3 = vec![0.0; 3 * d];
            for (e, edge) in g.edges.iter().enumerate() {
                g_in3.iter_mut().for_each(|x| *x = 0.0);
                rp.var_msg.backward(
                    &rt.var_msg_in[e * 3 * d..(e + 1) * 3 * d],
                    &rt.var_msg_hid[e * hd..(e + 1) * hd],
                    &g_var_agg[edge.var * d..(edge.var + 1) * d],
                    &mut gr.var_msg,
                    &mut g_in3,
                );
                for t in 0..d {
                    g_h_con[k + 1][edge.con * d + t] += g_in3[t];
                    g_h_edge[e * d + t] += g_in3[d + t];
                    g_h_var[k][edge.var * d + t] += g_in3[2 * d + t];
                }
            }

            // Constraint update backward.
            let mut g_con_agg = vec![0.0; m * d];
            for c in 0..m {
                g_in2.iter_mut().for_each(|x| *x = 0.0);
                rp.con_upd.backward(
                    &rt.con_upd_in[c * 2 * d..(c + 1) * 2 * d],
                    &rt.con_upd_hid[c * hd..(c + 1) * hd],
                    &g_h_con[k + 1][c * d..(c + 1) * d],
                    &mut gr.con_upd,
                    &mut g_in2,
                );
                for t in 0..d {
                    g_h_con[k][c * d + t] += g_in2[t];
                    g_con_agg[c * d + t] += g_in2[d + t];
                }
            }

            // Constraint-side messages.
            for (e, edge) in g.edges.iter().enumerate() {
                g_in3.iter_mut().for_each(|x| *x = 0.0);
                rp.con_msg.backward(
                    &rt.con_msg_in[e * 3 * d..(e + 1) * 3 * d],
                    &rt.con_msg_hid[e * hd..(e + 1) * hd],
                    &g_con_agg[edge.con * d..(edge.con + 1) * d],
                    &mut gr.con_msg,
                    &mut g_in3,
                );
                for t in 0..d {
                    g_h_con[k][edge.con * d + t] += g_in3[t];
                    g_h_edge[e * d + t] += g_in3[d + t];
                    g_h_var[k][edge.var * d + t] += g_in3[2 * d + t];
                }
            }
        }

        // Input embeddings.
        let mut sink = vec![0.0; VAR_FEATURES.max(CON_FEATURES).max(EDGE_FEATURES)];
        for v in 0..n {
            sink.iter_mut().for_each(|x| *x = 0.0);
            self.params.var_in.backward(
                g.var_feature_row(v),
                &trace.var_in_hid[v * hd..(v + 1) * hd],
                &g_h_var[0][v * d..(v + 1) * d],
                &mut grads.var_in,
                &mut sink[..VAR_FEATURES],
            );
        }
        for c in 0..m {
            sink.iter_mut().for_each(|x| *x = 0.0);
            self.params.con_in.backward(
                g.con_feature_row(c),
                &trace.con_in_hid[c * hd..(c + 1) * hd],
                &g_h_con[0][c * d..(c + 1) * d],
                &mut grads.con_in,
                &mut sink[..CON_FEATURES],
            );
        }
        for (e, edge) in g.edges.iter().enumerate() {
            sink.iter_mut().for_each(|x| *x = 0.0);
            self.params.edge_in.backward(
                &edge.features,
                &trace.edge_in_hid[e * hd..(e + 1) * hd],
                &g_h_edge[e * d..(e + 1) * d],
                &mut grads.edge_in,
                &mut sink[..EDGE_FEATURES],
            );
        }

        Ok(GnnGrads { inner: grads })
    }
}

// --- checkpointing -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    version: u32,
    config: GnnConfig,
    params: Vec<f64>,
}

const CHECKPOINT_VERSION: u32 = 1;

/// Serializes a model to its JSON checkpoint; finite parameters round-trip
/// bit-exactly.
pub fn to_checkpoint_bytes(model: &GnnModel) -> Result<Vec<u8>> {
    let doc = CheckpointDoc {
        version: CHECKPOINT_VERSION,
        config: model.cfg.clone(),
        params: model.flatten(),
    };
    let mut bytes = serde_json::to_vec(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<GnnModel> {
    let doc: CheckpointDoc = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("model checkpoint: {e}")))?;
    if doc.version != CHECKPOINT_VERSION {
        return Err(Error::Parse(format!(
            "model checkpoint: unsupported version {}",
            doc.version
        )));
    }
    let mut model = init_model(&doc.config)?;
    model
        .assign_flat(&doc.params)
        .map_err(|e| Error::Parse(format!("model checkpoint: {e}")))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphenc::encode;
    use crate::instance::{generate_comb_auction, generate_set_cover};

    fn small_cfg(seed: u64, icc: bool) -> GnnConfig {
        GnnConfig {
            embed_size: 8,
            num_rounds: 2,
            mlp_hidden: 8,
            icc_enabled: icc,
            seed,
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let cfg = small_cfg(5, true);
        let a = init_model(&cfg).unwrap();
        let b = init_model(&cfg).unwrap();
        assert_eq!(a.flatten(), b.flatten());

        let c = init_model(&small_cfg(6, true)).unwrap();
        assert_ne!(a.flatten(), c.flatten());
    }

    #[test]
    fn beta_zero_matches_icc_disabled_bitwise() {
        let inst = generate_set_cover(5, 8, 0.3, 1, 9, 2).unwrap();
        let g = encode(&inst);
        let with_icc = init_model(&small_cfg(3, true)).unwrap();
        let mut without = init_model(&small_cfg(3, false)).unwrap();
        // Same draw order yields identical weights; betas are zero at init.
        without.cfg.icc_enabled = false;
        let a = with_icc.forward(&g).unwrap();
        let b = without.forward(&g).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn icc_symmetric_competitors_cancel() {
        // One constraint over two variables with identical embeddings.
        let emb = vec![0.4, -0.2, 0.4, -0.2];
        let out = icc_apply(&emb, 2, 2, &[(0, 0), (0, 1)], 1, 1.0);
        for v in out {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn icc_hand_computed_two_variable_case() {
        let emb = vec![1.0, 0.0, 0.0, 1.0];
        let out = icc_apply(&emb, 2, 2, &[(0, 0), (0, 1)], 1, 1.0);
        assert_eq!(out, vec![0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn icc_beta_zero_is_identity() {
        let emb = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = icc_apply(&emb, 3, 2, &[(0, 0), (0, 1), (1, 2)], 2, 0.0);
        assert_eq!(out, emb);
    }

    #[test]
    fn isolated_variable_gets_zero_competitive_context() {
        // Variable 2 belongs to no constraint; ICC must leave it unchanged.
        let emb = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = icc_apply(&emb, 3, 2, &[(0, 0), (0, 1)], 1, 0.7);
        assert_eq!(&out[4..], &emb[4..]);
    }

    #[test]
    fn forward_permutation_equivariant_bitwise() {
        let inst = generate_comb_auction(6, 9, 3, 4).unwrap();
        let g = encode(&inst);
        let model = init_model(&small_cfg(9, true)).unwrap();
        let base = model.forward(&g).unwrap();

        // Permute variable nodes (all binary, so the mask stays valid) and
        // the edges with them.
        let n = g.num_var_nodes;
        let perm: Vec<usize> = (0..n).map(|j| (j + 4) % n).collect();
        let mut pg = g.clone();
        for j in 0..n {
            let src = g.var_feature_row(j);
            pg.var_features[perm[j] * crate::graphenc::VAR_FEATURES
                ..(perm[j] + 1) * crate::graphenc::VAR_FEATURES]
                .copy_from_slice(src);
        }
        for e in pg.edges.iter_mut() {
            e.var = perm[e.var];
        }
        let permuted = model.forward(&pg).unwrap();
        for j in 0..n {
            assert_eq!(
                base.logits[j], permuted.logits[perm[j]],
                "logit of variable {j} must follow the permutation bitwise"
            );
        }
    }

    #[test]
    fn isolated_variable_depends_only_on_its_features() {
        // Two graphs that differ only away from the isolated variable 0.
        use crate::graphenc::{BipartiteGraph, Edge};
        let mk = |other_feature: f64| BipartiteGraph {
            num_var_nodes: 2,
            num_con_nodes: 1,
            var_features: vec![0.5, 0.0, 1.0, 1.0, other_feature, 1.0, 1.0, 1.0],
            con_features: vec![1.0, 0.5, -1.0, 1.0],
            edges: vec![Edge {
                con: 0,
                var: 1,
                features: [1.0],
            }],
            binary_mask: vec![true, true],
        };
        let model = init_model(&small_cfg(2, true)).unwrap();
        let a = model.forward(&mk(-0.25)).unwrap();
        let b = model.forward(&mk(0.75)).unwrap();
        assert_eq!(a.logits[0], b.logits[0]);
        assert_ne!(a.logits[1], b.logits[1]);
    }

    #[test]
    fn marginals_strictly_inside_unit_interval() {
        let inst = generate_set_cover(10, 20, 0.2, 1, 50, 8).unwrap();
        let g = encode(&inst);
        let model = init_model(&small_cfg(1, true)).unwrap();
        let pred = model.forward(&g).unwrap();
        for (&z, &x) in pred.logits.iter().zip(pred.marginals.iter()) {
            assert!(z.is_finite());
            assert!(x > 0.0 && x < 1.0);
        }
    }

    #[test]
    fn backward_rejects_mismatched_trace() {
        let a = encode(&generate_set_cover(5, 8, 0.3, 1, 9, 2).unwrap());
        let b = encode(&generate_set_cover(6, 9, 0.3, 1, 9, 2).unwrap());
        let model = init_model(&small_cfg(3, true)).unwrap();
        let (_, trace) = model.forward_traced(&a).unwrap();
        let err = model.backward(&b, &trace, &vec![0.0; b.num_binary()]);
        assert!(err.is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let g = encode(&generate_set_cover(5, 8, 0.3, 1, 9, 2).unwrap());
        let model = init_model(&small_cfg(3, true)).unwrap();
        let (_, trace) = model.forward_traced(&g).unwrap();
        let grads = model
            .backward(&g, &trace, &vec![0.0; g.num_binary()])
            .unwrap();
        assert!(grads.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut model = init_model(&small_cfg(12, true)).unwrap();
        model.set_beta(0, 0.125);
        let bytes = to_checkpoint_bytes(&model).unwrap();
        let back = from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(model.cfg, back.cfg);
        assert_eq!(model.flatten(), back.flatten());
    }
}
