//! Variable-constraint bipartite graph encoding.
//!
//! Each nonzero constraint coefficient becomes one edge. Feature layout:
//!
//! - variable node (4): `[c_j / max|c|, degree_j / m, is_binary, 1.0]`
//! - constraint node (4): `[rhs_k / max|rhs|, degree_k / n, rel_code, 1.0]`
//!   with `rel_code` -1 / 0 / +1 for `<=` / `=` / `>=`
//! - edge (1): `[a_kj / max_j' |a_kj'|]` (row-wise normalization)
//!
//! Any max-abs divisor of zero is replaced by 1 so degenerate instances stay
//! finite. Encoding is pure and deterministic; permuting instance variable
//! indices permutes variable rows and edges identically.

use crate::instance::{MilpInstance, Relation};

pub const VAR_FEATURES: usize = 4;
pub const CON_FEATURES: usize = 4;
pub const EDGE_FEATURES: usize = 1;

/// Bipartite encoding of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub num_var_nodes: usize,
    pub num_con_nodes: usize,
    /// Row-major `[num_var_nodes x VAR_FEATURES]`.
    pub var_features: Vec<f64>,
    /// Row-major `[num_con_nodes x CON_FEATURES]`.
    pub con_features: Vec<f64>,
    /// One entry per nonzero coefficient, in row-major instance order.
    pub edges: Vec<Edge>,
    /// `binary_mask[j]` iff variable j is binary (indices `0..p`).
    pub binary_mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub con: usize,
    pub var: usize,
    pub features: [f64; EDGE_FEATURES],
}

impl BipartiteGraph {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn var_feature_row(&self, j: usize) -> &[f64] {
        &self.var_features[j * VAR_FEATURES..(j + 1) * VAR_FEATURES]
    }

    pub fn con_feature_row(&self, k: usize) -> &[f64] {
        &self.con_features[k * CON_FEATURES..(k + 1) * CON_FEATURES]
    }

    /// Number of binary variable nodes.
    pub fn num_binary(&self) -> usize {
        self.binary_mask.iter().filter(|&&b| b).count()
    }
}

fn guarded(max_abs: f64) -> f64 {
    if max_abs == 0.0 {
        1.0
    } else {
        max_abs
    }
}

/// Encodes an instance as its bipartite graph.
pub fn encode(inst: &MilpInstance) -> BipartiteGraph {
    let n = inst.num_vars;
    let m = inst.num_rows();

    let max_obj = guarded(inst.objective.iter().fold(0.0f64, |a, c| a.max(c.abs())));
    let max_rhs = guarded(inst.rows.iter().fold(0.0f64, |a, r| a.max(r.rhs.abs())));

    let mut var_degree = vec![0usize; n];
    for row in &inst.rows {
        for &j in &row.cols {
            var_degree[j] += 1;
        }
    }

    let mut var_features = Vec::with_capacity(n * VAR_FEATURES);
    for j in 0..n {
        var_features.push(inst.objective[j] / max_obj);
        var_features.push(var_degree[j] as f64 / m.max(1) as f64);
        var_features.push(if inst.is_binary(j) { 1.0 } else { 0.0 });
        var_features.push(1.0);
    }

    let mut con_features = Vec::with_capacity(m * CON_FEATURES);
    let mut edges = Vec::new();
    for (k, row) in inst.rows.iter().enumerate() {
        con_features.push(row.rhs / max_rhs);
        con_features.push(row.len() as f64 / n.max(1) as f64);
        con_features.push(match row.rel {
            Relation::Le => -1.0,
            Relation::Eq => 0.0,
            Relation::Ge => 1.0,
        });
        con_features.push(1.0);

        let row_max = guarded(row.coefs.iter().fold(0.0f64, |a, c| a.max(c.abs())));
        for (j, a) in row.terms() {
            edges.push(Edge {
                con: k,
                var: j,
                features: [a / row_max],
            });
        }
    }

    BipartiteGraph {
        num_var_nodes: n,
        num_con_nodes: m,
        var_features,
        con_features,
        edges,
        binary_mask: (0..n).map(|j| inst.is_binary(j)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConstraintRow, MilpInstance, Relation, Sense};

    fn toy() -> MilpInstance {
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
    fn hand_computed_toy_encoding() {
        let g = encode(&toy());
        assert_eq!(g.num_var_nodes, 2);
        assert_eq!(g.num_con_nodes, 1);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.var_feature_row(0), &[-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.var_feature_row(1), &[-2.0 / 3.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.con_feature_row(0), &[1.0, 1.0, -1.0, 1.0]);
        for e in &g.edges {
            assert_eq!(e.features, [1.0]);
        }
        assert_eq!((g.edges[0].con, g.edges[0].var), (0, 0));
        assert_eq!((g.edges[1].con, g.edges[1].var), (0, 1));
    }

    #[test]
    fn zero_objective_guard() {
        let mut inst = toy();
        inst.objective = vec![0.0, 0.0];
        let g = encode(&inst);
        assert_eq!(g.var_feature_row(0)[0], 0.0);
        assert_eq!(g.var_feature_row(1)[0], 0.0);
    }

    #[test]
    fn edge_count_equals_nonzeros() {
        let inst = crate::instance::generate_set_cover(8, 12, 0.25, 1, 9, 11).unwrap();
        let g = encode(&inst);
        let nnz: usize = inst.rows.iter().map(|r| r.len()).sum();
        assert_eq!(g.num_edges(), nnz);
    }

    #[test]
    fn normalized_features_within_unit_box() {
        for seed in 0..5 {
            let inst = crate::instance::generate_comb_auction(7, 11, 3, seed).unwrap();
            let g = encode(&inst);
            for j in 0..g.num_var_nodes {
                let f = g.var_feature_row(j);
                assert!(f[..3].iter().all(|v| (-1.0..=1.0).contains(v)));
                assert_eq!(f[3], 1.0);
            }
            for k in 0..g.num_con_nodes {
                let f = g.con_feature_row(k);
                assert!(f[..3].iter().all(|v| (-1.0..=1.0).contains(v)));
                assert_eq!(f[3], 1.0);
            }
            for e in &g.edges {
                assert!((-1.0..=1.0).contains(&e.features[0]));
            }
        }
    }

    #[test]
    fn encoding_is_variable_permutation_equivariant() {
        let inst = crate::instance::generate_set_cover(6, 8, 0.3, 1, 7, 3).unwrap();
        let n = inst.num_vars;
        // perm[old] = new index; rotate by 3 keeps the binary prefix property.
        let perm: Vec<usize> = (0..n).map(|j| (j + 3) % n).collect();

        let mut permuted = inst.clone();
        for j in 0..n {
            permuted.objective[perm[j]] = inst.objective[j];
        }
        permuted.rows = inst
            .rows
            .iter()
            .map(|row| {
                let terms: Vec<(usize, f64)> = row.terms().map(|(j, a)| (perm[j], a)).collect();
                ConstraintRow::new(terms, row.rel, row.rhs)
            })
            .collect();

        let g = encode(&inst);
        let gp = encode(&permuted);
        for j in 0..n {
            assert_eq!(g.var_feature_row(j), gp.var_feature_row(perm[j]));
        }
        assert_eq!(g.con_features, gp.con_features);
        // Same edge multiset after relabeling.
        let mut relabeled: Vec<(usize, usize, u64)> = g
            .edges
            .iter()
            .map(|e| (e.con, perm[e.var], e.features[0].to_bits()))
            .collect();
        let mut expected: Vec<(usize, usize, u64)> = gp
            .edges
            .iter()
            .map(|e| (e.con, e.var, e.features[0].to_bits()))
            .collect();
        relabeled.sort_unstable();
        expected.sort_unstable();
        assert_eq!(relabeled, expected);
    }
}
