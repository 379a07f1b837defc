//! MILP instance data model, feasibility evaluation, deterministic instance
//! generators, and JSON serialization.
//!
//! Instances are immutable after construction; every operation here is a pure
//! function of its arguments.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "min")]
    Minimize,
    #[serde(rename = "max")]
    Maximize,
}

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// One sparse constraint row: `sum(coefs[t] * x[cols[t]]) rel rhs`.
///
/// Columns are strictly ascending and every coefficient is nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub cols: Vec<usize>,
    pub coefs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

impl ConstraintRow {
    pub fn new(mut terms: Vec<(usize, f64)>, rel: Relation, rhs: f64) -> Self {
        terms.sort_by_key(|&(j, _)| j);
        Self {
            cols: terms.iter().map(|&(j, _)| j).collect(),
            coefs: terms.iter().map(|&(_, a)| a).collect(),
            rel,
            rhs,
        }
    }

    /// Iterates `(column, coefficient)` pairs in ascending column order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cols.iter().copied().zip(self.coefs.iter().copied())
    }

    /// Left-hand side value under `x`, summed in ascending column order.
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms().map(|(j, a)| a * x[j]).sum()
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }
}

/// A mixed-integer linear program with binary integer variables.
///
/// Variables `0..num_binary` are binary (bounds fixed to `[0, 1]`); the rest
/// are continuous within `[lower[j], upper[j]]` where the bounds may be
/// infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    pub name: String,
    pub num_vars: usize,
    pub num_binary: usize,
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub rows: Vec<ConstraintRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Outcome of a feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `(row_index, violation_amount)` for every violated row.
    pub violations: Vec<(usize, f64)>,
    /// Binary variables farther than `tol` from both 0 and 1.
    pub integrality_violations: Vec<usize>,
    /// `(var_index, violation_amount)` for out-of-bounds variables.
    pub bound_violations: Vec<(usize, f64)>,
}

/// A point with its cached objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl Assignment {
    /// Builds an assignment, deriving the objective from the instance.
    pub fn evaluated(inst: &MilpInstance, values: Vec<f64>) -> Result<Self> {
        let objective = evaluate_objective(inst, &values)?;
        Ok(Self { values, objective })
    }
}

impl MilpInstance {
    /// Number of constraint rows.
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_binary(&self, j: usize) -> bool {
        j < self.num_binary
    }

    /// Checks all structural invariants, returning a field-named error on the
    /// first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        if self.num_binary > n {
            return Err(Error::InvalidInstance(format!(
                "p = {} exceeds n = {}",
                self.num_binary, n
            )));
        }
        if self.objective.len() != n {
            return Err(Error::InvalidInstance(format!(
                "objective has {} entries, expected {}",
                self.objective.len(),
                n
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidInstance(format!(
                "bounds have {}/{} entries, expected {}",
                self.lower.len(),
                self.upper.len(),
                n
            )));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(Error::InvalidInstance(format!(
                    "variable {}: lower {} exceeds upper {}",
                    j, self.lower[j], self.upper[j]
                )));
            }
            if self.is_binary(j) && (self.lower[j] != 0.0 || self.upper[j] != 1.0) {
                return Err(Error::InvalidInstance(format!(
                    "binary variable {} must have bounds [0, 1], got [{}, {}]",
                    j, self.lower[j], self.upper[j]
                )));
            }
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidInstance(format!("rows[{k}] is empty")));
            }
            if row.cols.len() != row.coefs.len() {
                return Err(Error::InvalidInstance(format!(
                    "rows[{k}]: {} columns but {} coefficients",
                    row.cols.len(),
                    row.coefs.len()
                )));
            }
            if !row.rhs.is_finite() {
                return Err(Error::InvalidInstance(format!("rows[{k}]: non-finite rhs")));
            }
            let mut prev: Option<usize> = None;
            for (t, (&j, &a)) in row.cols.iter().zip(row.coefs.iter()).enumerate() {
                if j >= n {
                    return Err(Error::InvalidInstance(format!(
                        "rows[{k}]: column index {j} out of range (n = {n})"
                    )));
                }
                if let Some(p) = prev {
                    if j == p {
                        return Err(Error::InvalidInstance(format!(
                            "rows[{k}]: duplicate column index {j}"
                        )));
                    }
                    if j < p {
                        return Err(Error::InvalidInstance(format!(
                            "rows[{k}]: columns not sorted at position {t}"
                        )));
                    }
                }
                if a == 0.0 || !a.is_finite() {
                    return Err(Error::InvalidInstance(format!(
                        "rows[{k}]: coefficient for column {j} is {a}"
                    )));
                }
                prev = Some(j);
            }
        }
        Ok(())
    }
}

/// Objective value `c . x`, summed in ascending index order.
pub fn evaluate_objective(inst: &MilpInstance, x: &[f64]) -> Result<f64> {
    if x.len() != inst.num_vars {
        return Err(Error::Dimension(format!(
            "assignment has {} entries, instance has {} variables",
            x.len(),
            inst.num_vars
        )));
    }
    Ok(inst
        .objective
        .iter()
        .zip(x.iter())
        .map(|(c, v)| c * v)
        .sum())
}

/// Checks rows, bounds, and binary integrality against `x` with tolerance
/// `tol`. A `<=` row is violated iff `lhs - rhs > tol` (mirrored for `>=`,
/// two-sided for `=`).
pub fn check_feasibility(inst: &MilpInstance, x: &[f64], tol: f64) -> Result<FeasibilityReport> {
    if x.len() != inst.num_vars {
        return Err(Error::Dimension(format!(
            "assignment has {} entries, instance has {} variables",
            x.len(),
            inst.num_vars
        )));
    }
    if tol < 0.0 {
        return Err(Error::Config(format!("tolerance must be >= 0, got {tol}")));
    }
    let mut violations = Vec::new();
    for (k, row) in inst.rows.iter().enumerate() {
        let lhs = row.lhs(x);
        let excess = match row.rel {
            Relation::Le => lhs - row.rhs,
            Relation::Ge => row.rhs - lhs,
            Relation::Eq => (lhs - row.rhs).abs(),
        };
        if excess > tol {
            violations.push((k, excess));
        }
    }
    let mut bound_violations = Vec::new();
    let mut integrality_violations = Vec::new();
    for j in 0..inst.num_vars {
        let below = inst.lower[j] - x[j];
        let above = x[j] - inst.upper[j];
        let excess = below.max(above);
        if excess > tol {
            bound_violations.push((j, excess));
        }
        if inst.is_binary(j) && x[j].abs().min((x[j] - 1.0).abs()) > tol {
            integrality_violations.push(j);
        }
    }
    Ok(FeasibilityReport {
        feasible: violations.is_empty()
            && bound_violations.is_empty()
            && integrality_violations.is_empty(),
        violations,
        integrality_violations,
        bound_violations,
    })
}

/// Generates a set-covering instance: minimize total column cost subject to
/// every row being covered at least once, all variables binary.
///
/// Coverage construction: each column first covers one random row, then each
/// row is padded to two random columns, then random cells are added until the
/// matrix reaches `density`. Every row ends up with >= 2 columns and every
/// column covers >= 1 row. Identical arguments produce byte-identical
/// instances.
pub fn generate_set_cover(
    num_rows: usize,
    num_cols: usize,
    density: f64,
    cost_lo: i64,
    cost_hi: i64,
    seed: u64,
) -> Result<MilpInstance> {
    if num_rows < 2 || num_cols < 4 {
        return Err(Error::Config(format!(
            "set cover needs rows >= 2 and cols >= 4, got {num_rows}x{num_cols}"
        )));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::Config(format!(
            "set cover density must be in (0, 1), got {density}"
        )));
    }
    if density * (num_cols as f64) < 2.0 {
        return Err(Error::Config(format!(
            "set cover density {density} too low to cover each of {num_rows} rows twice"
        )));
    }
    if cost_lo > cost_hi {
        return Err(Error::Config(format!(
            "set cover cost range is empty: [{cost_lo}, {cost_hi}]"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut covers = vec![vec![false; num_cols]; num_rows];
    let mut row_count = vec![0usize; num_rows];
    let mut nnz = 0usize;
    let add = |covers: &mut Vec<Vec<bool>>, row_count: &mut Vec<usize>, k: usize, j: usize| {
        if !covers[k][j] {
            covers[k][j] = true;
            row_count[k] += 1;
            true
        } else {
            false
        }
    };

    // Every column covers at least one row.
    for j in 0..num_cols {
        let k = rng.gen_index(num_rows);
        if add(&mut covers, &mut row_count, k, j) {
            nnz += 1;
        }
    }
    // Every row covered by at least two columns.
    for k in 0..num_rows {
        while row_count[k] < 2 {
            let j = rng.gen_index(num_cols);
            if add(&mut covers, &mut row_count, k, j) {
                nnz += 1;
            }
        }
    }
    // Fill to the requested density.
    let target = (density * (num_rows * num_cols) as f64).round() as usize;
    while nnz < target {
        let k = rng.gen_index(num_rows);
        let j = rng.gen_index(num_cols);
        if add(&mut covers, &mut row_count, k, j) {
            nnz += 1;
        }
    }

    let objective: Vec<f64> = (0..num_cols)
        .map(|_| rng.gen_int_inclusive(cost_lo, cost_hi) as f64)
        .collect();
    let rows = covers
        .iter()
        .map(|row| {
            let terms: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c)
                .map(|(j, _)| (j, 1.0))
                .collect();
            ConstraintRow::new(terms, Relation::Ge, 1.0)
        })
        .collect();

    let inst = MilpInstance {
        name: format!("sc-{num_rows}x{num_cols}-d{density}-s{seed}"),
        num_vars: num_cols,
        num_binary: num_cols,
        objective,
        sense: Sense::Minimize,
        rows,
        lower: vec![0.0; num_cols],
        upper: vec![1.0; num_cols],
    };
    inst.validate()?;
    Ok(inst)
}

/// Generates a combinatorial-auction (set-packing) instance: maximize total
/// accepted bid value subject to each item being sold at most once.
///
/// Item base values are uniform integers in `[1, 100]`; each bid requests a
/// uniformly sized bundle of distinct items and is valued at the bundle's
/// base value times `1 + surplus` with surplus uniform in `[0, 0.3]`.
pub fn generate_comb_auction(
    items: usize,
    bids: usize,
    max_bundle: usize,
    seed: u64,
) -> Result<MilpInstance> {
    if items < 2 || bids < 2 {
        return Err(Error::Config(format!(
            "combinatorial auction needs items >= 2 and bids >= 2, got {items}/{bids}"
        )));
    }
    if max_bundle == 0 || max_bundle > items {
        return Err(Error::Config(format!(
            "max_bundle must be in [1, {items}], got {max_bundle}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let base_values: Vec<f64> = (0..items)
        .map(|_| rng.gen_int_inclusive(1, 100) as f64)
        .collect();

    let mut objective = Vec::with_capacity(bids);
    let mut item_bids: Vec<Vec<usize>> = vec![Vec::new(); items];
    for b in 0..bids {
        let size = 1 + rng.gen_index(max_bundle);
        let mut bundle = rng.sample_distinct(items, size);
        bundle.sort_unstable();
        let base: f64 = bundle.iter().map(|&i| base_values[i]).sum();
        let surplus = rng.gen_uniform(0.0, 0.3);
        objective.push(base * (1.0 + surplus));
        for &i in &bundle {
            item_bids[i].push(b);
        }
    }

    let rows = item_bids
        .iter()
        .filter(|bs| !bs.is_empty())
        .map(|bs| {
            let terms: Vec<(usize, f64)> = bs.iter().map(|&b| (b, 1.0)).collect();
            ConstraintRow::new(terms, Relation::Le, 1.0)
        })
        .collect();

    let inst = MilpInstance {
        name: format!("ca-{items}x{bids}-s{seed}"),
        num_vars: bids,
        num_binary: bids,
        objective,
        sense: Sense::Maximize,
        rows,
        lower: vec![0.0; bids],
        upper: vec![1.0; bids],
    };
    inst.validate()?;
    Ok(inst)
}

// --- serialization -----------------------------------------------------------
//
// Instances are stored as UTF-8 JSON (`.milp.json`). Infinite bounds are
// encoded as `null`; all finite reals round-trip bit-exactly.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    name: String,
    sense: Sense,
    p: usize,
    c: Vec<f64>,
    rows: Vec<ConstraintRow>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

/// Serializes an instance to its canonical JSON document.
pub fn write_instance(inst: &MilpInstance) -> Result<Vec<u8>> {
    inst.validate()?;
    let doc = InstanceDoc {
        name: inst.name.clone(),
        sense: inst.sense,
        p: inst.num_binary,
        c: inst.objective.clone(),
        rows: inst.rows.clone(),
        lower: inst
            .lower
            .iter()
            .map(|&l| if l == f64::NEG_INFINITY { None } else { Some(l) })
            .collect(),
        upper: inst
            .upper
            .iter()
            .map(|&u| if u == f64::INFINITY { None } else { Some(u) })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses an instance document, validating every structural invariant.
pub fn read_instance(bytes: &[u8]) -> Result<MilpInstance> {
    let doc: InstanceDoc = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("instance document: {e}")))?;
    let n = doc.c.len();
    let inst = MilpInstance {
        name: doc.name,
        num_vars: n,
        num_binary: doc.p,
        objective: doc.c,
        sense: doc.sense,
        rows: doc.rows,
        lower: doc
            .lower
            .into_iter()
            .map(|l| l.unwrap_or(f64::NEG_INFINITY))
            .collect(),
        upper: doc
            .upper
            .into_iter()
            .map(|u| u.unwrap_or(f64::INFINITY))
            .collect(),
    };
    inst.validate()
        .map_err(|e| Error::Parse(format!("instance document: {e}")))?;
    Ok(inst)
}
