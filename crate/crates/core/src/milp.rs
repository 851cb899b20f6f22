//! Mixed-integer export of the full problem in LP text format, and a checker
//! for solutions produced by external solvers.
//!
//! Variables: `x_i` continuous in the box; `y_i_j = 1` iff `x_i < v_{i,j}`
//! (binary, `j` from 1 to `m_i`); `z_t_l` the weight of leaf node `l` of tree
//! `t` (continuous, non-negative).
//!
//! Rows, per tree `t` and split node `s` on breakpoint `(i, j)`:
//!
//! * `leafsum_t`: `Σ_l z_t_l = 1`
//! * `left_t_s`: `Σ_{l left of s} z_t_l - y_i_j <= 0`
//! * `right_t_s`: `Σ_{l right of s} z_t_l + y_i_j <= 1`
//!
//! and per variable `i`:
//!
//! * `order_i_j`: `y_i_j - y_i_{j+1} <= 0`
//! * `linklo_i`: `x_i + Σ_j (v_j - v_{j-1}) y_i_j >= v_{m_i}`
//! * `linkhi_i`: `x_i + Σ_j (v_{j+1} - v_j) y_i_j <= v_{m_i+1}`

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::ensemble::TreeNode;
use crate::error::{Error, Result};
use crate::grid::{IndexRange, NodeDomain};
use crate::indexed::{IndexedEnsemble, IndexedNode};
use crate::penalty::PenaltyModel;

/// Feasibility tolerance of [`check_solution`].
pub const CHECK_TOL: f64 = 1e-6;

/// Column ids: `x` first, then `y` by `(i, j)`, then `z` by `(t, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpVarIndex {
    pub x_vars: Vec<usize>,
    pub y_vars: BTreeMap<(usize, usize), usize>,
    pub z_vars: BTreeMap<(usize, usize), usize>,
    names: Vec<String>,
}

impl MilpVarIndex {
    pub fn new(ens: &IndexedEnsemble) -> Self {
        let grid = ens.grid();
        let mut names = Vec::new();
        let x_vars = (0..grid.n())
            .map(|i| {
                names.push(format!("x_{i}"));
                names.len() - 1
            })
            .collect();
        let mut y_vars = BTreeMap::new();
        for i in 0..grid.n() {
            for j in 1..=grid.m(i) {
                names.push(format!("y_{i}_{j}"));
                y_vars.insert((i, j), names.len() - 1);
            }
        }
        let mut z_vars = BTreeMap::new();
        for (t, tree) in ens.source().trees().iter().enumerate() {
            for l in tree.leaf_ids() {
                names.push(format!("z_{t}_{l}"));
                z_vars.insert((t, l), names.len() - 1);
            }
        }
        MilpVarIndex {
            x_vars,
            y_vars,
            z_vars,
            names,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, column: usize) -> &str {
        &self.names[column]
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        let mut parts = name.split('_');
        let kind = parts.next()?;
        let nums: Vec<usize> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        match (kind, nums.as_slice()) {
            ("x", [i]) => self.x_vars.get(*i).copied(),
            ("y", [i, j]) => self.y_vars.get(&(*i, *j)).copied(),
            ("z", [t, l]) => self.z_vars.get(&(*t, *l)).copied(),
            _ => None,
        }
    }
}

/// Role of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    LeafSelection,
    LeftActivation,
    RightActivation,
    Ordering,
    LinkLower,
    LinkUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A linear row `Σ coef · column  sense  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub kind: RowKind,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    /// Amount by which `values` violate the row, zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs: f64 = self.terms.iter().map(|&(c, a)| a * values[c]).sum();
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// The linear rows of the formulation.
pub fn build_rows(ens: &IndexedEnsemble, index: &MilpVarIndex) -> Vec<Row> {
    let grid = ens.grid();
    let mut rows = Vec::new();
    for (t, (tree, source)) in ens.trees().iter().zip(ens.source().trees()).enumerate() {
        rows.push(Row {
            name: format!("leafsum_{t}"),
            kind: RowKind::LeafSelection,
            terms: source.leaf_ids().map(|l| (index.z_vars[&(t, l)], 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
        for (s, node) in tree.nodes().iter().enumerate() {
            let IndexedNode::Split { var, bp, left, right } = *node else {
                continue;
            };
            let y = index.y_vars[&(var, bp)];
            let side = |child: usize| -> Vec<(usize, f64)> {
                source
                    .subtree_leaves(child)
                    .into_iter()
                    .map(|l| (index.z_vars[&(t, l)], 1.0))
                    .collect()
            };
            let mut terms = side(left);
            terms.push((y, -1.0));
            rows.push(Row {
                name: format!("left_{t}_{s}"),
                kind: RowKind::LeftActivation,
                terms,
                sense: Sense::Le,
                rhs: 0.0,
            });
            let mut terms = side(right);
            terms.push((y, 1.0));
            rows.push(Row {
                name: format!("right_{t}_{s}"),
                kind: RowKind::RightActivation,
                terms,
                sense: Sense::Le,
                rhs: 1.0,
            });
        }
    }
    for i in 0..grid.n() {
        let m = grid.m(i);
        for j in 1..m {
            rows.push(Row {
                name: format!("order_{i}_{j}"),
                kind: RowKind::Ordering,
                terms: vec![(index.y_vars[&(i, j)], 1.0), (index.y_vars[&(i, j + 1)], -1.0)],
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
        let v = grid.row(i);
        let mut lo = vec![(index.x_vars[i], 1.0)];
        let mut hi = vec![(index.x_vars[i], 1.0)];
        for j in 1..=m {
            lo.push((index.y_vars[&(i, j)], v[j] - v[j - 1]));
            hi.push((index.y_vars[&(i, j)], v[j + 1] - v[j]));
        }
        rows.push(Row {
            name: format!("linklo_{i}"),
            kind: RowKind::LinkLower,
            terms: lo,
            sense: Sense::Ge,
            rhs: v[m],
        });
        rows.push(Row {
            name: format!("linkhi_{i}"),
            kind: RowKind::LinkUpper,
            terms: hi,
            sense: Sense::Le,
            rhs: v[m + 1],
        });
    }
    rows
}

struct Terms<'a> {
    out: &'a mut String,
    first: bool,
}

impl Terms<'_> {
    fn push(&mut self, coef: f64, var: &str) {
        if coef == 0.0 {
            return;
        }
        let sign = if coef < 0.0 { "-" } else { "+" };
        if self.first && coef > 0.0 {
            let _ = write!(self.out, " {} {var}", coef.abs());
        } else {
            let _ = write!(self.out, " {sign} {} {var}", coef.abs());
        }
        self.first = false;
    }
}

/// LP text of the full problem. Identical inputs give identical text.
pub fn milp_text(ens: &IndexedEnsemble, penalty: &PenaltyModel) -> Result<String> {
    let grid = ens.grid();
    if penalty.n() != grid.n() {
        return Err(Error::Dimension(format!(
            "penalty has {} variables, ensemble {}",
            penalty.n(),
            grid.n()
        )));
    }
    let index = MilpVarIndex::new(ens);
    let q = penalty.quadratic_form();
    let mut out = String::new();
    out.push_str("\\ gbtopt MILP export\n");
    let _ = writeln!(out, "\\ format version {}", crate::OUTPUT_FORMAT_VERSION);
    out.push_str("Minimize\n obj:");
    let mut terms = Terms {
        out: &mut out,
        first: true,
    };
    for (i, b) in q.b.iter().enumerate() {
        terms.push(*b, index.name(index.x_vars[i]));
    }
    for (&(t, l), &col) in &index.z_vars {
        let value = match ens.source().trees()[t].node(l) {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split { .. } => unreachable!("z columns are leaves"),
        };
        terms.push(value, index.name(col));
    }
    let mut quad = String::new();
    let mut qt = Terms {
        out: &mut quad,
        first: true,
    };
    let n = grid.n();
    for i in 0..n {
        for j in i..n {
            // [ ... ] / 2 halves every coefficient
            let coef = if i == j { 2.0 * q.a[i][i] } else { 4.0 * q.a[i][j] };
            let var = if i == j {
                format!("x_{i} ^ 2")
            } else {
                format!("x_{i} * x_{j}")
            };
            qt.push(coef, &var);
        }
    }
    let empty_linear = terms.first;
    if !quad.is_empty() {
        let joiner = if empty_linear { "" } else { " +" };
        let _ = write!(out, "{joiner} [{quad} ] / 2");
    }
    if q.c != 0.0 || (empty_linear && quad.is_empty()) {
        let sign = if q.c < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {}", q.c.abs());
    }
    out.push_str("\nSubject To\n");

    for row in build_rows(ens, &index) {
        let _ = write!(out, " {}:", row.name);
        let mut rt = Terms {
            out: &mut out,
            first: true,
        };
        for &(c, a) in &row.terms {
            rt.push(a, index.name(c));
        }
        let sense = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", row.rhs);
    }

    out.push_str("Bounds\n");
    for i in 0..n {
        let _ = writeln!(out, " {} <= x_{i} <= {}", grid.value(i, 0), grid.value(i, grid.m(i) + 1));
    }
    out.push_str("Binaries\n");
    for &col in index.y_vars.values() {
        let _ = writeln!(out, " {}", index.name(col));
    }
    out.push_str("End\n");
    Ok(out)
}

/// Writes [`milp_text`] to `path`.
pub fn export_milp(ens: &IndexedEnsemble, penalty: &PenaltyModel, path: &Path) -> Result<()> {
    let text = milp_text(ens, penalty)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Values of every column, indexed as in [`MilpVarIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
    /// Objective reported alongside the solution, if any.
    pub claimed_objective: Option<f64>,
}

/// The assignment a point induces: `y` by thresholding, `z` by traversal.
pub fn certificate_from_x(ens: &IndexedEnsemble, x: &[f64]) -> Assignment {
    let index = MilpVarIndex::new(ens);
    let grid = ens.grid();
    let mut values = vec![0.0; index.len()];
    for i in 0..grid.n() {
        values[index.x_vars[i]] = x[i];
    }
    for (&(i, j), &c) in &index.y_vars {
        values[c] = f64::from(x[i] < grid.value(i, j));
    }
    for (t, tree) in ens.source().trees().iter().enumerate() {
        values[index.z_vars[&(t, tree.leaf_for(x))]] = 1.0;
    }
    Assignment {
        values,
        claimed_objective: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub row: String,
    pub kind: RowKind,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub violations: Vec<Violation>,
    /// Binary columns further than the tolerance from 0 or 1.
    pub fractional: Vec<String>,
    /// Columns outside their bounds.
    pub out_of_bounds: Vec<String>,
    /// Penalty at `x` plus `Σ F z`.
    pub milp_objective: f64,
    /// Penalty at `x` plus the ensemble value of the cell `y` selects.
    pub native_objective: f64,
    /// `|milp - native|`, and against the claimed objective when given.
    pub discrepancy: f64,
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty() && self.fractional.is_empty() && self.out_of_bounds.is_empty()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_feasible() {
            writeln!(f, "feasible")?;
        } else {
            writeln!(f, "infeasible")?;
        }
        for v in &self.violations {
            writeln!(f, "  {} ({:?}) violated by {:e}", v.row, v.kind, v.amount)?;
        }
        for name in &self.fractional {
            writeln!(f, "  {name} is not binary")?;
        }
        for name in &self.out_of_bounds {
            writeln!(f, "  {name} is out of bounds")?;
        }
        writeln!(f, "milp objective   {}", self.milp_objective)?;
        writeln!(f, "native objective {}", self.native_objective)?;
        write!(f, "discrepancy      {:e}", self.discrepancy)
    }
}

/// Checks every row within [`CHECK_TOL`] and compares objectives.
pub fn check_solution(ens: &IndexedEnsemble, penalty: &PenaltyModel, assignment: &Assignment) -> Result<Verdict> {
    let index = MilpVarIndex::new(ens);
    let v = &assignment.values;
    if v.len() != index.len() {
        return Err(Error::Dimension(format!(
            "assignment has {} values, the formulation {} columns",
            v.len(),
            index.len()
        )));
    }
    let grid = ens.grid();
    let violations = build_rows(ens, &index)
        .into_iter()
        .filter_map(|row| {
            let amount = row.violation(v);
            (amount > CHECK_TOL).then_some(Violation {
                row: row.name,
                kind: row.kind,
                amount,
            })
        })
        .collect();
    let fractional = index
        .y_vars
        .values()
        .filter(|&&c| v[c].abs() > CHECK_TOL && (v[c] - 1.0).abs() > CHECK_TOL)
        .map(|&c| index.name(c).to_string())
        .collect();
    let mut out_of_bounds: Vec<String> = index
        .z_vars
        .values()
        .filter(|&&c| v[c] < -CHECK_TOL)
        .map(|&c| index.name(c).to_string())
        .collect();
    for i in 0..grid.n() {
        let xi = v[index.x_vars[i]];
        if xi < grid.value(i, 0) - CHECK_TOL || xi > grid.value(i, grid.m(i) + 1) + CHECK_TOL {
            out_of_bounds.push(index.name(index.x_vars[i]).to_string());
        }
    }

    let x: Vec<f64> = index.x_vars.iter().map(|&c| v[c]).collect();
    let pen = penalty.eval(&x);
    let leaf_sum: f64 = index
        .z_vars
        .iter()
        .map(|(&(t, l), &c)| ens.source().trees()[t].leaf_value(l).unwrap_or(0.0) * v[c])
        .sum();
    let cell = NodeDomain::new(
        (0..grid.n())
            .map(|i| {
                let below = (1..=grid.m(i)).filter(|&j| v[index.y_vars[&(i, j)]] < 0.5).count();
                IndexRange::new(below, below + 1)
            })
            .collect(),
    );
    let milp_objective = pen + leaf_sum;
    let native_objective = pen + ens.cell_value(&cell);
    let mut discrepancy = (milp_objective - native_objective).abs();
    if let Some(claimed) = assignment.claimed_objective {
        discrepancy = discrepancy.max((claimed - native_objective).abs());
    }
    Ok(Verdict {
        violations,
        fractional,
        out_of_bounds,
        milp_objective,
        native_objective,
        discrepancy,
    })
}

/// Reads `name,value` rows. A row named `objective` sets the claimed
/// objective; columns not listed are zero.
pub fn parse_solution_csv(ens: &IndexedEnsemble, text: &str) -> Result<Assignment> {
    let index = MilpVarIndex::new(ens);
    let mut values = vec![0.0; index.len()];
    let mut claimed = None;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Malformed(format!("solution row {}: {e}", line + 1)))?;
        if record.len() != 2 {
            return Err(Error::Malformed(format!(
                "solution row {} has {} fields, expected name,value",
                line + 1,
                record.len()
            )));
        }
        let (name, raw) = (&record[0], &record[1]);
        if line == 0 && name == "name" && raw == "value" {
            continue;
        }
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::Malformed(format!("solution row {}: bad number {raw:?}", line + 1)))?;
        if name == "objective" {
            claimed = Some(value);
            continue;
        }
        let col = index
            .column(name)
            .ok_or_else(|| Error::Malformed(format!("solution row {}: unknown column {name:?}", line + 1)))?;
        values[col] = value;
    }
    Ok(Assignment {
        values,
        claimed_objective: claimed,
    })
}

/// `name,value` rows for an assignment, in column order.
pub fn solution_csv(ens: &IndexedEnsemble, assignment: &Assignment) -> String {
    let index = MilpVarIndex::new(ens);
    let mut out = String::from("name,value\n");
    if let Some(obj) = assignment.claimed_objective {
        let _ = writeln!(out, "objective,{obj}");
    }
    for (c, v) in assignment.values.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", index.name(c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{Tree, TreeEnsemble};

    fn stump() -> IndexedEnsemble {
        let t = Tree::split(0, 2.0, Tree::leaf(1.0), Tree::leaf(3.0));
        IndexedEnsemble::new(&TreeEnsemble::new(1, vec![0.0], vec![5.0], vec![t]).unwrap())
    }

    #[test]
    fn stump_row_counts() {
        let ens = stump();
        let index = MilpVarIndex::new(&ens);
        let rows = build_rows(&ens, &index);
        let count = |k| rows.iter().filter(|r| r.kind == k).count();
        assert_eq!(count(RowKind::LeafSelection), 1);
        assert_eq!(count(RowKind::LeftActivation) + count(RowKind::RightActivation), 2);
        assert_eq!(count(RowKind::Ordering), 0);
        assert_eq!(count(RowKind::LinkLower) + count(RowKind::LinkUpper), 2);
        assert_eq!(index.y_vars.len(), 1);
        assert_eq!(index.z_vars.len(), 2);
    }

    #[test]
    fn stump_text() {
        let text = milp_text(&stump(), &PenaltyModel::zero(1)).unwrap();
        let expected = "\\ gbtopt MILP export
\\ format version 1
Minimize
 obj: 1 z_0_1 + 3 z_0_2
Subject To
 leafsum_0: 1 z_0_1 + 1 z_0_2 = 1
 left_0_0: 1 z_0_1 - 1 y_0_1 <= 0
 right_0_0: 1 z_0_2 + 1 y_0_1 <= 1
 linklo_0: 1 x_0 + 2 y_0_1 >= 2
 linkhi_0: 1 x_0 + 3 y_0_1 <= 5
Bounds
 0 <= x_0 <= 5
Binaries
 y_0_1
End
";
        assert_eq!(text, expected);
    }

    #[test]
    fn certificate_is_feasible() {
        let ens = stump();
        let pen = PenaltyModel::new(vec![1.0], vec![2.0], vec![], 0.5, None).unwrap();
        for x in [0.0, 1.9, 2.0, 4.5, 5.0] {
            let a = certificate_from_x(&ens, &[x]);
            let v = check_solution(&ens, &pen, &a).unwrap();
            assert!(v.is_feasible(), "{v}");
            assert!(v.discrepancy <= 1e-12);
            assert_eq!(v.native_objective, pen.eval(&[x]) + ens.source().evaluate(&[x]));
        }
    }

    #[test]
    fn inconsistent_leaf_is_named() {
        let ens = stump();
        let mut a = certificate_from_x(&ens, &[1.0]);
        // y says x < 2, z picks the right leaf
        a.values[2] = 0.0;
        a.values[3] = 1.0;
        let v = check_solution(&ens, &PenaltyModel::zero(1), &a).unwrap();
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].kind, RowKind::RightActivation);
        assert!(v.discrepancy > 1.0);
    }

    #[test]
    fn solution_csv_round_trip() {
        let ens = stump();
        let mut a = certificate_from_x(&ens, &[3.0]);
        a.claimed_objective = Some(3.0);
        let text = solution_csv(&ens, &a);
        assert_eq!(parse_solution_csv(&ens, &text).unwrap(), a);
        assert!(parse_solution_csv(&ens, "w_1,2\n").is_err());
        assert!(parse_solution_csv(&ens, "x_0,abc\n").is_err());
    }
}
