//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the solver modules under test. Oracles read trees
//! through the node list and penalties through `eval` only.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use gbtopt::synthetic::{random_ensemble, EnsembleSpec};
use gbtopt::{Mixture, PenaltyModel, TreeEnsemble, TreeNode};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Sorted breakpoints per variable: the box ends plus every split value
/// strictly inside the box.
pub fn breakpoints(ens: &TreeEnsemble) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); ens.n()];
    for tree in ens.trees() {
        for node in tree.nodes() {
            if let TreeNode::Split { var, value, .. } = *node {
                if ens.lower()[var] < value && value < ens.upper()[var] {
                    rows[var].push(value);
                }
            }
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.sort_by(f64::total_cmp);
            row.dedup();
            let mut full = vec![ens.lower()[i]];
            full.extend(row);
            full.push(ens.upper()[i]);
            full
        })
        .collect()
}

/// Every cell `[lo, hi]` of the breakpoint grid, restricted to the index
/// window `window[i] = (a, b)` meaning intervals `a..b` of variable `i`.
pub fn cells(bp: &[Vec<f64>], window: Option<&[(usize, usize)]>) -> Vec<(Vec<f64>, Vec<f64>)> {
    let ranges: Vec<(usize, usize)> = match window {
        Some(w) => w.to_vec(),
        None => bp.iter().map(|r| (0, r.len() - 1)).collect(),
    };
    let mut out = Vec::new();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        let lo = idx.iter().enumerate().map(|(i, &j)| bp[i][j]).collect();
        let hi = idx.iter().enumerate().map(|(i, &j)| bp[i][j + 1]).collect();
        out.push((lo, hi));
        let mut i = 0;
        loop {
            if i == idx.len() {
                return out;
            }
            idx[i] += 1;
            if idx[i] < ranges[i].1 {
                break;
            }
            idx[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// Ensemble value on the open cell, read at its center.
pub fn cell_value(ens: &TreeEnsemble, lo: &[f64], hi: &[f64]) -> f64 {
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    ens.evaluate(&mid)
}

/// Minimum of a tree subset over a grid window, by cell enumeration.
pub fn subset_min(ens: &TreeEnsemble, trees: &[usize], bp: &[Vec<f64>], window: &[(usize, usize)]) -> f64 {
    cells(bp, Some(window))
        .iter()
        .map(|(lo, hi)| {
            let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
            trees.iter().map(|&t| ens.trees()[t].evaluate(&mid)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `xᵀAx + bᵀx + c` recovered from function values by polarization.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn probe(n: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let unit = |i: usize, s: f64| {
            let mut e = vec![0.0; n];
            e[i] = s;
            e
        };
        let c = f(&vec![0.0; n]);
        let plus: Vec<f64> = (0..n).map(|i| f(&unit(i, 1.0))).collect();
        let minus: Vec<f64> = (0..n).map(|i| f(&unit(i, -1.0))).collect();
        let b = (0..n).map(|i| 0.5 * (plus[i] - minus[i])).collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 0.5 * (plus[i] + minus[i]) - c;
            for j in 0..i {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e[j] = 1.0;
                let v = 0.5 * (f(&e) - plus[i] - plus[j] + c);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        Quadratic { a, b, c }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut v = self.c;
        for i in 0..n {
            v += self.b[i] * x[i];
            for j in 0..n {
                v += self.a[i][j] * x[i] * x[j];
            }
        }
        v
    }
}

/// Solves `m y = r` by Gaussian elimination with partial pivoting; `None`
/// when a pivot is negligible relative to the matrix scale.
pub fn solve_linear(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[p][k].abs() <= 1e-10 * scale {
            return None;
        }
        m.swap(k, p);
        r.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            r[i] -= f * r[k];
        }
    }
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * y[j]).sum();
        y[k] = (r[k] - s) / m[k][k];
    }
    Some(y)
}

/// Minimum of a convex quadratic over `[lo, hi]` by enumerating every face
/// (each coordinate at its lower bound, upper bound or free). Faces whose
/// reduced Hessian is singular are skipped; some minimizer always lies on a
/// face with a nonsingular reduced Hessian.
pub fn box_qp_min(q: &Quadratic, lo: &[f64], hi: &[f64]) -> (f64, Vec<f64>) {
    let n = lo.len();
    let mut best = (f64::INFINITY, lo.to_vec());
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            state.push(c % 3);
            c /= 3;
        }
        let mut x: Vec<f64> = (0..n)
            .map(|i| match state[i] {
                0 => lo[i],
                1 => hi[i],
                _ => 0.0,
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            // stationarity on the face: 2 A_FF x_F = -(b_F + 2 A_FB x_B)
            let m: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| 2.0 * q.a[i][j]).collect())
                .collect();
            let r: Vec<f64> = free
                .iter()
                .map(|&i| {
                    let fixed: f64 = (0..n)
                        .filter(|&j| state[j] != 2)
                        .map(|j| 2.0 * q.a[i][j] * x[j])
                        .sum();
                    -(q.b[i] + fixed)
                })
                .collect();
            let Some(y) = solve_linear(m, r) else { continue };
            for (k, &i) in free.iter().enumerate() {
                x[i] = y[k];
            }
            let inside = free.iter().all(|&i| {
                let slack = 1e-12 * (1.0 + hi[i].abs() + lo[i].abs());
                x[i] >= lo[i] - slack && x[i] <= hi[i] + slack
            });
            if !inside {
                continue;
            }
            for &i in &free {
                x[i] = x[i].clamp(lo[i], hi[i]);
            }
        }
        let v = q.eval(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// Global optimum of `penalty + ensemble`: per cell, the exact ensemble value
/// plus the penalty minimum over the cell's closure.
pub fn oracle_optimum(ens: &TreeEnsemble, penalty: &PenaltyModel) -> (f64, Vec<f64>) {
    let bp = breakpoints(ens);
    let all: Vec<(usize, usize)> = bp.iter().map(|r| (0, r.len() - 1)).collect();
    oracle_in_window(ens, penalty, &bp, &all)
}

/// [`oracle_optimum`] restricted to a window of grid intervals.
pub fn oracle_in_window(
    ens: &TreeEnsemble,
    penalty: &PenaltyModel,
    bp: &[Vec<f64>],
    window: &[(usize, usize)],
) -> (f64, Vec<f64>) {
    let q = Quadratic::probe(ens.n(), |x| penalty.eval(x));
    let mut best = (f64::INFINITY, Vec::new());
    for (lo, hi) in cells(bp, Some(window)) {
        // the expanded form cancels badly for large weights; score the
        // minimizer with the residual form instead
        let (_, x) = box_qp_min(&q, &lo, &hi);
        let v = penalty.eval(&x) + cell_value(ens, &lo, &hi);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// A random sub-window of the grid, at least one interval wide per variable.
pub fn random_window(rng: &mut ChaCha8Rng, bp: &[Vec<f64>]) -> Vec<(usize, usize)> {
    bp.iter()
        .map(|row| {
            let m = row.len() - 1;
            let a = rng.random_range(0..m);
            let b = rng.random_range(a + 1..=m);
            (a, b)
        })
        .collect()
}

pub fn domain_of(window: &[(usize, usize)]) -> gbtopt::NodeDomain {
    gbtopt::NodeDomain::new(window.iter().map(|&(a, b)| gbtopt::IndexRange::new(a, b)).collect())
}

pub fn window_of(domain: &gbtopt::NodeDomain) -> Vec<(usize, usize)> {
    domain.iter().map(|r| (r.lo, r.hi)).collect()
}

/// A random ensemble with at most the given size.
pub fn small_ensemble(rng: &mut ChaCha8Rng, max_n: usize, max_trees: usize, max_depth: usize) -> TreeEnsemble {
    random_ensemble(&EnsembleSpec {
        n: rng.random_range(1..=max_n),
        trees: rng.random_range(1..=max_trees),
        depth: rng.random_range(1..=max_depth),
        pool: rng.random_range(1..=4),
        leaf_prob: 0.2,
        lower: 0.0,
        upper: 10.0,
        seed: rng.random(),
    })
}

/// Leading `k` eigenpairs of a symmetric positive semidefinite matrix by
/// power iteration with deflation.
pub fn power_eigs(matrix: &[Vec<f64>], k: usize) -> Vec<(f64, Vec<f64>)> {
    let n = matrix.len();
    let mut m: Vec<Vec<f64>> = matrix.to_vec();
    let mut out = Vec::new();
    for r in 0..k {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i + r) as f64 * 0.37).collect();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            lambda = norm;
            if delta < 1e-15 {
                break;
            }
        }
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

/// A linear or quadratic expression read from an LP file.
#[derive(Debug, Clone, Default)]
pub struct LpExpr {
    pub linear: Vec<(f64, String)>,
    pub quadratic: Vec<(f64, String, String)>,
    pub constant: f64,
}

impl LpExpr {
    pub fn eval(&self, value: &dyn Fn(&str) -> f64) -> f64 {
        let lin: f64 = self.linear.iter().map(|(c, v)| c * value(v)).sum();
        let quad: f64 = self.quadratic.iter().map(|(c, a, b)| c * value(a) * value(b)).sum();
        self.constant + lin + quad
    }
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub label: String,
    pub expr: LpExpr,
    pub sense: String,
    pub rhs: f64,
}

/// The subset of the LP file format the exporter writes.
#[derive(Debug, Clone, Default)]
pub struct LpModel {
    pub objective: LpExpr,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<(f64, String, f64)>,
    pub binaries: Vec<String>,
}

fn is_var_name(s: &str) -> bool {
    let parts: Vec<&str> = s.split('_').collect();
    let arity = match parts[0] {
        "x" => 2,
        "y" | "z" => 3,
        _ => return false,
    };
    parts.len() == arity && parts[1..].iter().all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
}

fn number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_expr(text: &str, allow_quadratic: bool) -> Result<LpExpr, String> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let mut e = LpExpr::default();
    let mut i = 0;
    let mut sign = 1.0;
    let mut expect_term = true;
    let mut in_quad = false;
    let mut brackets = 0;
    while i < toks.len() {
        let t = toks[i];
        match t {
            "+" | "-" => {
                if expect_term && i > 0 && toks[i - 1] != "[" {
                    return Err(format!("operator {t:?} where a term belongs"));
                }
                sign = if t == "-" { -1.0 } else { 1.0 };
                expect_term = true;
                i += 1;
            }
            "[" => {
                if !allow_quadratic || in_quad || brackets > 0 || !expect_term {
                    return Err("misplaced quadratic block".into());
                }
                brackets += 1;
                in_quad = true;
                // the sign before the bracket multiplies the block; only "+"
                // is written
                if sign != 1.0 {
                    return Err("negated quadratic block".into());
                }
                i += 1;
            }
            "]" => {
                if !in_quad || expect_term || toks.get(i + 1) != Some(&"/") || toks.get(i + 2) != Some(&"2") {
                    return Err("quadratic block must close with \"] / 2\"".into());
                }
                in_quad = false;
                i += 3;
            }
            _ => {
                if !expect_term {
                    return Err(format!("missing operator before {t:?}"));
                }
                let (coef, at) = match number(t) {
                    Some(c) => (c, i + 1),
                    None => (1.0, i),
                };
                let name = toks.get(at).copied().filter(|n| is_var_name(n));
                match name {
                    None if at == i => return Err(format!("unexpected token {t:?}")),
                    None => {
                        if in_quad {
                            return Err("constant inside the quadratic block".into());
                        }
                        e.constant += sign * coef;
                        i = at;
                    }
                    Some(a) => match toks.get(at + 1).copied() {
                        Some("^") if in_quad => {
                            if toks.get(at + 2) != Some(&"2") {
                                return Err("only squares are allowed".into());
                            }
                            e.quadratic.push((0.5 * sign * coef, a.into(), a.into()));
                            i = at + 3;
                        }
                        Some("*") if in_quad => {
                            let b = toks.get(at + 2).copied().filter(|n| is_var_name(n)).ok_or("bad product")?;
                            e.quadratic.push((0.5 * sign * coef, a.into(), b.into()));
                            i = at + 3;
                        }
                        _ if in_quad => return Err(format!("linear term {a} inside the quadratic block")),
                        _ => {
                            e.linear.push((sign * coef, a.into()));
                            i = at + 1;
                        }
                    },
                }
                sign = 1.0;
                expect_term = false;
            }
        }
    }
    if expect_term && !toks.is_empty() {
        return Err("expression ends with an operator".into());
    }
    if in_quad {
        return Err("unclosed quadratic block".into());
    }
    Ok(e)
}

/// Parses an exported LP file, checking section order, labelled rows,
/// `x_i`/`y_i_j`/`z_t_l` names, numeric right-hand sides and that every
/// `x` has bounds and every `y` is binary.
pub fn parse_lp(text: &str) -> Result<LpModel, String> {
    let sections = ["Minimize", "Subject To", "Bounds", "Binaries", "End"];
    let mut at = 0usize;
    let mut model = LpModel::default();
    let mut labels = BTreeSet::new();
    let mut seen_objective = false;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let wrap = |m: String| format!("line {line}: {m}");
        if raw.starts_with('\\') || raw.trim().is_empty() {
            continue;
        }
        if !raw.starts_with(' ') {
            let pos = sections
                .iter()
                .position(|s| *s == raw)
                .ok_or_else(|| wrap(format!("unknown section {raw:?}")))?;
            if pos != at {
                return Err(wrap(format!("section {raw:?} out of order")));
            }
            at += 1;
            continue;
        }
        let body = raw.trim();
        match at.checked_sub(1).map(|s| sections[s]) {
            Some("Minimize") => {
                let rest = body.strip_prefix("obj:").ok_or_else(|| wrap("objective needs the obj label".into()))?;
                if std::mem::replace(&mut seen_objective, true) {
                    return Err(wrap("second objective line".into()));
                }
                model.objective = parse_expr(rest, true).map_err(wrap)?;
            }
            Some("Subject To") => {
                let (label, rest) = body.split_once(':').ok_or_else(|| wrap("row without label".into()))?;
                if !labels.insert(label.to_string()) {
                    return Err(wrap(format!("duplicate row {label}")));
                }
                let sense = ["<=", ">=", "="]
                    .into_iter()
                    .find(|s| rest.contains(&format!(" {s} ")))
                    .ok_or_else(|| wrap("no sense".into()))?;
                let (lhs, rhs) = rest.split_once(&format!(" {sense} ")).unwrap();
                let rhs = number(rhs.trim()).ok_or_else(|| wrap(format!("bad right-hand side {rhs:?}")))?;
                let expr = parse_expr(lhs, false).map_err(wrap)?;
                if expr.constant != 0.0 {
                    return Err(wrap("constant on the left-hand side".into()));
                }
                model.rows.push(LpRow {
                    label: label.into(),
                    expr,
                    sense: sense.into(),
                    rhs,
                });
            }
            Some("Bounds") => {
                let p: Vec<&str> = body.split_whitespace().collect();
                let ok = p.len() == 5 && p[1] == "<=" && p[3] == "<=" && is_var_name(p[2]);
                match (ok, number(p[0]), p.get(4).and_then(|s| number(s))) {
                    (true, Some(lo), Some(hi)) if lo <= hi => model.bounds.push((lo, p[2].into(), hi)),
                    _ => return Err(wrap(format!("bad bound {body:?}"))),
                }
            }
            Some("Binaries") => {
                if !is_var_name(body) || !body.starts_with('y') {
                    return Err(wrap(format!("bad binary {body:?}")));
                }
                model.binaries.push(body.into());
            }
            _ => return Err(wrap("content outside a section".into())),
        }
    }
    if at != sections.len() {
        return Err("missing sections".into());
    }
    if !seen_objective {
        return Err("no objective".into());
    }
    let bounded: BTreeSet<&str> = model.bounds.iter().map(|b| b.1.as_str()).collect();
    let binary: BTreeSet<&str> = model.binaries.iter().map(String::as_str).collect();
    let exprs = std::iter::once(&model.objective).chain(model.rows.iter().map(|r| &r.expr));
    for e in exprs {
        let names = e
            .linear
            .iter()
            .map(|t| t.1.as_str())
            .chain(e.quadratic.iter().flat_map(|t| [t.1.as_str(), t.2.as_str()]));
        for name in names {
            let declared = match name.as_bytes()[0] {
                b'x' => bounded.contains(name),
                b'y' => binary.contains(name),
                // leaf weights are continuous with the default [0, inf) bounds
                _ => true,
            };
            if !declared {
                return Err(format!("{name} is used but not declared"));
            }
        }
    }
    Ok(model)
}

impl LpModel {
    /// Largest violation over rows and bounds of an assignment by name.
    pub fn max_violation(&self, value: &dyn Fn(&str) -> f64) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for r in &self.rows {
            let lhs = r.expr.eval(value);
            let v = match r.sense.as_str() {
                "<=" => lhs - r.rhs,
                ">=" => r.rhs - lhs,
                _ => (lhs - r.rhs).abs(),
            };
            if v > worst.0 {
                worst = (v, r.label.clone());
            }
        }
        for (lo, name, hi) in &self.bounds {
            let x = value(name);
            let v = (lo - x).max(x - hi);
            if v > worst.0 {
                worst = (v, name.clone());
            }
        }
        worst
    }
}

/// Random orthonormal columns by Gram-Schmidt.
pub fn random_loadings(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for c in &cols {
            let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (x, a) in v.iter_mut().zip(c) {
                *x -= d * a;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    cols
}

/// A random penalty on the box `[lower, upper]^n`, sometimes with a
/// mixture term.
pub fn random_penalty(rng: &mut ChaCha8Rng, n: usize, lambda: f64, lower: f64, upper: f64) -> PenaltyModel {
    let mu = (0..n).map(|_| rng.random_range(lower..upper)).collect();
    let sigma = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
    let k = rng.random_range(0..n);
    let loadings = random_loadings(rng, n, k);
    let mixture = (rng.random_range(0..3) == 0).then(|| Mixture {
        indices: (0..n).filter(|_| rng.random::<bool>()).collect(),
        target: rng.random_range(lower..upper * n as f64),
    });
    PenaltyModel::new(mu, sigma, loadings, lambda, mixture).unwrap()
}

/// Small full instance: `n <= 3`, at most 8 trees of depth at most 3.
pub fn small_instance(seed: u64, lambda: f64) -> (TreeEnsemble, PenaltyModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let spec = EnsembleSpec {
        n,
        trees: rng.random_range(1..=8),
        depth: rng.random_range(1..=3),
        pool: rng.random_range(1..=4),
        leaf_prob: 0.2,
        lower: 0.0,
        upper: 10.0,
        seed: rng.random(),
    };
    let ens = random_ensemble(&spec);
    let penalty = random_penalty(&mut rng, n, lambda, spec.lower, spec.upper);
    (ens, penalty)
}
