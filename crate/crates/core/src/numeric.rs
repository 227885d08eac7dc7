//! Dense linear algebra and a two-phase primal simplex.
//!
//! Every geometric question the pipeline asks (implicit equalities,
//! redundancy, facet intersections, per-region optimization of affine
//! dynamics) reduces to a small dense LP over free variables. The solver here
//! splits each free variable into a difference of non-negative parts, adds
//! slacks and artificials, and runs Dantzig pricing with a fallback to Bland's
//! rule once pivots stall.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default feasibility tolerance for LP outcomes.
pub const DEFAULT_TOL_FEAS: f64 = 1e-7;
/// Default pivot threshold for numerical rank.
pub const DEFAULT_TOL_RANK: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `optimize objective·x  s.t.  A x <= d,  E x = g`, with `x` free.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub a_le: Vec<Vec<f64>>,
    pub d_le: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub g_eq: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, sense: Sense) -> Self {
        LpProblem {
            objective,
            sense,
            a_le: Vec::new(),
            d_le: Vec::new(),
            a_eq: Vec::new(),
            g_eq: Vec::new(),
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(objective, Sense::Minimize)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(objective, Sense::Maximize)
    }

    pub fn with_le(mut self, rows: &[Vec<f64>], rhs: &[f64]) -> Self {
        self.a_le.extend_from_slice(rows);
        self.d_le.extend_from_slice(rhs);
        self
    }

    pub fn with_eq(mut self, rows: &[Vec<f64>], rhs: &[f64]) -> Self {
        self.a_eq.extend_from_slice(rows);
        self.g_eq.extend_from_slice(rhs);
        self
    }

    pub fn push_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_le.push(row);
        self.d_le.push(rhs);
    }

    pub fn push_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.g_eq.push(rhs);
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.a_le.len() != self.d_le.len() {
            return Err(Error::MalformedProblem(format!(
                "{} inequality rows but {} right-hand sides",
                self.a_le.len(),
                self.d_le.len()
            )));
        }
        if self.a_eq.len() != self.g_eq.len() {
            return Err(Error::MalformedProblem(format!(
                "{} equality rows but {} right-hand sides",
                self.a_eq.len(),
                self.g_eq.len()
            )));
        }
        for row in self.a_le.iter().chain(self.a_eq.iter()) {
            if row.len() != n {
                return Err(Error::MalformedProblem(format!(
                    "row of length {} in a problem over {} variables",
                    row.len(),
                    n
                )));
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.a_le.iter().flatten())
            .chain(self.d_le.iter())
            .chain(self.a_eq.iter().flatten())
            .chain(self.g_eq.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::MalformedProblem("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Largest violation of any constraint at `x`, each row measured relative
    /// to `max(1, |row|_inf)`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let le = self
            .a_le
            .iter()
            .zip(&self.d_le)
            .map(|(r, &d)| (dot(r, x) - d) / inf_norm(r).max(1.0));
        let eq = self
            .a_eq
            .iter()
            .zip(&self.g_eq)
            .map(|(r, &g)| (dot(r, x) - g).abs() / inf_norm(r).max(1.0));
        le.chain(eq).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub value: Option<f64>,
    pub point: Option<Vec<f64>>,
}

impl LpOutcome {
    fn infeasible() -> Self {
        LpOutcome {
            status: LpStatus::Infeasible,
            value: None,
            point: None,
        }
    }

    fn unbounded() -> Self {
        LpOutcome {
            status: LpStatus::Unbounded,
            value: None,
            point: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves `p` with the two-phase simplex.
///
/// `Unbounded` is an ordinary outcome. `NumericalFailure` is returned only
/// when both the Dantzig and the pure-Bland passes produce a point that fails
/// the feasibility re-check.
pub fn lp_solve(p: &LpProblem, tol_feas: f64) -> Result<LpOutcome> {
    p.validate()?;
    if !(tol_feas > 0.0) {
        return Err(Error::MalformedProblem("tol_feas must be positive".into()));
    }
    let first = solve_once(p, tol_feas, false);
    match first {
        Ok(out) if accept(p, &out, tol_feas) => Ok(out),
        _ => {
            let second = solve_once(p, tol_feas, true)?;
            if accept(p, &second, tol_feas) {
                Ok(second)
            } else {
                Err(Error::NumericalFailure(
                    "optimal point violates constraints after Bland fallback".into(),
                ))
            }
        }
    }
}

fn accept(p: &LpProblem, out: &LpOutcome, tol_feas: f64) -> bool {
    match &out.point {
        Some(x) => p.max_violation(x) <= tol_feas,
        None => true,
    }
}

/// Finds a point of `{A x <= d, E x = g}` over `R^dim`, or `None` if the
/// system is infeasible.
pub fn lp_feasible(
    dim: usize,
    le: (&[Vec<f64>], &[f64]),
    eq: (&[Vec<f64>], &[f64]),
    tol_feas: f64,
) -> Result<Option<Vec<f64>>> {
    let p = LpProblem::minimize(vec![0.0; dim])
        .with_le(le.0, le.1)
        .with_eq(eq.0, eq.1);
    let out = lp_solve(&p, tol_feas)?;
    Ok(out.point)
}

/// Numerical rank by Gaussian elimination with complete pivoting.
///
/// Rows are normalised to unit max-norm first, so the result does not depend
/// on row scaling.
pub fn matrix_rank(m: &[Vec<f64>], tol_rank: f64) -> usize {
    let mut rows: Vec<Vec<f64>> = m
        .iter()
        .filter_map(|r| {
            let s = inf_norm(r);
            (s > 0.0).then(|| r.iter().map(|v| v / s).collect())
        })
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut used_col = vec![false; cols];
    while rank < rows.len() {
        let mut best = (0.0, 0, 0);
        for (i, row) in rows.iter().enumerate().skip(rank) {
            for (j, &v) in row.iter().enumerate() {
                if !used_col[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 <= tol_rank {
            break;
        }
        let (_, pi, pj) = best;
        rows.swap(rank, pi);
        used_col[pj] = true;
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[pj] / pivot_row[pj];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Dense simplex tableau in equality form `T x = rhs`, `x >= 0`.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    /// Columns that may never enter the basis.
    barred: Vec<bool>,
    bland: bool,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let pv = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= pv;
        }
        self.rhs[r] /= pv;
        self.rows[r][c] = 1.0;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, p) in self.rows[i].iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= f * prhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-13 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (zj, t) in z.iter_mut().zip(&self.rows[i]) {
                    *zj -= cb * t;
                }
            }
        }
        z
    }

    /// Minimises `cost·x` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64]) -> Result<PhaseEnd> {
        let max_iter = 200 * (self.rows.len() + self.cols + 10);
        let mut degenerate_run = 0;
        let mut bland = self.bland;
        for _ in 0..max_iter {
            let z = self.reduced_costs(cost);
            let entering = if bland {
                (0..self.cols).find(|&j| !self.barred[j] && z[j] < -COST_TOL)
            } else {
                (0..self.cols)
                    .filter(|&j| !self.barred[j] && z[j] < -COST_TOL)
                    .min_by(|&a, &b| z[a].total_cmp(&z[b]))
            };
            let Some(c) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let better = if ratio < lr - 1e-12 {
                                true
                            } else if ratio <= lr + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[li]
                                } else {
                                    a > self.rows[li][c]
                                }
                            } else {
                                false
                            };
                            if better {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
        Err(Error::NumericalFailure(
            "simplex iteration limit reached".into(),
        ))
    }
}

fn solve_once(p: &LpProblem, tol_feas: f64, bland: bool) -> Result<LpOutcome> {
    let n = p.dim();
    // Normalised rows: (coefficients, rhs, is_inequality).
    let mut cons: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, &rhs, le) in p
        .a_le
        .iter()
        .zip(&p.d_le)
        .map(|(r, d)| (r, d, true))
        .chain(p.a_eq.iter().zip(&p.g_eq).map(|(r, g)| (r, g, false)))
    {
        let s = inf_norm(row);
        if s == 0.0 {
            let bad = if le {
                rhs < -tol_feas
            } else {
                rhs.abs() > tol_feas
            };
            if bad {
                return Ok(LpOutcome::infeasible());
            }
            continue;
        }
        cons.push((row.iter().map(|v| v / s).collect(), rhs / s, le));
    }

    let m = cons.len();
    let n_slack = cons.iter().filter(|c| c.2).count();
    // Column layout: [x+ (n) | x- (n) | slacks | artificials]
    let slack0 = 2 * n;
    let art0 = slack0 + n_slack;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut needs_art = Vec::with_capacity(m);
    let mut slack_of_row = vec![None; m];
    let mut next_slack = slack0;
    for (i, (coef, d, le)) in cons.iter().enumerate() {
        let sign = if *d < 0.0 { -1.0 } else { 1.0 };
        let mut row = Vec::with_capacity(art0);
        row.extend(coef.iter().map(|v| sign * v));
        row.extend(coef.iter().map(|v| -sign * v));
        row.resize(art0, 0.0);
        if *le {
            row[next_slack] = sign;
            slack_of_row[i] = Some(next_slack);
            next_slack += 1;
        }
        needs_art.push(!(*le && sign > 0.0));
        rows.push(row);
        rhs.push(sign * d);
    }
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let cols = art0 + n_art;
    let mut basis = vec![0; m];
    let mut next_art = art0;
    for i in 0..m {
        rows[i].resize(cols, 0.0);
        if needs_art[i] {
            rows[i][next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        } else {
            basis[i] = slack_of_row[i].expect("inequality row has a slack");
        }
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        cols,
        barred: vec![false; cols],
        bland,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(art0) {
            *c = 1.0;
        }
        t.optimize(&phase1)?;
        let infeas: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&b, _)| b >= art0)
            .map(|(_, &v)| v)
            .sum();
        if infeas > tol_feas {
            return Ok(LpOutcome::infeasible());
        }
        // Drive zero-valued artificials out of the basis; rows where that is
        // impossible are linearly dependent and are dropped.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art0 {
                let col = (0..art0)
                    .filter(|&j| t.rows[r][j].abs() > 1e-9)
                    .max_by(|&a, &b| t.rows[r][a].abs().total_cmp(&t.rows[r][b].abs()));
                match col {
                    Some(c) => {
                        t.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        for b in t.barred.iter_mut().skip(art0) {
            *b = true;
        }
    }

    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = sign * p.objective[j];
        cost[n + j] = -sign * p.objective[j];
    }
    let end = t.optimize(&cost)?;
    if let PhaseEnd::Unbounded = end {
        return Ok(LpOutcome::unbounded());
    }
    let mut values = vec![0.0; cols];
    for (i, &b) in t.basis.iter().enumerate() {
        values[b] = t.rhs[i];
    }
    let x: Vec<f64> = (0..n).map(|j| values[j] - values[n + j]).collect();
    let value = dot(&p.objective, &x);
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        value: Some(value),
        point: Some(x),
    })
}
